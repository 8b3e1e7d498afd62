#include <gtest/gtest.h>

#include <algorithm>

#include "proxcausal/proxy_allocation.hpp"

using namespace proxcausal;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Four candidates whose rankings are fixed by construction:
//   outcome side   c1 > c3 > c4 > c2
//   treatment side c1 > c2 > c4 > c3
Dataset engineered(std::size_t n = 4000, std::uint64_t seed = 11) {
  RawTable t{{"Y", "A", "X1", "c1", "c2", "c3", "c4"}, std::vector<std::vector<double>>(7)};
  CounterRng rng(seed, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.normal(), c1 = rng.normal(), c2 = rng.normal(), c3 = rng.normal(), c4 = rng.normal();
    const double a = 1.5 * c1 + 1.0 * c2 + 0.3 * c4 + 0.2 * x + rng.normal() > 0.0 ? 1.0 : 0.0;
    const double y = 1.0 + a + 1.5 * c1 + 0.6 * c3 + 0.2 * c4 + 0.3 * x + rng.normal();
    for (auto [k, v] : {std::pair{0, y}, {1, a}, {2, x}, {3, c1}, {4, c2}, {5, c3}, {6, c4}})
      t.columns[static_cast<std::size_t>(k)].push_back(v);
  }
  return validate_dataset(t, {{"Y", ColumnRole::outcome}, {"A", ColumnRole::treatment}, {"X1", ColumnRole::covariate_x}},
                          Layout::point());
}

const CandidateStats& stat(const AllocationResult& r, const std::string& nm) {
  return *std::find_if(r.ranking_table.begin(), r.ranking_table.end(), [&](const auto& c) { return c.name == nm; });
}

std::vector<std::string> sorted(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST(Allocation, RankingsMatchConstruction) {
  auto r = allocate_proxies(engineered(), {"c1", "c2", "c3", "c4"});
  EXPECT_GT(stat(r, "c1").outcome_strength, stat(r, "c3").outcome_strength);
  EXPECT_GT(stat(r, "c3").outcome_strength, stat(r, "c4").outcome_strength);
  EXPECT_GT(stat(r, "c4").outcome_strength, stat(r, "c2").outcome_strength);
  EXPECT_GT(stat(r, "c1").treatment_strength, stat(r, "c2").treatment_strength);
  EXPECT_GT(stat(r, "c2").treatment_strength, stat(r, "c4").treatment_strength);
  EXPECT_GT(stat(r, "c4").treatment_strength, stat(r, "c3").treatment_strength);
}

TEST(Allocation, OutcomeStatisticIsOlsTValue) {
  const auto d = engineered(1500, 3);
  auto r = allocate_proxies(d, {"c1", "c2", "c3", "c4"});
  const auto n = static_cast<Eigen::Index>(d.n_rows);
  MatrixXd x(n, 7);
  VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto I = static_cast<std::size_t>(i);
    y(i) = d.column("Y")[I];
    x.row(i) << 1.0, d.column("A")[I], d.column("X1")[I], d.column("c1")[I], d.column("c2")[I], d.column("c3")[I],
        d.column("c4")[I];
  }
  const MatrixXd xtx_inv = (x.transpose() * x).inverse();
  const VectorXd b = xtx_inv * x.transpose() * y;
  const double s2 = (y - x * b).squaredNorm() / static_cast<double>(n - 7);
  const char* names[] = {"c1", "c2", "c3", "c4"};
  for (int k = 0; k < 4; ++k) {
    const double t = std::abs(b(3 + k)) / std::sqrt(s2 * xtx_inv(3 + k, 3 + k));
    EXPECT_NEAR(stat(r, names[k]).outcome_strength, t, 1e-8 * t);
  }
}

TEST(Allocation, HandTracePrioritizeW) {
  // round 1: W takes c1 (tops both lists, policy W), Z takes c2
  // round 2: W takes c3, Z takes c4
  auto r = allocate_proxies(engineered(), {"c1", "c2", "c3", "c4"});
  EXPECT_EQ(r.w_set, (std::vector<std::string>{"c1", "c3"}));
  EXPECT_EQ(r.z_set, (std::vector<std::string>{"c2", "c4"}));
  ASSERT_EQ(r.trace.size(), 4u);
  EXPECT_EQ(r.trace[0], (std::pair<std::string, std::string>{"c1", "W"}));
  EXPECT_EQ(r.trace[1], (std::pair<std::string, std::string>{"c2", "Z"}));
  EXPECT_FALSE(r.tie_events.empty());
}

TEST(Allocation, HandTracePrioritizeZ) {
  // round 1: c1 goes to Z by policy, W takes c3; round 2: W takes c4, Z takes c2
  AllocationOptions o;
  o.tie_policy = TiePolicy::prioritize_z();
  auto r = allocate_proxies(engineered(), {"c1", "c2", "c3", "c4"}, o);
  EXPECT_EQ(r.z_set, (std::vector<std::string>{"c1", "c2"}));
  EXPECT_EQ(r.w_set, (std::vector<std::string>{"c3", "c4"}));
}

TEST(Allocation, InvariantToCandidateOrder) {
  const auto d = engineered();
  std::vector<std::string> c{"c1", "c2", "c3", "c4"};
  auto base = allocate_proxies(d, c);
  do {
    auto r = allocate_proxies(d, c);
    EXPECT_EQ(r.z_set, base.z_set);
    EXPECT_EQ(r.w_set, base.w_set);
  } while (std::next_permutation(c.begin(), c.end()));
}

TEST(Allocation, PartitionProperty) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::vector<CandidateStats> s;
    CounterRng rng(seed, 9);
    const auto m = 1 + rng.below(7);
    for (std::uint64_t k = 0; k < m; ++k) s.push_back({"v" + std::to_string(k), rng.uniform(), rng.uniform()});
    auto r = allocate_from_stats(s, TiePolicy::randomize(seed));
    EXPECT_EQ(r.z_set.size() + r.w_set.size(), m);
    std::vector<std::string> all = r.z_set;
    all.insert(all.end(), r.w_set.begin(), r.w_set.end());
    std::vector<std::string> want;
    for (const auto& c : s) want.push_back(c.name);
    EXPECT_EQ(sorted(all), sorted(want));
  }
}

TEST(Allocation, ForcedByRanking) {
  auto r = allocate_from_stats({{"y_only", 8.0, 0.1}, {"a_only", 0.1, 8.0}}, TiePolicy::prioritize_z());
  EXPECT_EQ(r.w_set, std::vector<std::string>{"y_only"});
  EXPECT_EQ(r.z_set, std::vector<std::string>{"a_only"});
  EXPECT_TRUE(r.tie_events.empty());
}

TEST(Allocation, EqualStrengthsBrokenByName) {
  auto r = allocate_from_stats({{"b", 1.0, 0.0}, {"a", 1.0, 0.0}, {"c", 0.0, 0.5}}, TiePolicy::prioritize_w());
  EXPECT_EQ(r.w_set, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(r.z_set, std::vector<std::string>{"c"});
}

TEST(Allocation, RandomizedTieIsSeedDeterministic) {
  const std::vector<CandidateStats> s{{"p", 5.0, 5.0}, {"q", 1.0, 2.0}};
  int to_w = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto a = allocate_from_stats(s, TiePolicy::randomize(seed));
    auto b = allocate_from_stats(s, TiePolicy::randomize(seed));
    EXPECT_EQ(a.w_set, b.w_set);
    if (a.w_set.front() == "p") ++to_w;
  }
  EXPECT_GT(to_w, 0);
  EXPECT_LT(to_w, 40);
}

TEST(Allocation, Errors) {
  const auto d = engineered(200);
  try {
    allocate_proxies(d, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyCandidates);
  }
  EXPECT_THROW(allocate_proxies(d, {"X1"}), Error);
  EXPECT_THROW(allocate_proxies(d, {"nope"}), Error);
}

TEST(Allocation, ApplySetsRoles) {
  auto d = engineered(300);
  auto r = allocate_proxies(d, {"c1", "c2", "c3", "c4"});
  auto e = apply_allocation(d, r);
  EXPECT_EQ(e.columns_with(ColumnRole::proxy_w), (std::vector<std::string>{"c1", "c3"}));
  EXPECT_EQ(e.columns_with(ColumnRole::proxy_z), (std::vector<std::string>{"c2", "c4"}));
}
