#include <gtest/gtest.h>

#include <numeric>

#include "proxcausal/discrete_law.hpp"
#include "proxcausal/synthetic_dgp.hpp"

using namespace proxcausal;

namespace {

// Joint law over (Z, W, A, Y) with W = Z deterministically.
DiscreteJointLaw w_equals_z() {
  std::vector<CategoricalVariable> v{{"Z", 2}, {"W", 2}, {"A", 2}, {"Y", 2}};
  std::vector<double> p(16, 0.0);
  for (int z = 0; z < 2; ++z)
    for (int a = 0; a < 2; ++a)
      for (int y = 0; y < 2; ++y) p[static_cast<std::size_t>(z * 8 + z * 4 + a * 2 + y)] = 1.0 / 8.0;
  return DiscreteJointLaw(v, p);
}

// W independent of Z given A.
DiscreteJointLaw w_indep_z() {
  std::vector<CategoricalVariable> v{{"Z", 2}, {"W", 2}, {"A", 2}, {"Y", 2}};
  std::vector<double> p;
  const double pz[2]{0.3, 0.7}, pw[2]{0.6, 0.4};
  for (int z = 0; z < 2; ++z)
    for (int w = 0; w < 2; ++w)
      for (int a = 0; a < 2; ++a)
        for (int y = 0; y < 2; ++y) p.push_back(pz[z] * pw[w] * 0.5 * 0.5);
  return DiscreteJointLaw(v, p);
}

}  // namespace

TEST(Law, RejectsBadTables) {
  EXPECT_THROW(DiscreteJointLaw({{"A", 2}}, {0.5, 0.6}), Error);
  EXPECT_THROW(DiscreteJointLaw({{"A", 2}}, {1.0}), Error);
  EXPECT_THROW(DiscreteJointLaw({{"A", 2}}, {1.5, -0.5}), Error);
}

TEST(RankCheck, PermutationMatrixFullRank) {
  auto r = completeness_rank_check(w_equals_z(), 0);
  EXPECT_EQ(r.rank, 2u);
  EXPECT_TRUE(r.passes);
}

TEST(RankCheck, IndependenceGivesRankOne) {
  auto r = completeness_rank_check(w_indep_z(), 1);
  EXPECT_EQ(r.rank, 1u);
  EXPECT_FALSE(r.passes);
}

TEST(RankCheck, RandomLawMatchesBruteForceSvd) {
  auto q = random_law_params(5, 2, 3, 3);
  auto law = build_categorical_law(q).law;
  // brute-force matrix straight from the joint table
  Eigen::MatrixXd m(3, 3);
  const auto& p = law.probabilities();
  for (std::size_t z = 0; z < 3; ++z) {
    double pz = 0.0;
    std::vector<double> pw(3, 0.0);
    for (std::size_t c = 0; c < p.size(); ++c) {
      if (law.category(c, 1) != z || law.category(c, 3) != 1) continue;
      pz += p[c];
      pw[law.category(c, 2)] += p[c];
    }
    for (std::size_t w = 0; w < 3; ++w) m(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(z)) = pw[w] / pz;
  }
  EXPECT_LE((m - proxy_conditional_matrix(law, 1, std::nullopt)).cwiseAbs().maxCoeff(), 1e-14);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < 3; ++i)
    if (svd.singularValues()(i) > 1e-10 * svd.singularValues()(0)) ++rank;
  auto r = completeness_rank_check(law, 1);
  EXPECT_EQ(r.rank, rank);
  EXPECT_EQ(r.rank, 2u);  // W and Z only see U through d_u = 2 categories
  EXPECT_TRUE(r.passes);
}

TEST(RankCheck, InvariantToRelabeling) {
  auto q = random_law_params(9, 3, 3, 3);
  auto base = completeness_rank_check(build_categorical_law(q).law, 0);
  std::swap(q.p_z[0][0], q.p_z[0][2]);
  std::swap(q.p_z[1][0], q.p_z[1][2]);
  std::swap(q.p_z[2][0], q.p_z[2][2]);
  for (auto& r : q.p_a1[0]) std::swap(r[0], r[2]);
  for (auto& r : q.p_w) std::swap(r[0], r[1]);
  for (auto& ra : q.p_y1[0])
    for (auto& r : ra) std::swap(r[0], r[1]);
  auto relabeled = completeness_rank_check(build_categorical_law(q).law, 0);
  EXPECT_EQ(base.rank, relabeled.rank);
  EXPECT_LE((base.singular_values - relabeled.singular_values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(RankCheck, ZeroMassCell) {
  std::vector<CategoricalVariable> v{{"Z", 2}, {"W", 2}, {"A", 2}};
  std::vector<double> p(8, 0.0);
  p[0] = 0.5;
  p[4] = 0.5;  // A = 0 always
  try {
    completeness_rank_check(DiscreteJointLaw(v, p), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroMassCell);
  }
}

TEST(Law, ColumnsMarginalizeToWGivenA) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto law = build_categorical_law(random_law_params(seed, 2, 3, 4, 2)).law;
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t x = 0; x < 2; ++x) {
        auto m = proxy_conditional_matrix(law, a, x);
        Eigen::VectorXd pz(3);
        for (std::size_t z = 0; z < 3; ++z)
          pz(static_cast<Eigen::Index>(z)) = law.conditional({{"Z", z}}, {{"A", a}, {"X", x}});
        Eigen::VectorXd pw = m * pz;
        for (std::size_t w = 0; w < 4; ++w)
          EXPECT_NEAR(pw(static_cast<Eigen::Index>(w)), law.conditional({{"W", w}}, {{"A", a}, {"X", x}}), 1e-12);
      }
  }
}
