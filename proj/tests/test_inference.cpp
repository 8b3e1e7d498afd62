#include <gtest/gtest.h>

#include "proxcausal/inference.hpp"

using namespace proxcausal;
using Eigen::VectorXd;

namespace {

PointData column_data(const VectorXd& y) {
  PointData p;
  p.y = y;
  p.a = VectorXd::Zero(y.size());
  p.x.resize(y.size(), 0);
  p.z.resize(y.size(), 0);
  p.w.resize(y.size(), 0);
  return p;
}

VectorXd mean_of_y(const PointData& d) { return VectorXd::Constant(1, d.y.mean()); }

}  // namespace

TEST(Bootstrap, ConstantStatisticHasZeroSpread) {
  auto p = column_data(VectorXd::Constant(100, 3.25));
  BootstrapOptions o;
  o.B = 100;
  auto b = bootstrap(p, mean_of_y, o);
  EXPECT_EQ(b.se(0), 0.0);
  EXPECT_EQ(b.ci_lower(0), 3.25);
  EXPECT_EQ(b.ci_upper(0), 3.25);
}

TEST(Bootstrap, SampleMeanSeMatchesAnalytic) {
  CounterRng rng(5, 0);
  VectorXd y(1000);
  for (auto& v : y) v = rng.normal();
  BootstrapOptions o;
  o.B = 1000;
  o.seed = 3;
  auto b = bootstrap(column_data(y), mean_of_y, o);
  EXPECT_NEAR(b.se(0), 1.0 / std::sqrt(1000.0), 0.15 / std::sqrt(1000.0));
}

TEST(Bootstrap, DeterministicAndScheduleFree) {
  auto p = to_point_data(simulate_point_units(PointDgpSpec{}, 300, 4));
  BootstrapOptions o;
  o.B = 80;
  o.seed = 17;
  auto fit = [](const PointData& d) { return fit_p2sls(d).parameters(); };
  auto a = bootstrap(p, fit, o);
  auto b = bootstrap(p, fit, o);
  o.jobs = 4;
  auto c = bootstrap(p, fit, o);
  EXPECT_EQ(a.replicates, b.replicates);
  EXPECT_EQ(a.replicates, c.replicates);
}

TEST(Bootstrap, IntervalWidensAsAlphaShrinks) {
  auto p = to_point_data(simulate_point_units(PointDgpSpec{}, 300, 5));
  BootstrapOptions o;
  o.B = 200;
  double last = 0.0;
  for (double alpha : {0.5, 0.2, 0.1, 0.05, 0.01}) {
    o.alpha = alpha;
    auto b = bootstrap(p, [](const PointData& d) { return fit_p2sls(d).parameters(); }, o);
    const double w = b.ci_upper(0) - b.ci_lower(0);
    EXPECT_GE(w, last);
    last = w;
  }
}

TEST(Bootstrap, SubjectResamplesStayValid) {
  auto sim = generate_longitudinal(default_longitudinal_spec(), 40);
  for (std::uint64_t r = 0; r < 5; ++r) {
    const auto idx = bootstrap_indices(sim.data.n_subjects(), 9, r);
    const Dataset d = resample(sim.data, idx);
    EXPECT_NO_THROW(validate_dataset(d));
    EXPECT_EQ(d.n_subjects(), sim.data.n_subjects());
    const auto p = panel_data(d);
    // each resampled subject keeps its whole trajectory
    const auto orig = panel_data(sim.data);
    for (std::size_t i = 0; i < idx.size(); ++i)
      EXPECT_EQ(p.w[1](static_cast<Eigen::Index>(i), 0), orig.w[1](static_cast<Eigen::Index>(idx[i]), 0));
  }
}

TEST(Bootstrap, FailedReplicatesAreCountedAndGuarded) {
  auto p = column_data(VectorXd::LinSpaced(50, 0.0, 1.0));
  BootstrapOptions o;
  o.B = 100;
  auto flaky = [](const PointData& d) -> VectorXd {
    if (d.y.sum() > 25.5) fail(ErrorCode::WeakProxy, "synthetic failure");
    return VectorXd::Constant(1, d.y.mean());
  };
  try {
    bootstrap(p, flaky, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooManyFailedReplicates);
  }
  o.force = true;
  auto b = bootstrap(p, flaky, o);
  EXPECT_TRUE(b.unreliable);
  EXPECT_GT(b.n_failed, 5);
  EXPECT_EQ(b.replicates.rows() + b.n_failed, 100);
  o.B = 20;
  EXPECT_THROW(bootstrap(p, flaky, o), Error);
}

TEST(Bootstrap, AttachReplacesIntervals) {
  auto p = to_point_data(simulate_point_units(PointDgpSpec{}, 400, 6));
  auto e = fit_p2sls(p);
  BootstrapOptions o;
  o.B = 100;
  auto b = bootstrap_estimate(p, [](const PointData& d) { return fit_p2sls(d); }, o);
  attach_bootstrap(e, b);
  EXPECT_EQ(e.contrast->se, b.se(0));
  EXPECT_EQ(e.contrast->ci->lower, b.ci_lower(0));
  EXPECT_EQ(e.beta[1].ci->upper, b.ci_upper(2));
}

TEST(Replication, UnconfoundedSpecIsUnbiasedForAll) {
  PointDgpSpec s;
  s.beta_u = 0.0;
  ReplicationOptions o;
  o.n = 1000;
  o.reps = 60;
  o.seed = 1;
  o.estimators = {"ols", "g_formula", "p2sls", "pgcomp"};
  auto sum = run_replication_study(s, o);
  for (const auto& r : sum.rows) {
    EXPECT_LE(std::abs(r.bias), 3.5 * r.mc_se + 1e-12) << r.estimator << " " << r.target;
    EXPECT_EQ(r.n_ok, 60);
  }
  // the Wald intervals of the classical fits should roughly cover
  EXPECT_GT(sum.row("ols", "contrast").coverage, 0.8);
}

TEST(Replication, ConfoundedSpecSeparatesOlsAndP2sls) {
  ReplicationOptions o;
  o.n = 2000;
  o.reps = 50;
  o.estimators = {"ols", "p2sls"};
  auto sum = run_replication_study(PointDgpSpec{}, o);
  EXPECT_GT(std::abs(sum.row("ols", "contrast").bias), 5 * sum.row("ols", "contrast").mc_se);
  EXPECT_LE(std::abs(sum.row("p2sls", "contrast").bias), 3.5 * sum.row("p2sls", "contrast").mc_se);
}

TEST(Replication, SameSeedSameTable) {
  ReplicationOptions o;
  o.n = 300;
  o.reps = 50;
  o.seed = 8;
  o.estimators = {"p2sls", "ols"};
  const auto a = summary_csv(run_replication_study(PointDgpSpec{}, o));
  const auto b = summary_csv(run_replication_study(PointDgpSpec{}, o));
  o.jobs = 3;
  const auto c = summary_csv(run_replication_study(PointDgpSpec{}, o));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
  EXPECT_NE(a.find(",beta(0),"), std::string::npos);
}

TEST(Replication, LongitudinalTargetsEveryRegime) {
  ReplicationOptions o;
  o.n = 1000;
  o.reps = 50;
  o.estimators = {"recursive", "ipw"};
  auto sum = run_replication_study(default_longitudinal_spec(), o);
  EXPECT_EQ(sum.rows.size(), 2u * 5u);
  EXPECT_NO_THROW(sum.row("recursive", "beta(1,0)"));
  EXPECT_TRUE(std::isnan(sum.row("recursive", "contrast").coverage));
}

TEST(Replication, RejectsTooFewRepsAndUnknownEstimators) {
  ReplicationOptions o;
  o.reps = 10;
  o.estimators = {"p2sls"};
  EXPECT_THROW(run_replication_study(PointDgpSpec{}, o), Error);
  o.reps = 50;
  o.estimators = {"nope"};
  EXPECT_THROW(run_replication_study(PointDgpSpec{}, o), Error);
}
