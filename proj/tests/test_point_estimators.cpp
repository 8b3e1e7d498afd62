#include <gtest/gtest.h>

#include "proxcausal/point_estimators.hpp"
#include "proxcausal/synthetic_dgp.hpp"

using namespace proxcausal;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

PointData simulate(const PointDgpSpec& s, std::size_t n, std::uint64_t seed) {
  return to_point_data(simulate_point_units(s, n, seed));
}

// Textbook normal-equations solve, independent of the QR/SVD kernel.
VectorXd normal_equations(const MatrixXd& d, const VectorXd& y) {
  return (d.transpose() * d).ldlt().solve(d.transpose() * y);
}

MatrixXd ones(Eigen::Index n) { return MatrixXd::Ones(n, 1); }

MatrixXd cat(const std::vector<MatrixXd>& blocks) {
  Eigen::Index c = 0;
  for (const auto& b : blocks) c += b.cols();
  MatrixXd out(blocks.front().rows(), c);
  c = 0;
  for (const auto& b : blocks) {
    out.middleCols(c, b.cols()) = b;
    c += b.cols();
  }
  return out;
}

}  // namespace

TEST(Ols, ConfoundedSlopeIsBiased) {
  PointDgpSpec s;
  auto p = simulate(s, 20000, 3);
  auto e = fit_ols_baseline(p);
  ASSERT_TRUE(e.contrast);
  EXPECT_GT(std::abs(e.contrast->value - s.beta_a), 10 * e.contrast->se);
  VectorXd oracle = normal_equations(cat({ones(p.n()), p.a, p.x}), p.y);
  EXPECT_NEAR(e.contrast->value, oracle(1), 1e-9);
}

TEST(GFormula, NoInteractionEqualsRegressionSlope) {
  auto p = simulate(PointDgpSpec{}, 3000, 4);
  GFormulaOptions o;
  o.adjust = {true, true, true};
  auto e = fit_standard_g_formula(p, o);
  VectorXd b = normal_equations(cat({ones(p.n()), p.a, p.x, p.w, p.z}), p.y);
  EXPECT_NEAR(e.contrast->value, b(1), 1e-9);
  EXPECT_NEAR(e.beta_at(1.0).value - e.beta_at(0.0).value, b(1), 1e-9);
}

TEST(GFormula, InteractionsAverageOverCovariates) {
  auto p = simulate(PointDgpSpec{}, 3000, 5);
  GFormulaOptions o;
  o.adjust = {true, false, false};
  o.interactions = true;
  auto e = fit_standard_g_formula(p, o);
  MatrixXd d = cat({ones(p.n()), p.a, p.x, MatrixXd(p.x.array().colwise() * p.a.array())});
  VectorXd b = normal_equations(d, p.y);
  // beta(1) - beta(0) = b_a + b_ax * mean(X)
  EXPECT_NEAR(e.contrast->value, b(1) + b(3) * p.x.col(0).mean(), 1e-9);
}

TEST(P2sls, MatchesTwoStageOracle) {
  auto p = simulate(PointDgpSpec{}, 5000, 6);
  auto e = fit_p2sls(p);
  const MatrixXd s1 = cat({ones(p.n()), p.z, p.a, p.x});
  const VectorXd g = normal_equations(s1, p.w.col(0));
  const MatrixXd dh = cat({ones(p.n()), p.a, s1 * g, p.x});
  const VectorXd b = normal_equations(dh, p.y);
  EXPECT_LE((e.coefficients - b).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_NEAR(e.eta_w(0), b(2), 1e-8);
  const double beta1 = b(0) + b(1) + b(2) * p.w.col(0).mean() + b(3) * p.x.col(0).mean();
  EXPECT_NEAR(e.beta_at(1.0).value, beta1, 1e-8);
  // structural residual variance
  const VectorXd r = p.y - cat({ones(p.n()), p.a, p.w, p.x}) * b;
  const MatrixXd cov = r.squaredNorm() / static_cast<double>(p.n() - 4) * (dh.transpose() * dh).inverse();
  EXPECT_NEAR(e.contrast->se, std::sqrt(cov(1, 1)), 1e-8);
}

TEST(P2sls, FirstStageFStatistic) {
  auto p = simulate(PointDgpSpec{}, 2000, 7);
  auto e = fit_p2sls(p);
  const auto n = static_cast<double>(p.n());
  const VectorXd w = p.w.col(0);
  const MatrixXd full = cat({ones(p.n()), p.z, p.a, p.x});
  const MatrixXd restricted = cat({ones(p.n()), p.a, p.x});
  const double rss_u = (w - full * normal_equations(full, w)).squaredNorm();
  const double rss_r = (w - restricted * normal_equations(restricted, w)).squaredNorm();
  const double f = (rss_r - rss_u) / (rss_u / (n - 4));
  ASSERT_EQ(e.diagnostics.first_stage_f.size(), 1u);
  EXPECT_NEAR(e.diagnostics.first_stage_f[0], f, 1e-6 * f);
  EXPECT_FALSE(e.diagnostics.weak_first_stage);
}

TEST(P2sls, WeakFirstStageWarns) {
  PointDgpSpec s;
  s.zeta_u = {0.0};
  s.alpha_z = {0.0};
  auto p = simulate(s, 500, 8);
  auto e = fit_p2sls(p);
  // F(1, 496) exceeds 10 with probability ~0.002 when Z is pure noise
  EXPECT_LT(e.diagnostics.first_stage_f[0], 10.0);
  EXPECT_TRUE(e.diagnostics.weak_first_stage);
  EXPECT_FALSE(e.diagnostics.warnings.empty());
}

TEST(P2sls, RecoversSlopeUnderConfounding) {
  PointDgpSpec s;
  auto p = simulate(s, 40000, 9);
  auto e = fit_p2sls(p);
  EXPECT_LT(std::abs(e.contrast->value - s.beta_a), 4 * e.contrast->se);
  EXPECT_LT(e.contrast->se, 0.1);
}

TEST(P2sls, EmptyZUsesObservedW) {
  auto p = simulate(PointDgpSpec{}, 2000, 10);
  p.z.resize(p.n(), 0);
  p.z_names.clear();
  auto e = fit_p2sls(p);
  const VectorXd b = normal_equations(cat({ones(p.n()), p.a, p.w, p.x}), p.y);
  EXPECT_LE((e.coefficients - b).cwiseAbs().maxCoeff(), 1e-9);
  GFormulaOptions o;
  o.adjust = {true, true, false};
  EXPECT_NEAR(e.contrast->value, fit_standard_g_formula(p, o).contrast->value, 1e-9);
}

TEST(P2sls, MoreProxiesThanInstrumentsIsRankDeficient) {
  PointDgpSpec s;
  s.d_w = 2;
  s.eta0 = {0.0, 0.0};
  s.eta_u = {1.0, 0.5};
  s.eta_x = {{0.3}, {0.1}};
  auto p = simulate(s, 1000, 11);
  auto e = fit_p2sls(p);
  EXPECT_TRUE(e.diagnostics.rank_deficient_stage2);
  EXPECT_TRUE(std::isfinite(e.contrast->value));
}

TEST(ProximalGComputation, LinearBridgeEqualsP2sls) {
  auto p = simulate(PointDgpSpec{}, 3000, 12);
  auto a = fit_p2sls(p);
  auto b = fit_proximal_g_computation(p);
  EXPECT_LE((a.coefficients - b.coefficients).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(a.contrast->value, b.contrast->value, 1e-12);
  EXPECT_NEAR(a.beta_at(0.0).value, b.beta_at(0.0).value, 1e-12);
}

TEST(ProximalGComputation, ZeroBridgeSlopeReducesToGFormulaOnX) {
  auto p = simulate(PointDgpSpec{}, 3000, 13);
  PgcompOptions o;
  o.constrain_eta_w_zero = true;
  auto e = fit_proximal_g_computation(p, o);
  GFormulaOptions g;
  g.adjust = {true, false, false};
  auto f = fit_standard_g_formula(p, g);
  EXPECT_NEAR(e.beta_at(0.0).value, f.beta_at(0.0).value, 1e-10);
  EXPECT_NEAR(e.beta_at(1.0).value, f.beta_at(1.0).value, 1e-10);
  EXPECT_EQ(e.eta_w.size(), 0);
}

namespace {

PointDgpSpec probit_spec() {
  PointDgpSpec s;
  s.treatment = TreatmentType::continuous;
  s.outcome = OutcomeType::binary;
  s.beta0 = 0.3;
  s.beta_a = -0.6;
  s.beta_u = 0.8;
  return s;
}

}  // namespace

TEST(ProximalGComputation, ProbitBridgeRecoversInterventionalMeans) {
  const auto s = probit_spec();
  const auto truth = point_ground_truth(s);
  auto p = simulate(s, 20000, 14);
  PgcompOptions o;
  o.bridge = BridgeForm::probit;
  o.grid = {-1.0, 0.0, 1.0};
  auto e = fit_proximal_g_computation(p, o);
  ASSERT_TRUE(e.diagnostics.gradient_norm);
  EXPECT_LT(*e.diagnostics.gradient_norm, 1e-6);
  for (double a : o.grid) {
    const auto& b = e.beta_at(a);
    EXPECT_TRUE(b.has_se());
    EXPECT_LT(std::abs(b.value - truth.beta(a)), 4 * b.se + 0.005) << "a=" << a;
  }
  // linear probability model adjusting for X alone is confounded
  auto naive = fit_ols_baseline(p);
  EXPECT_GT(std::abs(naive.beta_at(1.0).value - naive.beta_at(0.0).value - truth.contrast(0.0)), 0.02);
}

TEST(ProximalGComputation, ProbitGradientMatchesFiniteDifference) {
  auto p = simulate(probit_spec(), 500, 15);
  auto fs = fit_w_first_stage(p);
  const MatrixXd d = cat({ones(p.n()), p.a, fs.fitted, p.x});
  detail::ProbitBridgeObjective obj(d, p.y, 2, 1, fs.law.covariance, std::nullopt);
  VectorXd eta(4);
  eta << 0.2, -0.4, 0.7, 0.1;
  VectorXd g;
  obj(eta, g);
  for (Eigen::Index k = 0; k < 4; ++k) {
    VectorXd ep = eta, em = eta, dummy;
    ep(k) += 1e-6;
    em(k) -= 1e-6;
    EXPECT_NEAR(g(k), (obj(ep, dummy) - obj(em, dummy)) / 2e-6, 1e-6);
  }
}

TEST(ProximalGComputation, MonteCarloIntegrationAgreesWithClosedForm) {
  auto p = simulate(probit_spec(), 1500, 16);
  PgcompOptions o;
  o.bridge = BridgeForm::probit;
  auto cf = fit_proximal_g_computation(p, o);
  o.integration = Integration::monte_carlo;
  o.mc_draws = 1024;
  auto mc = fit_proximal_g_computation(p, o);
  EXPECT_NEAR(cf.beta_at(1.0).value, mc.beta_at(1.0).value, 0.01);
  EXPECT_NEAR(cf.eta_w(0), mc.eta_w(0), 0.05);
}

TEST(ProximalGComputation, ProbitRejectsNonBinaryOutcome) {
  auto p = simulate(PointDgpSpec{}, 200, 17);
  PgcompOptions o;
  o.bridge = BridgeForm::probit;
  try {
    fit_proximal_g_computation(p, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonBinaryColumn);
  }
}

TEST(ConfoundingTest, AsymptoticWaldMatchesHandComputation) {
  auto p = simulate(PointDgpSpec{}, 2000, 18);
  ConfoundingTestOptions o;
  o.use_bootstrap = false;
  auto t = test_confounding(p, o);
  auto e = fit_p2sls(p);
  const double z = e.eta_w(0) / e.eta_w_se(0);
  EXPECT_NEAR(t.statistic, z * z, 1e-8 * z * z);
  EXPECT_EQ(t.df, 1);
  EXPECT_LT(t.p_value, 1e-6);
}

TEST(ConfoundingTest, BootstrapIsReproducible) {
  auto p = simulate(PointDgpSpec{}, 400, 19);
  ConfoundingTestOptions o;
  o.bootstrap.B = 60;
  o.bootstrap.seed = 5;
  auto a = test_confounding(p, o);
  o.bootstrap.jobs = 3;
  auto b = test_confounding(p, o);
  EXPECT_EQ(a.statistic, b.statistic);
  EXPECT_GE(a.p_value, 0.0);
  EXPECT_LE(a.p_value, 1.0);
}

TEST(DatasetOverloads, RejectLongitudinalLayout) {
  auto sim = generate_longitudinal(default_longitudinal_spec(), 50);
  try {
    fit_p2sls(sim.data);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidLayout);
  }
}

TEST(DatasetOverloads, MatchPointDataPath) {
  PointDgpSpec s;
  s.seed = 21;
  auto sim = generate_point(s, 500);
  auto p = point_data(sim.data);
  EXPECT_EQ(fit_p2sls(sim.data).contrast->value, fit_p2sls(p).contrast->value);
}
