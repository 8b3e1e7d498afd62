#include <gtest/gtest.h>

#include "proxcausal/bridge_solvers.hpp"

using namespace proxcausal;
using Eigen::VectorXd;

namespace {

BinaryLawParams random_binary(std::uint64_t seed) {
  CounterRng rng(seed, 77);
  auto p = [&] { return 0.05 + 0.9 * rng.uniform(); };
  BinaryLawParams b;
  b.p_u1 = p();
  for (auto& v : b.p_z1) v = p();
  for (auto& v : b.p_w1) v = p();
  for (auto& r : b.p_a1)
    for (auto& v : r) v = p();
  for (auto& ra : b.p_y1)
    for (auto& r : ra)
      for (auto& v : r) v = p();
  return b;
}

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST(BinaryBridge, MatchesEnumerationOnRandomLaws) {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    auto l = build_discrete_law(random_binary(seed));
    for (std::size_t a = 0; a < 2; ++a) {
      auto h = solve_binary_bridge(l.law, a);
      EXPECT_LE((h.slice_tables[0] - h.slice_tables[1]).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_LE(h.residual, 1e-10);
      EXPECT_NEAR(proximal_g_formula(l.law, a, DiscreteSolver::binary), l.beta[a], 1e-10) << "seed " << seed;
    }
  }
}

TEST(BinaryBridge, DegenerateUIsWeakProxy) {
  BinaryLawParams b;
  b.p_u1 = 0.999999;  // nearly degenerate U still fine
  build_discrete_law(b);
  // U with one category: W independent of Z given A
  CategoricalLawParams q = to_categorical(BinaryLawParams{});
  q.d_u = 1;
  q.p_u = {{1.0}};
  q.p_z = {q.p_z[0]};
  q.p_w = {q.p_w[0]};
  q.p_a1 = {{q.p_a1[0][0]}};
  q.p_y1 = {{{q.p_y1[0][0][0]}, {q.p_y1[0][1][0]}}};
  auto l = build_categorical_law(q);
  try {
    solve_binary_bridge(l.law, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::WeakProxy);
  }
}

TEST(CategoricalBridge, AgreesWithBinaryClosedForm) {
  for (std::uint64_t seed = 30; seed < 40; ++seed) {
    auto l = build_discrete_law(random_binary(seed));
    for (std::size_t a = 0; a < 2; ++a) {
      auto hb = solve_binary_bridge(l.law, a);
      auto hc = solve_categorical_bridge(l.law, a);
      EXPECT_FALSE(hc.rank_deficient);
      EXPECT_LE((hb.h - hc.h).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(CategoricalBridge, RankDeficientSolutionsGiveSameBeta) {
  auto l = build_categorical_law(random_law_params(3, 2, 2, 3));
  for (std::size_t a = 0; a < 2; ++a) {
    auto h = solve_categorical_bridge(l.law, a);
    EXPECT_TRUE(h.rank_deficient);
    EXPECT_LE(h.residual, 1e-8);
    auto null = bridge_null_space(l.law, a);
    ASSERT_EQ(null.cols(), 1);
    VectorXd other = h.h + 2.5 * null.col(0);
    EXPECT_LE(bridge_residual(l.law, a, std::nullopt, other), 1e-8);
    const double b1 = proximal_g_formula(l.law, {h.h});
    const double b2 = proximal_g_formula(l.law, {other});
    EXPECT_NEAR(b1, b2, 1e-10);
    EXPECT_NEAR(b1, l.beta[a], 1e-10);
  }
}

TEST(CategoricalBridge, WithCovariateMatchesTruth) {
  auto l = build_categorical_law(random_law_params(12, 2, 3, 3, 2));
  for (std::size_t a = 0; a < 2; ++a) EXPECT_NEAR(proximal_g_formula(l.law, a), l.beta[a], 1e-10);
}

TEST(CategoricalBridge, InconsistentSystemHasNoSolution) {
  // d_u = 3 > d_w = 2: E(Y|a,z) need not lie in the range of P(W|a,z)
  auto l = build_categorical_law(random_law_params(4, 3, 3, 2));
  try {
    solve_categorical_bridge(l.law, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoSolution);
  }
}

TEST(Bridge, ReducesToGFormulaWithoutZ) {
  // Exchangeable given W: A depends on W only, Y on (A, W).
  std::vector<CategoricalVariable> v{{"W", 3}, {"A", 2}, {"Y", 2}};
  const double pw[3]{0.2, 0.5, 0.3}, pa[3]{0.3, 0.6, 0.8};
  const double py[2][3]{{0.1, 0.4, 0.6}, {0.3, 0.5, 0.9}};
  std::vector<double> p;
  for (int w = 0; w < 3; ++w)
    for (int a = 0; a < 2; ++a)
      for (int y = 0; y < 2; ++y)
        p.push_back(pw[w] * (a ? pa[w] : 1 - pa[w]) * (y ? py[a][w] : 1 - py[a][w]));
  DiscreteJointLaw law(v, p);
  for (std::size_t a = 0; a < 2; ++a) {
    double g = 0.0;
    for (int w = 0; w < 3; ++w) g += py[a][w] * pw[w];
    EXPECT_NEAR(proximal_g_formula(law, a, DiscreteSolver::g_formula), g, 1e-12);
  }
}

TEST(Bridge, OutcomeScaleEquivariance) {
  // Scale the expected outcome by c by mixing Y with a point mass at 0:
  // P(Y=1|.) -> c P(Y=1|.).
  auto q = random_law_params(21, 2, 2, 2);
  const double c = 0.4;
  auto scaled = q;
  for (auto& ra : scaled.p_y1[0])
    for (auto& r : ra)
      for (auto& v : r) v *= c;
  auto l1 = build_categorical_law(q);
  auto l2 = build_categorical_law(scaled);
  for (std::size_t a = 0; a < 2; ++a) {
    auto h1 = solve_categorical_bridge(l1.law, a);
    auto h2 = solve_categorical_bridge(l2.law, a);
    EXPECT_LE((h2.h - c * h1.h).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(proximal_g_formula(l2.law, a), c * proximal_g_formula(l1.law, a), 1e-10);
  }
}

TEST(ProbitBridge, NoAttenuationCases) {
  BridgeFunction h;
  h.form = BridgeFunction::Form::probit_linked;
  h.n_a = 1;
  h.n_w = 1;
  h.n_x = 0;
  h.eta = vec({0.2, -0.5, 0.0});
  h.sigma = Eigen::MatrixXd::Constant(1, 1, 2.0);
  EXPECT_EQ(h.phi(), 1.0);
  EXPECT_EQ(probit_bridge_mean(h, vec({0.7}), vec({1.0}), VectorXd()), stats::normal_cdf(0.2 - 0.5));
  h.eta = vec({0.2, -0.5, 1.3});
  h.sigma = Eigen::MatrixXd::Zero(1, 1);
  EXPECT_EQ(h.phi(), 1.0);
  EXPECT_EQ(probit_bridge_mean(h, vec({0.7}), vec({1.0}), VectorXd()), stats::normal_cdf(0.2 - 0.5 + 1.3 * 0.7));
}

TEST(ProbitBridge, ClosedFormMatchesMonteCarlo) {
  BridgeFunction h;
  h.form = BridgeFunction::Form::probit_linked;
  h.n_w = 1;
  h.eta = vec({0.5, 0.0, 1.0});  // linear predictor 0.5 at w_mean = 0
  h.sigma = Eigen::MatrixXd::Constant(1, 1, 1.0);
  const double closed = probit_bridge_mean(h, vec({0.0}), vec({0.0}), VectorXd());
  EXPECT_NEAR(closed, stats::normal_cdf(0.5 / std::sqrt(2.0)), 1e-15);
  auto mc = probit_bridge_mean_mc(h, vec({0.0}), vec({0.0}), VectorXd(), 1000000, 3);
  EXPECT_LE(std::abs(mc.mean - closed), 3.0 * mc.se);
}

TEST(ProbitBridge, FirstStageOverload) {
  GaussianWLaw law;
  law.coefficients = Eigen::MatrixXd(4, 1);
  law.coefficients << 0.1, 0.8, -0.3, 0.5;  // (1, z, a, x)
  law.covariance = Eigen::MatrixXd::Constant(1, 1, 0.5);
  BridgeFunction h;
  h.form = BridgeFunction::Form::probit_linked;
  h.n_w = 1;
  h.n_x = 1;
  h.eta = vec({0.1, -0.4, 0.9, 0.2});
  h.sigma = law.covariance;
  const VectorXd z = vec({1.2}), a = vec({1.0}), x = vec({-0.5});
  const double m = 0.1 + 0.8 * 1.2 - 0.3 + 0.5 * -0.5;
  EXPECT_DOUBLE_EQ(probit_bridge_mean(h, law, z, a, x), probit_bridge_mean(h, vec({m}), a, x));
}
