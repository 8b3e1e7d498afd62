#include <gtest/gtest.h>

#include "proxcausal/linear_kernel.hpp"
#include "proxcausal/synthetic_dgp.hpp"

using namespace proxcausal;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(PointDgp, SameSeedBitIdentical) {
  PointDgpSpec s;
  s.seed = 7;
  auto a = generate_point(s, 500);
  auto b = generate_point(s, 500);
  EXPECT_EQ(a.data, b.data);
  s.seed = 8;
  EXPECT_FALSE(generate_point(s, 500).data == a.data);
}

TEST(PointDgp, InvalidSpecs) {
  PointDgpSpec s;
  s.eta_u = {0.0};
  EXPECT_EQ(code_of([&] { generate_point(s, 10); }), ErrorCode::InvalidSpec);
  s = PointDgpSpec{};
  s.alpha_u = 0.0;
  s.alpha_z = {0.0};
  EXPECT_EQ(code_of([&] { generate_point(s, 10); }), ErrorCode::InvalidSpec);
  s = PointDgpSpec{};
  s.beta_x = {};
  EXPECT_EQ(code_of([&] { generate_point(s, 10); }), ErrorCode::InvalidSpec);
}

TEST(PointDgp, NoUColumnEmitted) {
  auto sim = generate_point(PointDgpSpec{}, 20);
  EXPECT_EQ(sim.data.names, (std::vector<std::string>{"Y", "A", "X1", "Z1", "W1"}));
  EXPECT_EQ(sim.truth.slopes[0], -1.8);
  EXPECT_DOUBLE_EQ(sim.truth.contrast(0.0), -1.8);
  EXPECT_DOUBLE_EQ(sim.truth.contrast(3.5), -1.8);
}

TEST(PointDgp, UnconfoundedOlsRecoversSlope) {
  PointDgpSpec s;
  s.beta_u = 0.0;
  auto p = point_data(generate_point(s, 10000).data);
  auto f = ols(hcat({ones_column(p.n()), p.a, p.x}), p.y);
  EXPECT_LE(std::abs(f.coefficients(1) - s.beta_a), 3.0 * f.standard_errors()(1));
}

TEST(PointDgp, ConfoundedOlsCarriesOmittedVariableBias) {
  PointDgpSpec s;
  auto u = simulate_point_units(s, 10000, s.seed);
  const auto one = ones_column(10000);
  auto naive = ols(hcat({one, u.a, u.x}), u.y);
  auto oracle = ols(hcat({one, u.a, u.x, u.u}), u.y);  // the DGP knows U
  // latent exchangeability: adjusting for U recovers beta_a
  EXPECT_LE(std::abs(oracle.coefficients(1) - s.beta_a), 3.0 * oracle.standard_errors()(1));
  // omitted-variable formula: bias = beta_u * (coefficient of A in U ~ A + X)
  auto aux = ols(hcat({one, u.a, u.x}), u.u);
  const double ovb = oracle.coefficients(3) * aux.coefficients(1);
  EXPECT_NEAR(naive.coefficients(1) - oracle.coefficients(1), ovb, 1e-9);
  EXPECT_GT(std::abs(naive.coefficients(1) - s.beta_a), 5.0 * naive.standard_errors()(1));
}

TEST(PointDgp, WCarriesNoPartialEffectOfA) {
  PointDgpSpec s;
  auto u = simulate_point_units(s, 10000, 3);
  auto f = ols(hcat({ones_column(10000), u.a, u.z, u.x, u.u}), u.w.col(0));
  EXPECT_LE(std::abs(f.coefficients(1)), 3.0 * f.standard_errors()(1));
}

TEST(PointDgp, ConsistencyUnderObservedTreatment) {
  for (auto t : {TreatmentType::binary, TreatmentType::continuous}) {
    PointDgpSpec s;
    s.treatment = t;
    auto u = simulate_point_units(s, 300, 11);
    auto again = simulate_point_units(s, 300, 11, u.a);
    for (Eigen::Index i = 0; i < 300; ++i) EXPECT_EQ(u.y(i), again.y(i));
  }
}

TEST(PointDgp, BinaryOutcomeTruthMatchesIntervention) {
  PointDgpSpec s;
  s.outcome = OutcomeType::binary;
  s.treatment = TreatmentType::continuous;
  s.beta0 = 0.3;
  s.beta_a = -0.6;
  s.beta_u = 0.8;
  s.u0 = 0.2;
  s.u_x = {0.4};
  const auto g = point_ground_truth(s);
  for (double a : {0.0, 1.0}) {
    auto mc = interventional_mean(s, a, 1000000, 99);
    EXPECT_LE(std::abs(mc.mean - g.beta(a)), 3.0 * mc.se) << "a=" << a;
  }
}

TEST(PointDgp, ContinuousTruthMatchesIntervention) {
  PointDgpSpec s;
  s.u0 = 0.7;
  const auto g = point_ground_truth(s);
  for (double a : {0.0, 1.0}) {
    auto mc = interventional_mean(s, a, 200000, 5);
    EXPECT_LE(std::abs(mc.mean - g.beta(a)), 3.0 * mc.se);
  }
}

TEST(LongitudinalDgp, RoundTripThroughDataset) {
  auto s = default_longitudinal_spec();
  auto units = simulate_panel_units(s, 50, s.seed);
  auto p = panel_data(to_dataset(units.data));
  EXPECT_EQ(p.y, units.data.y);
  for (int j = 0; j < 2; ++j) {
    EXPECT_EQ(p.a[static_cast<std::size_t>(j)], units.data.a[static_cast<std::size_t>(j)]);
    EXPECT_EQ(p.w[static_cast<std::size_t>(j)], units.data.w[static_cast<std::size_t>(j)]);
  }
  auto sim = generate_longitudinal(s, 50);
  EXPECT_EQ(sim.data.layout, Layout::longitudinal(2));
  EXPECT_FALSE(sim.data.has_column("U"));
}

TEST(LongitudinalDgp, InvalidSpecs) {
  auto s = default_longitudinal_spec();
  s.periods[1].w_u = {0.0};
  EXPECT_EQ(code_of([&] { generate_longitudinal(s, 10); }), ErrorCode::InvalidSpec);
  s = default_longitudinal_spec();
  s.periods[1].a_zbase = {0.0};
  EXPECT_EQ(code_of([&] { generate_longitudinal(s, 10); }), ErrorCode::InvalidSpec);
  s = default_longitudinal_spec();
  s.J = 1;
  EXPECT_EQ(code_of([&] { generate_longitudinal(s, 10); }), ErrorCode::InvalidSpec);
}

TEST(LongitudinalDgp, ConsistencyUnderObservedTreatment) {
  auto s = default_longitudinal_spec();
  auto u = simulate_panel_units(s, 300, 4);
  auto again = simulate_panel_units(s, 300, 4, u.data.a);
  EXPECT_EQ(u.data.y, again.data.y);
}

TEST(LongitudinalDgp, ClosedFormMatchesInterventionAllRegimes) {
  auto s = default_longitudinal_spec();
  s.periods[1].x_alag = {0.7};  // make the lagged-treatment path active
  const auto g = longitudinal_ground_truth(s);
  for (const auto& r : binary_regimes(2)) {
    auto mc = interventional_mean(s, r, 1000000, 17);
    EXPECT_LE(std::abs(mc.mean - g.beta(r)), 3.0 * mc.se) << r[0] << r[1];
  }
  EXPECT_LE(verify_ground_truth(default_longitudinal_spec(), 200000, 3), 3.0);
}

TEST(LongitudinalDgp, ProbitFirstTreatmentAlsoMatches) {
  auto s = default_longitudinal_spec();
  s.first_treatment = LongitudinalDgpSpec::FirstTreatment::probit;
  EXPECT_LE(verify_ground_truth(s, 200000, 8), 3.0);
}

TEST(LongitudinalDgp, ThreePeriodTruthDiffersFromTwoPeriod) {
  auto s2 = default_longitudinal_spec();
  s2.periods[1].x_alag = {0.8};
  auto s3 = s2;
  s3.J = 3;
  s3.y_a = {-1.0, -1.0, -1.0};
  s3.y_u = {1.5, 1.0, 1.0};
  s3.y_x = {{0.5}, {0.3}, {0.6}};
  const auto g2 = longitudinal_ground_truth(s2);
  const auto g3 = longitudinal_ground_truth(s3);
  auto mc3 = interventional_mean(s3, {1.0, 1.0, 0.0}, 400000, 2);
  auto mc2 = interventional_mean(s2, {1.0, 1.0}, 400000, 2);
  EXPECT_LE(std::abs(mc3.mean - g3.beta({1.0, 1.0, 0.0})), 3.0 * mc3.se);
  EXPECT_LE(std::abs(mc2.mean - g2.beta({1.0, 1.0})), 3.0 * mc2.se);
  EXPECT_GT(std::abs(mc3.mean - mc2.mean), 3.0 * std::hypot(mc2.se, mc3.se));
}

TEST(DiscreteDgp, NoConfoundingTruthIsCrudeContrast) {
  BinaryLawParams b;
  // U affects nothing downstream: A and Y do not depend on u
  b.p_a1 = {{{{0.3, 0.3}}, {{0.6, 0.6}}}};
  for (int u = 0; u < 2; ++u) {
    b.p_y1[0][static_cast<std::size_t>(u)] = {0.2, 0.5};
    b.p_y1[1][static_cast<std::size_t>(u)] = {0.4, 0.7};
  }
  b.p_w1 = {0.5, 0.5};
  auto l = build_discrete_law(b);
  const double crude = l.law.expected_outcome({{"A", 1}}) - l.law.expected_outcome({{"A", 0}});
  EXPECT_NEAR(l.beta[1] - l.beta[0], crude, 1e-12);
}

TEST(DiscreteDgp, ConfoundedTruthByEnumeration) {
  BinaryLawParams b;
  auto l = build_discrete_law(b);
  // 32-cell enumeration: beta(a) = sum_u E(Y | a, u) P(u)
  for (std::size_t a = 0; a < 2; ++a) {
    double beta = 0.0;
    for (std::size_t u = 0; u < 2; ++u) beta += l.law.expected_outcome({{"A", a}, {"U", u}}) * l.law.mass({{"U", u}});
    EXPECT_NEAR(l.beta[a], beta, 1e-12);
  }
  const double crude = l.law.expected_outcome({{"A", 1}}) - l.law.expected_outcome({{"A", 0}});
  EXPECT_GT(std::abs(crude - (l.beta[1] - l.beta[0])), 1e-3);
}

TEST(DiscreteDgp, PositivityViolation) {
  BinaryLawParams b;
  b.p_a1[0][1] = 1.0;
  EXPECT_EQ(code_of([&] { build_discrete_law(b); }), ErrorCode::DegenerateProbability);
}
