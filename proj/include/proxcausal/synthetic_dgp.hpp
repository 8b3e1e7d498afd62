#pragma once

// Structural data-generating processes with a latent confounder U and
// analytically known causal effects. This is the only place U exists: it is
// generated and used internally but never written to a Dataset.
//
// All parameter defaults are our own constructions; they are not taken from
// any published simulation.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "proxcausal/data_model.hpp"
#include "proxcausal/discrete_law.hpp"
#include "proxcausal/errors.hpp"
#include "proxcausal/estimate.hpp"
#include "proxcausal/rng.hpp"
#include "proxcausal/stats.hpp"

namespace proxcausal {

enum class TreatmentType { continuous, binary };
enum class OutcomeType { continuous, binary };

/// Shape of a standardized (mean 0, variance 1) noise term.
enum class NoiseShape { gaussian, student_t3, skewed };

inline double draw_noise(CounterRng& rng, NoiseShape shape) {
  switch (shape) {
    case NoiseShape::gaussian: return rng.normal();
    case NoiseShape::student_t3: {
      const double z = rng.normal();
      double chi2 = 0.0;
      for (int k = 0; k < 3; ++k) {
        const double e = rng.normal();
        chi2 += e * e;
      }
      return z / std::sqrt(chi2 / 3.0) * std::sqrt(1.0 / 3.0);  // var(t3) = 3
    }
    case NoiseShape::skewed: {
      const double e = rng.exponential() - 1.0;  // centered Exp(1)
      rng.normal();                              // keep stream positions aligned with the other shapes
      return e;
    }
  }
  return 0.0;
}

/// Linear function of the history: the map a -> beta(a) (point) or
/// abar -> beta(abar) (longitudinal), or a probit link of it.
struct GroundTruth {
  enum class Form { linear, probit };
  Form form = Form::linear;
  double intercept = 0.0;
  std::vector<double> slopes;  // one per treatment (period)
  double scale = 1.0;          // probit only: beta(a) = Phi((intercept + slopes.a) / scale)

  double beta(const std::vector<double>& regime) const {
    if (regime.size() != slopes.size()) fail(ErrorCode::DimensionMismatch, "regime length differs from treatment count");
    double v = intercept;
    for (std::size_t j = 0; j < slopes.size(); ++j) v += slopes[j] * regime[j];
    return form == Form::linear ? v : stats::normal_cdf(v / scale);
  }
  double beta(double a) const { return beta(std::vector<double>{a}); }
  /// beta(a + 1) - beta(a); constant for the linear form.
  double contrast(double a = 0.0) const { return beta(a + 1.0) - beta(a); }
};

// ---------------------------------------------------------------------------
// Point-treatment structural model:
//   X ~ N(0, I)
//   U = u0 + u_x'X + sigma_u e_U
//   Z = zeta0 + zeta_u U + zeta_x X + sigma_z e_Z
//   W = eta0 + eta_u U + eta_x X + sigma_w e_W
//   A* = alpha0 + alpha_z'Z + alpha_u U + alpha_x'X + sigma_a e_A  (A = 1{A* > 0} if binary)
//   Y* = beta0 + beta_a A + beta_u U + beta_x'X + sigma_y e_Y     (Y = 1{Y* > 0} if binary)

struct PointDgpSpec {
  int d_x = 1, d_z = 1, d_w = 1;
  double beta0 = 1.0, beta_a = -1.8, beta_u = 2.0;
  std::vector<double> beta_x{0.5};
  std::vector<double> eta0{0.0}, eta_u{1.0};
  std::vector<std::vector<double>> eta_x{{0.3}};
  std::vector<double> zeta0{0.0}, zeta_u{1.0};
  std::vector<std::vector<double>> zeta_x{{0.3}};
  double u0 = 0.0;
  std::vector<double> u_x{0.0};
  double alpha0 = 0.0, alpha_u = 1.0;
  std::vector<double> alpha_z{0.5}, alpha_x{0.3};
  double sigma_u = 1.0, sigma_z = 0.8, sigma_w = 0.8, sigma_a = 1.0, sigma_y = 1.0;
  TreatmentType treatment = TreatmentType::binary;
  OutcomeType outcome = OutcomeType::continuous;
  NoiseShape latent_noise = NoiseShape::gaussian;
  NoiseShape proxy_noise = NoiseShape::gaussian;
  std::uint64_t seed = 1;
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size() && k < b.size(); ++k) s += a[k] * b[k];
  return s;
}

inline void require_size(const std::vector<double>& v, int n, const char* what) {
  if (static_cast<int>(v.size()) != n)
    fail(ErrorCode::InvalidSpec, std::string(what) + " has length " + std::to_string(v.size()) + ", expected " + std::to_string(n));
}

inline void require_matrix(const std::vector<std::vector<double>>& m, int rows, int cols, const char* what) {
  if (static_cast<int>(m.size()) != rows) fail(ErrorCode::InvalidSpec, std::string(what) + " has wrong row count");
  for (const auto& r : m) require_size(r, cols, what);
}

inline bool any_nonzero(const std::vector<double>& v) {
  for (double x : v)
    if (x != 0.0) return true;
  return false;
}

}  // namespace detail

inline void check_spec(const PointDgpSpec& s) {
  if (s.d_x < 0 || s.d_z < 1 || s.d_w < 1) fail(ErrorCode::InvalidSpec, "need d_z >= 1, d_w >= 1, d_x >= 0");
  detail::require_size(s.beta_x, s.d_x, "beta_x");
  detail::require_size(s.eta0, s.d_w, "eta0");
  detail::require_size(s.eta_u, s.d_w, "eta_u");
  detail::require_matrix(s.eta_x, s.d_w, s.d_x, "eta_x");
  detail::require_size(s.zeta0, s.d_z, "zeta0");
  detail::require_size(s.zeta_u, s.d_z, "zeta_u");
  detail::require_matrix(s.zeta_x, s.d_z, s.d_x, "zeta_x");
  detail::require_size(s.u_x, s.d_x, "u_x");
  detail::require_size(s.alpha_z, s.d_z, "alpha_z");
  detail::require_size(s.alpha_x, s.d_x, "alpha_x");
  if (!detail::any_nonzero(s.eta_u)) fail(ErrorCode::InvalidSpec, "eta_u = 0: W is not U-relevant");
  if (s.alpha_u == 0.0 && !detail::any_nonzero(s.alpha_z))
    fail(ErrorCode::InvalidSpec, "treatment equation loads on neither Z nor U");
  for (double sd : {s.sigma_u, s.sigma_z, s.sigma_w, s.sigma_a, s.sigma_y})
    if (!(sd >= 0.0)) fail(ErrorCode::InvalidSpec, "noise scales must be nonnegative");
  if (s.outcome == OutcomeType::binary && (s.latent_noise != NoiseShape::gaussian || s.sigma_y <= 0.0))
    fail(ErrorCode::InvalidSpec, "binary outcomes need Gaussian latent noise and sigma_y > 0");
}

inline GroundTruth point_ground_truth(const PointDgpSpec& s) {
  check_spec(s);
  GroundTruth g;
  g.intercept = s.beta0 + s.beta_u * s.u0;  // E[X] = 0, E[e_U] = 0
  g.slopes = {s.beta_a};
  if (s.outcome == OutcomeType::binary) {
    g.form = GroundTruth::Form::probit;
    double v = s.sigma_y * s.sigma_y + s.beta_u * s.beta_u * s.sigma_u * s.sigma_u;
    for (int k = 0; k < s.d_x; ++k) {
      const double c = s.beta_u * s.u_x[static_cast<std::size_t>(k)] + s.beta_x[static_cast<std::size_t>(k)];
      v += c * c;
    }
    g.scale = std::sqrt(v);
  }
  return g;
}

/// Every structural variable for n units, including U.
struct PointUnits {
  Eigen::VectorXd u, a, y;
  Eigen::MatrixXd x, z, w;
};

/// Simulates units with per-unit noise streams, so a unit's noise does not
/// depend on n or on other units. With `forced` set, A is replaced by the
/// given per-unit values (an intervention); all noise is unchanged.
inline PointUnits simulate_point_units(const PointDgpSpec& s, std::size_t n, std::uint64_t seed,
                                       const std::optional<Eigen::VectorXd>& forced = std::nullopt) {
  check_spec(s);
  const auto N = static_cast<Eigen::Index>(n);
  PointUnits out;
  out.u.resize(N);
  out.a.resize(N);
  out.y.resize(N);
  out.x.resize(N, s.d_x);
  out.z.resize(N, s.d_z);
  out.w.resize(N, s.d_w);
  const CounterRng root(seed, 0x706f696e74ULL);
  std::vector<double> xv(static_cast<std::size_t>(s.d_x));
  for (Eigen::Index i = 0; i < N; ++i) {
    CounterRng rng = root.split(static_cast<std::uint64_t>(i));
    for (int k = 0; k < s.d_x; ++k) {
      xv[static_cast<std::size_t>(k)] = rng.normal();
      out.x(i, k) = xv[static_cast<std::size_t>(k)];
    }
    const double u = s.u0 + detail::dot(s.u_x, xv) + s.sigma_u * draw_noise(rng, s.latent_noise);
    out.u(i) = u;
    std::vector<double> zv(static_cast<std::size_t>(s.d_z));
    for (int k = 0; k < s.d_z; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      zv[kk] = s.zeta0[kk] + s.zeta_u[kk] * u + detail::dot(s.zeta_x[kk], xv) + s.sigma_z * draw_noise(rng, s.proxy_noise);
      out.z(i, k) = zv[kk];
    }
    for (int k = 0; k < s.d_w; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      out.w(i, k) = s.eta0[kk] + s.eta_u[kk] * u + detail::dot(s.eta_x[kk], xv) + s.sigma_w * draw_noise(rng, s.proxy_noise);
    }
    const double a_index = s.alpha0 + detail::dot(s.alpha_z, zv) + s.alpha_u * u + detail::dot(s.alpha_x, xv) +
                           s.sigma_a * rng.normal();
    double a = s.treatment == TreatmentType::binary ? (a_index > 0.0 ? 1.0 : 0.0) : a_index;
    if (forced) a = (*forced)(i);
    out.a(i) = a;
    const double y_index = s.beta0 + s.beta_a * a + s.beta_u * u + detail::dot(s.beta_x, xv) + s.sigma_y * rng.normal();
    out.y(i) = s.outcome == OutcomeType::binary ? (y_index > 0.0 ? 1.0 : 0.0) : y_index;
  }
  return out;
}

namespace detail {

inline std::vector<std::string> indexed_names(const char* stem, int count) {
  std::vector<std::string> out;
  for (int k = 1; k <= count; ++k) out.push_back(std::string(stem) + std::to_string(k));
  return out;
}

}  // namespace detail

inline PointData to_point_data(const PointUnits& u) {
  PointData p;
  p.y = u.y;
  p.a = u.a;
  p.x = u.x;
  p.z = u.z;
  p.w = u.w;
  p.x_names = detail::indexed_names("X", static_cast<int>(u.x.cols()));
  p.z_names = detail::indexed_names("Z", static_cast<int>(u.z.cols()));
  p.w_names = detail::indexed_names("W", static_cast<int>(u.w.cols()));
  return p;
}

inline Dataset to_dataset(const PointData& p) {
  RawTable raw;
  RoleMap roles;
  auto add = [&](const std::string& name, const Eigen::VectorXd& v, std::optional<ColumnRole> role) {
    raw.names.push_back(name);
    raw.columns.emplace_back(v.data(), v.data() + v.size());
    if (role) roles[name] = *role;
  };
  add("Y", p.y, ColumnRole::outcome);
  add("A", p.a, ColumnRole::treatment);
  for (Eigen::Index k = 0; k < p.x.cols(); ++k) add(p.x_names[static_cast<std::size_t>(k)], p.x.col(k), ColumnRole::covariate_x);
  for (Eigen::Index k = 0; k < p.z.cols(); ++k) add(p.z_names[static_cast<std::size_t>(k)], p.z.col(k), ColumnRole::proxy_z);
  for (Eigen::Index k = 0; k < p.w.cols(); ++k) add(p.w_names[static_cast<std::size_t>(k)], p.w.col(k), ColumnRole::proxy_w);
  return validate_dataset(raw, roles, Layout::point());
}

struct PointSimulation {
  Dataset data;
  GroundTruth truth;
};

/// Dataset with columns Y, A, X1.., Z1.., W1..; U is never emitted.
inline PointSimulation generate_point(const PointDgpSpec& spec, std::size_t n) {
  if (n < 1) fail(ErrorCode::InvalidArgument, "n must be >= 1");
  const auto units = simulate_point_units(spec, n, spec.seed);
  return {to_dataset(to_point_data(units)), point_ground_truth(spec)};
}

/// Monte-Carlo estimate of E[Y_a] by forcing A = a for every draw.
struct McMean {
  double mean = 0.0;
  double se = 0.0;
};

inline McMean interventional_mean(const PointDgpSpec& spec, double a, std::size_t draws, std::uint64_t seed) {
  const auto units = simulate_point_units(spec, draws, seed, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(draws), a));
  const std::span<const double> y(units.y.data(), static_cast<std::size_t>(units.y.size()));
  return {stats::mean(y), stats::sd(y) / std::sqrt(static_cast<double>(draws))};
}

// ---------------------------------------------------------------------------
// Longitudinal structural model, generated per period in the order
// U(j), X(j), Z(j), W(j), A(j); Y last.
//
//   U(0) = u_class (C - class_prob) + sigma_u0 e       [latent_class period-0 treatment]
//   U(0) = sigma_u0 e                                  [probit period-0 treatment]
//   U(j) = rho U(j-1) + sigma_nu e                     (j >= 1)
//   X(j) = x_lag X(j-1) + x_u U(j) + x_alag A(j-1) + sigma_x e
//   Z(j) = z_u U(j) + z_alag A(j-1) + sigma_z e
//   W(j) = w_u U(j) + sigma_w e                        (no A or Z input)
//   A(0) = C ~ Bernoulli(class_prob)                   [latent_class]
//   A(j) = 1{a0 + a_u U(j) + a_z'Z(j) + a_x'X(j) + a_lag A(j-1)
//             + a_zbase'Z(0) + a_xbase'X(0) + e > 0}   [probit; base terms for j >= 1]
//   Y = y0 + sum_j y_a[j] A(j) + y_u[j] U(j) + y_x[j]'X(j) + sigma_y e   (no Z input)
//
// In latent_class mode P(A(0)=1 | U(0)) is logistic in U(0) and U(0) given
// A(0) is Gaussian, so W(0) given (Z(0), A(0), X(0)) is exactly
// linear-Gaussian. Period-j treatments that load only on baseline proxies
// keep the additive bridges exact for the recursive algorithm; loading A(j)
// on current-period U, Z or X (j >= 1) is allowed but makes the linear
// bridges an approximation.

struct PeriodBlock {
  double u_rho = 0.6, sigma_nu = 0.8;
  double x_lag = 0.4;
  std::vector<double> x_u{0.5}, x_alag{0.0};
  double sigma_x = 1.0;
  std::vector<double> z_u{1.0}, z_alag{0.0};
  double sigma_z = 0.8;
  std::vector<double> w_u{1.0};
  double sigma_w = 0.8;
  double a0 = 0.0, a_u = 0.0, a_lag = 0.0;
  std::vector<double> a_z{0.0}, a_x{0.0}, a_zbase{0.0}, a_xbase{0.0};
};

struct LongitudinalDgpSpec {
  enum class FirstTreatment { latent_class, probit };
  int J = 2;
  int d_x = 1, d_z = 1, d_w = 1;
  FirstTreatment first_treatment = FirstTreatment::latent_class;
  double class_prob = 0.5, u_class = 1.5, sigma_u0 = 1.0;
  /// Block j configures period j; the last block is reused for later periods.
  std::vector<PeriodBlock> periods;
  double y0 = 1.0;
  std::vector<double> y_a{-1.0, -1.0};
  std::vector<double> y_u{1.5, 1.0};
  std::vector<std::vector<double>> y_x{{0.5}, {0.3}};
  double sigma_y = 1.0;
  NoiseShape latent_noise = NoiseShape::gaussian;
  NoiseShape proxy_noise = NoiseShape::gaussian;
  std::uint64_t seed = 1;

  const PeriodBlock& block(int j) const {
    return periods.at(static_cast<std::size_t>(std::min<int>(j, static_cast<int>(periods.size()) - 1)));
  }
};

/// Default confounded two-period spec.
inline LongitudinalDgpSpec default_longitudinal_spec() {
  LongitudinalDgpSpec s;
  PeriodBlock p0;
  p0.a_u = 1.0;  // used only in probit mode
  p0.a_z = {0.4};
  p0.a_x = {0.3};
  PeriodBlock p1;
  p1.a0 = -0.3;
  p1.a_lag = 0.6;
  p1.a_zbase = {0.5};
  p1.a_xbase = {0.3};
  s.periods = {p0, p1};
  return s;
}

inline void check_spec(const LongitudinalDgpSpec& s) {
  if (s.J < 2) fail(ErrorCode::InvalidSpec, "longitudinal spec needs J >= 2");
  if (s.d_x < 0 || s.d_z < 1 || s.d_w < 1) fail(ErrorCode::InvalidSpec, "need d_z >= 1, d_w >= 1, d_x >= 0");
  if (s.periods.empty()) fail(ErrorCode::InvalidSpec, "no period blocks");
  detail::require_size(s.y_a, s.J, "y_a");
  detail::require_size(s.y_u, s.J, "y_u");
  detail::require_matrix(s.y_x, s.J, s.d_x, "y_x");
  if (s.first_treatment == LongitudinalDgpSpec::FirstTreatment::latent_class &&
      !(s.class_prob > 0.0 && s.class_prob < 1.0))
    fail(ErrorCode::InvalidSpec, "class_prob must lie in (0,1)");
  for (int j = 0; j < s.J; ++j) {
    const auto& b = s.block(j);
    detail::require_size(b.x_u, s.d_x, "x_u");
    detail::require_size(b.x_alag, s.d_x, "x_alag");
    detail::require_size(b.z_u, s.d_z, "z_u");
    detail::require_size(b.z_alag, s.d_z, "z_alag");
    detail::require_size(b.w_u, s.d_w, "w_u");
    detail::require_size(b.a_z, s.d_z, "a_z");
    detail::require_size(b.a_x, s.d_x, "a_x");
    detail::require_size(b.a_zbase, s.d_z, "a_zbase");
    detail::require_size(b.a_xbase, s.d_x, "a_xbase");
    if (!detail::any_nonzero(b.w_u)) fail(ErrorCode::InvalidSpec, "w_u = 0 at period " + std::to_string(j) + ": W not U-relevant");
    const bool class_mode = j == 0 && s.first_treatment == LongitudinalDgpSpec::FirstTreatment::latent_class;
    const bool loads = class_mode ? s.u_class != 0.0
                                  : (b.a_u != 0.0 || detail::any_nonzero(b.a_z) || (j > 0 && detail::any_nonzero(b.a_zbase)));
    if (!loads) fail(ErrorCode::InvalidSpec, "treatment at period " + std::to_string(j) + " loads on neither Z nor U");
  }
}

/// Closed-form E[Y_abar] by forward substitution of means under do(abar).
inline double longitudinal_beta_closed_form(const LongitudinalDgpSpec& s, const std::vector<double>& regime) {
  if (static_cast<int>(regime.size()) != s.J) fail(ErrorCode::DimensionMismatch, "regime length differs from J");
  const double mean_u0 = 0.0;  // the class shift is centered
  double mu = mean_u0;
  std::vector<double> mx(static_cast<std::size_t>(s.d_x), 0.0);
  double y = s.y0;
  for (int j = 0; j < s.J; ++j) {
    const auto& b = s.block(j);
    if (j > 0) mu = b.u_rho * mu;
    for (int k = 0; k < s.d_x; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      const double lag = j > 0 ? b.x_lag * mx[kk] + b.x_alag[kk] * regime[static_cast<std::size_t>(j - 1)] : 0.0;
      mx[kk] = lag + b.x_u[kk] * mu;
    }
    const auto jj = static_cast<std::size_t>(j);
    y += s.y_a[jj] * regime[jj] + s.y_u[jj] * mu + detail::dot(s.y_x[jj], mx);
  }
  return y;
}

inline GroundTruth longitudinal_ground_truth(const LongitudinalDgpSpec& s) {
  check_spec(s);
  GroundTruth g;
  const std::vector<double> zeros(static_cast<std::size_t>(s.J), 0.0);
  g.intercept = longitudinal_beta_closed_form(s, zeros);
  for (int j = 0; j < s.J; ++j) {
    auto e = zeros;
    e[static_cast<std::size_t>(j)] = 1.0;
    g.slopes.push_back(longitudinal_beta_closed_form(s, e) - g.intercept);
  }
  return g;
}

struct PanelUnits {
  PanelData data;
  std::vector<Eigen::VectorXd> u;  // u[j](i)
};

/// As simulate_point_units; `forced` fixes every subject's treatment
/// history to the given regime.
inline PanelUnits simulate_panel_units(const LongitudinalDgpSpec& s, std::size_t n, std::uint64_t seed,
                                       const std::optional<std::vector<Eigen::VectorXd>>& forced = std::nullopt) {
  check_spec(s);
  const auto N = static_cast<Eigen::Index>(n);
  const int J = s.J;
  PanelUnits out;
  auto& p = out.data;
  p.periods = J;
  p.subject_ids = Eigen::VectorXd::LinSpaced(N, 0.0, static_cast<double>(N) - 1.0);
  p.y.resize(N);
  p.x_names = detail::indexed_names("X", s.d_x);
  p.z_names = detail::indexed_names("Z", s.d_z);
  p.w_names = detail::indexed_names("W", s.d_w);
  for (int j = 0; j < J; ++j) {
    p.a.emplace_back(N);
    p.x.emplace_back(N, s.d_x);
    p.z.emplace_back(N, s.d_z);
    p.w.emplace_back(N, s.d_w);
    out.u.emplace_back(N);
  }
  const CounterRng root(seed, 0x70616e656cULL);
  const bool class_mode = s.first_treatment == LongitudinalDgpSpec::FirstTreatment::latent_class;
  for (Eigen::Index i = 0; i < N; ++i) {
    CounterRng rng = root.split(static_cast<std::uint64_t>(i));
    double y = s.y0;
    for (int j = 0; j < J; ++j) {
      const auto& b = s.block(j);
      const auto jj = static_cast<std::size_t>(j);
      double cls = 0.0;
      double u;
      if (j == 0) {
        cls = rng.uniform() < s.class_prob ? 1.0 : 0.0;
        u = (class_mode ? s.u_class * (cls - s.class_prob) : 0.0) + s.sigma_u0 * draw_noise(rng, s.latent_noise);
      } else {
        u = b.u_rho * out.u[jj - 1](i) + b.sigma_nu * draw_noise(rng, s.latent_noise);
      }
      out.u[jj](i) = u;
      const double a_prev = j > 0 ? p.a[jj - 1](i) : 0.0;
      for (int k = 0; k < s.d_x; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        const double lag = j > 0 ? b.x_lag * p.x[jj - 1](i, k) + b.x_alag[kk] * a_prev : 0.0;
        p.x[jj](i, k) = lag + b.x_u[kk] * u + b.sigma_x * rng.normal();
      }
      for (int k = 0; k < s.d_z; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        p.z[jj](i, k) = b.z_u[kk] * u + b.z_alag[kk] * a_prev + b.sigma_z * draw_noise(rng, s.proxy_noise);
      }
      for (int k = 0; k < s.d_w; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        p.w[jj](i, k) = b.w_u[kk] * u + b.sigma_w * draw_noise(rng, s.proxy_noise);
      }
      const double e_a = rng.normal();
      double a;
      if (j == 0 && class_mode) {
        a = cls;
      } else {
        double idx = b.a0 + b.a_u * u + b.a_lag * a_prev;
        for (int k = 0; k < s.d_z; ++k) {
          idx += b.a_z[static_cast<std::size_t>(k)] * p.z[jj](i, k);
          if (j > 0) idx += b.a_zbase[static_cast<std::size_t>(k)] * p.z[0](i, k);
        }
        for (int k = 0; k < s.d_x; ++k) {
          idx += b.a_x[static_cast<std::size_t>(k)] * p.x[jj](i, k);
          if (j > 0) idx += b.a_xbase[static_cast<std::size_t>(k)] * p.x[0](i, k);
        }
        a = idx + e_a > 0.0 ? 1.0 : 0.0;
      }
      if (forced) a = (*forced)[jj](i);
      p.a[jj](i) = a;
      y += s.y_a[jj] * a + s.y_u[jj] * u;
      for (int k = 0; k < s.d_x; ++k) y += s.y_x[jj][static_cast<std::size_t>(k)] * p.x[jj](i, k);
    }
    p.y(i) = y + s.sigma_y * rng.normal();
  }
  return out;
}

/// Long format: one row per subject-period with columns
/// id, t, Y (final outcome repeated on every row), A, X1.., Z1.., W1..
inline Dataset to_dataset(const PanelData& p) {
  const auto n = static_cast<std::size_t>(p.n());
  const auto J = static_cast<std::size_t>(p.periods);
  RawTable raw;
  RoleMap roles;
  auto add = [&](const std::string& name, ColumnRole role) {
    raw.names.push_back(name);
    raw.columns.emplace_back();
    raw.columns.back().reserve(n * J);
    roles[name] = role;
  };
  add("id", ColumnRole::subject_id);
  add("t", ColumnRole::time_index);
  add("Y", ColumnRole::outcome);
  add("A", ColumnRole::treatment);
  for (const auto& nm : p.x_names) add(nm, ColumnRole::covariate_x);
  for (const auto& nm : p.z_names) add(nm, ColumnRole::proxy_z);
  for (const auto& nm : p.w_names) add(nm, ColumnRole::proxy_w);
  for (std::size_t i = 0; i < n; ++i) {
    const auto I = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < J; ++j) {
      std::size_t c = 0;
      raw.columns[c++].push_back(p.subject_ids(I));
      raw.columns[c++].push_back(static_cast<double>(j));
      raw.columns[c++].push_back(p.y(I));
      raw.columns[c++].push_back(p.a[j](I));
      for (Eigen::Index k = 0; k < p.x[j].cols(); ++k) raw.columns[c++].push_back(p.x[j](I, k));
      for (Eigen::Index k = 0; k < p.z[j].cols(); ++k) raw.columns[c++].push_back(p.z[j](I, k));
      for (Eigen::Index k = 0; k < p.w[j].cols(); ++k) raw.columns[c++].push_back(p.w[j](I, k));
    }
  }
  return validate_dataset(raw, roles, Layout::longitudinal(p.periods));
}

struct LongitudinalSimulation {
  Dataset data;
  GroundTruth truth;
};

inline LongitudinalSimulation generate_longitudinal(const LongitudinalDgpSpec& spec, std::size_t n) {
  if (n < 1) fail(ErrorCode::InvalidArgument, "n must be >= 1");
  auto units = simulate_panel_units(spec, n, spec.seed);
  return {to_dataset(units.data), longitudinal_ground_truth(spec)};
}

inline McMean interventional_mean(const LongitudinalDgpSpec& spec, const std::vector<double>& regime, std::size_t draws,
                                  std::uint64_t seed) {
  if (static_cast<int>(regime.size()) != spec.J) fail(ErrorCode::DimensionMismatch, "regime length differs from J");
  std::vector<Eigen::VectorXd> forced;
  for (double a : regime) forced.push_back(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(draws), a));
  const auto units = simulate_panel_units(spec, draws, seed, forced);
  const std::span<const double> y(units.data.y.data(), draws);
  return {stats::mean(y), stats::sd(y) / std::sqrt(static_cast<double>(draws))};
}

/// Checks the closed-form ground truth against interventional simulation for
/// every binary regime; returns the largest |difference| / MC-SE.
inline double verify_ground_truth(const LongitudinalDgpSpec& spec, std::size_t draws, std::uint64_t seed) {
  const auto g = longitudinal_ground_truth(spec);
  double worst = 0.0;
  for (const auto& r : binary_regimes(spec.J)) {
    const auto mc = interventional_mean(spec, r, draws, seed);
    worst = std::max(worst, std::abs(mc.mean - g.beta(r)) / mc.se);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Discrete laws over (X), U, Z, W, A, Y with Z, W depending on U only,
// A on (Z, U, X) and Y on (A, U, W, X). Exclusions: W has no A or Z input,
// Y has no Z input.

struct CategoricalLawParams {
  std::size_t d_u = 2, d_z = 2, d_w = 2, d_x = 0;  // d_x = 0: no X variable
  std::vector<double> p_x;                          // [x]
  std::vector<std::vector<double>> p_u;             // [x][u] (one row when no X)
  std::vector<std::vector<double>> p_z;             // [u][z]
  std::vector<std::vector<double>> p_w;             // [u][w]
  std::vector<std::vector<std::vector<double>>> p_a1;               // [x][u][z] -> P(A=1)
  std::vector<std::vector<std::vector<std::vector<double>>>> p_y1;  // [x][a][u][w] -> P(Y=1)
};

/// Binary U, Z, W, A, Y without X.
struct BinaryLawParams {
  double p_u1 = 0.4;
  std::array<double, 2> p_z1{0.2, 0.7};                        // [u]
  std::array<double, 2> p_w1{0.3, 0.8};                        // [u]
  std::array<std::array<double, 2>, 2> p_a1{{{{0.3, 0.6}}, {{0.4, 0.8}}}};  // [z][u]
  std::array<std::array<std::array<double, 2>, 2>, 2> p_y1{
      {{{{{0.2, 0.3}}, {{0.5, 0.6}}}}, {{{{0.4, 0.5}}, {{0.7, 0.85}}}}}};  // [a][u][w]
};

struct LawWithTruth {
  DiscreteJointLaw law;
  /// beta[a] = sum_{u,x} E(Y | a, u, x) P(u, x)
  std::vector<double> beta;
};

namespace detail {

inline void check_distribution(const std::vector<double>& p, const char* what) {
  double s = 0.0;
  for (double q : p) {
    if (!(q > 0.0 && q < 1.0) && p.size() > 1) fail(ErrorCode::DegenerateProbability, std::string(what) + " has an entry outside (0,1)");
    s += q;
  }
  if (std::abs(s - 1.0) > 1e-12) fail(ErrorCode::InvalidSpec, std::string(what) + " does not sum to 1");
}

inline void check_probability(double p, const char* what) {
  if (!(p > 0.0 && p < 1.0)) fail(ErrorCode::DegenerateProbability, std::string(what) + " outside (0,1)");
}

}  // namespace detail

inline LawWithTruth build_categorical_law(const CategoricalLawParams& q) {
  const std::size_t nx = q.d_x == 0 ? 1 : q.d_x;
  if (q.d_x > 0) {
    if (q.p_x.size() != q.d_x) fail(ErrorCode::InvalidSpec, "p_x has wrong length");
    detail::check_distribution(q.p_x, "P(X)");
  }
  if (q.p_u.size() != nx || q.p_z.size() != q.d_u || q.p_w.size() != q.d_u || q.p_a1.size() != nx || q.p_y1.size() != nx)
    fail(ErrorCode::InvalidSpec, "law parameter arrays have wrong shape");
  for (const auto& r : q.p_u) {
    if (r.size() != q.d_u) fail(ErrorCode::InvalidSpec, "P(U) row has wrong length");
    detail::check_distribution(r, "P(U|X)");
  }
  for (const auto& r : q.p_z) {
    if (r.size() != q.d_z) fail(ErrorCode::InvalidSpec, "P(Z|U) row has wrong length");
    detail::check_distribution(r, "P(Z|U)");
  }
  for (const auto& r : q.p_w) {
    if (r.size() != q.d_w) fail(ErrorCode::InvalidSpec, "P(W|U) row has wrong length");
    detail::check_distribution(r, "P(W|U)");
  }
  for (std::size_t x = 0; x < nx; ++x) {
    if (q.p_a1[x].size() != q.d_u || q.p_y1[x].size() != 2) fail(ErrorCode::InvalidSpec, "P(A|...) or P(Y|...) has wrong shape");
    for (const auto& r : q.p_a1[x]) {
      if (r.size() != q.d_z) fail(ErrorCode::InvalidSpec, "P(A|Z,U) row has wrong length");
      for (double v : r) detail::check_probability(v, "P(A=1|Z,U,X)");
    }
    for (const auto& ra : q.p_y1[x]) {
      if (ra.size() != q.d_u) fail(ErrorCode::InvalidSpec, "P(Y|A,U,W) has wrong shape");
      for (const auto& r : ra) {
        if (r.size() != q.d_w) fail(ErrorCode::InvalidSpec, "P(Y|A,U,W) row has wrong length");
        for (double v : r) detail::check_probability(v, "P(Y=1|A,U,W,X)");
      }
    }
  }

  std::vector<CategoricalVariable> vars;
  if (q.d_x > 0) vars.push_back({"X", q.d_x});
  vars.push_back({"U", q.d_u});
  vars.push_back({"Z", q.d_z});
  vars.push_back({"W", q.d_w});
  vars.push_back({"A", 2});
  vars.push_back({"Y", 2});
  std::vector<double> p;
  p.reserve(nx * q.d_u * q.d_z * q.d_w * 4);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t u = 0; u < q.d_u; ++u)
      for (std::size_t z = 0; z < q.d_z; ++z)
        for (std::size_t w = 0; w < q.d_w; ++w)
          for (std::size_t a = 0; a < 2; ++a)
            for (std::size_t y = 0; y < 2; ++y) {
              const double px = q.d_x > 0 ? q.p_x[x] : 1.0;
              const double pa1 = q.p_a1[x][u][z];
              const double py1 = q.p_y1[x][a][u][w];
              p.push_back(px * q.p_u[x][u] * q.p_z[u][z] * q.p_w[u][w] * (a ? pa1 : 1.0 - pa1) * (y ? py1 : 1.0 - py1));
            }
  // Renormalize away the last-ulp drift of the products.
  double total = 0.0;
  for (double v : p) total += v;
  for (double& v : p) v /= total;

  LawWithTruth out{DiscreteJointLaw(vars, p), {0.0, 0.0}};
  for (std::size_t a = 0; a < 2; ++a) {
    double b = 0.0;
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t u = 0; u < q.d_u; ++u) {
        double ey = 0.0;
        for (std::size_t w = 0; w < q.d_w; ++w) ey += q.p_y1[x][a][u][w] * q.p_w[u][w];
        b += ey * q.p_u[x][u] * (q.d_x > 0 ? q.p_x[x] : 1.0);
      }
    out.beta[a] = b;
  }
  return out;
}

inline CategoricalLawParams to_categorical(const BinaryLawParams& b) {
  CategoricalLawParams q;
  q.p_u = {{1.0 - b.p_u1, b.p_u1}};
  q.p_z = {{1.0 - b.p_z1[0], b.p_z1[0]}, {1.0 - b.p_z1[1], b.p_z1[1]}};
  q.p_w = {{1.0 - b.p_w1[0], b.p_w1[0]}, {1.0 - b.p_w1[1], b.p_w1[1]}};
  q.p_a1 = {{{b.p_a1[0][0], b.p_a1[1][0]}, {b.p_a1[0][1], b.p_a1[1][1]}}};  // [x][u][z]
  q.p_y1 = {{{{b.p_y1[0][0][0], b.p_y1[0][0][1]}, {b.p_y1[0][1][0], b.p_y1[0][1][1]}},
             {{b.p_y1[1][0][0], b.p_y1[1][0][1]}, {b.p_y1[1][1][0], b.p_y1[1][1][1]}}}};
  return q;
}

/// Exact joint table over the 2^5 cells and beta(a) for a in {0, 1}.
inline LawWithTruth build_discrete_law(const BinaryLawParams& b) {
  detail::check_probability(b.p_u1, "P(U=1)");
  return build_categorical_law(to_categorical(b));
}

/// Random law with every probability bounded away from 0 and 1.
inline CategoricalLawParams random_law_params(std::uint64_t seed, std::size_t d_u, std::size_t d_z, std::size_t d_w,
                                              std::size_t d_x = 0) {
  CounterRng rng(seed, 0x6c6177ULL);
  auto simplex = [&](std::size_t k) {
    std::vector<double> v(k);
    double s = 0.0;
    for (auto& e : v) {
      e = 0.2 + rng.uniform();
      s += e;
    }
    for (auto& e : v) e /= s;
    return v;
  };
  auto prob = [&] { return 0.05 + 0.9 * rng.uniform(); };
  CategoricalLawParams q;
  q.d_u = d_u;
  q.d_z = d_z;
  q.d_w = d_w;
  q.d_x = d_x;
  const std::size_t nx = d_x == 0 ? 1 : d_x;
  if (d_x > 0) q.p_x = simplex(d_x);
  for (std::size_t x = 0; x < nx; ++x) q.p_u.push_back(simplex(d_u));
  for (std::size_t u = 0; u < d_u; ++u) q.p_z.push_back(simplex(d_z));
  for (std::size_t u = 0; u < d_u; ++u) q.p_w.push_back(simplex(d_w));
  q.p_a1.assign(nx, std::vector<std::vector<double>>(d_u, std::vector<double>(d_z)));
  q.p_y1.assign(nx, std::vector<std::vector<std::vector<double>>>(2, std::vector<std::vector<double>>(d_u, std::vector<double>(d_w))));
  for (std::size_t x = 0; x < nx; ++x) {
    for (auto& r : q.p_a1[x])
      for (auto& v : r) v = prob();
    for (auto& ra : q.p_y1[x])
      for (auto& r : ra)
        for (auto& v : r) v = prob();
  }
  return q;
}

}  // namespace proxcausal
