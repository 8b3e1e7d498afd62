#pragma once

// Longitudinal estimators: proximal recursive least squares (general J and
// an explicit two-period path), parametric proximal g-computation for J = 2,
// and an inverse-probability-weighted marginal structural model.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "proxcausal/data_model.hpp"
#include "proxcausal/estimate.hpp"
#include "proxcausal/feature_map.hpp"
#include "proxcausal/linear_kernel.hpp"
#include "proxcausal/point_estimators.hpp"

namespace proxcausal {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct StageMaps {
  FeatureMap a = FeatureMap::cum();
  FeatureMap w = FeatureMap::concat();
  FeatureMap x = FeatureMap::concat();  // applied to X(1..j); X(0) always enters as is
  FeatureMap z = FeatureMap::concat();
};

struct RecursiveOptions {
  StageMaps maps;
  /// Optional per-stage override, indexed by period j.
  std::vector<std::optional<StageMaps>> per_stage;
  /// Regimes to evaluate; empty means every binary regime.
  std::vector<std::vector<double>> regimes;

  const StageMaps& at(int j) const {
    const auto k = static_cast<std::size_t>(j);
    return k < per_stage.size() && per_stage[k] ? *per_stage[k] : maps;
  }
};

struct StageFit {
  int period = 0;
  MatrixXd theta;                    // first-stage coefficients, one column per W feature
  std::vector<double> first_stage_f;  // Z-block F per W feature
  std::vector<VectorXd> eta;          // bridge coefficients per regime
  std::vector<std::string> eta_names;
  Eigen::Index n_w_features = 0, w_offset = 0;
  /// max_k |E_n{D_k (c_w-hat - c_w)' eta_w}| / (rms(D_k) rms((c_w-hat - c_w)' eta_w)), over regimes.
  double orthogonality_residual = 0.0;
};

struct RecursiveFit {
  int periods = 0;
  std::vector<StageFit> stages;  // stages[j] is period j
  EffectEstimate estimate;
};

namespace detail {

inline std::vector<MatrixXd> history(const std::vector<MatrixXd>& blocks, int from, int to) {
  std::vector<MatrixXd> h;
  for (int j = from; j <= to; ++j) h.push_back(blocks[static_cast<std::size_t>(j)]);
  return h;
}

inline std::vector<MatrixXd> treatment_history(const PanelData& p) {
  std::vector<MatrixXd> h;
  for (const auto& a : p.a) h.emplace_back(a);
  return h;
}

inline std::vector<std::vector<double>> resolve_regimes(const std::vector<std::vector<double>>& r, int J) {
  auto out = r.empty() ? binary_regimes(J) : r;
  for (const auto& g : out)
    if (static_cast<int>(g.size()) != J) fail(ErrorCode::DimensionMismatch, "regime length differs from J");
  return out;
}

inline void require_panel(const PanelData& p) {
  if (p.periods < 2) fail(ErrorCode::InvalidLayout, "longitudinal estimators need J >= 2");
  for (int j = 0; j < p.periods; ++j)
    if (p.w[static_cast<std::size_t>(j)].cols() == 0 || p.z[static_cast<std::size_t>(j)].cols() == 0)
      fail(ErrorCode::InvalidLayout, "proxies Z and W are required at every period");
}

/// Z-block F statistics of fitted first stages.
inline std::vector<double> block_f(const LeastSquaresSolver& full, const LeastSquaresSolver& restricted,
                                   const MatrixXd& responses) {
  std::vector<double> f;
  const auto n = static_cast<double>(responses.rows());
  const double q = static_cast<double>(full.rank() - restricted.rank());
  const double dof = n - static_cast<double>(full.rank());
  for (Eigen::Index k = 0; k < responses.cols(); ++k) {
    const VectorXd y = responses.col(k);
    const double rss_u = (y - full.design() * full.coefficients(y)).squaredNorm();
    const double rss_r = (y - restricted.design() * restricted.coefficients(y)).squaredNorm();
    f.push_back(q > 0 && dof > 0 && rss_u > 0 ? ((rss_r - rss_u) / q) / (rss_u / dof)
                                              : std::numeric_limits<double>::infinity());
  }
  return f;
}

inline double orthogonality(const MatrixXd& design, const MatrixXd& c_hat, const MatrixXd& c_obs, const VectorXd& eta_w) {
  const VectorXd r = (c_hat - c_obs) * eta_w;
  const double n = static_cast<double>(r.size());
  const double rr = std::sqrt(r.squaredNorm() / n);
  if (rr == 0.0) return 0.0;
  double worst = 0.0;
  for (Eigen::Index k = 0; k < design.cols(); ++k) {
    const double dk = std::sqrt(design.col(k).squaredNorm() / n);
    if (dk == 0.0) continue;
    worst = std::max(worst, std::abs(design.col(k).dot(r) / n) / (dk * rr));
  }
  return worst;
}

inline MatrixXd broadcast(const Eigen::RowVectorXd& row, Eigen::Index n) { return row.replicate(n, 1); }

inline void finish_longitudinal(EffectEstimate& e, const std::vector<std::vector<double>>& regimes) {
  e.regimes = regimes;
  const auto J = regimes.empty() ? 0 : regimes.front().size();
  std::optional<std::size_t> lo, hi;
  for (std::size_t k = 0; k < regimes.size(); ++k) {
    if (regimes[k] == std::vector<double>(J, 0.0)) lo = k;
    if (regimes[k] == std::vector<double>(J, 1.0)) hi = k;
  }
  if (lo && hi) {
    ScalarEstimate c;
    c.value = e.beta[*hi].value - e.beta[*lo].value;
    e.contrast = c;
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------

/// General-J recursion. For j = J-1 down to 0:
///   first stage  c_w,j  on (1, c_z,j, c_a(A-bar), c_x,j, X(0)) -> c_w-hat
///   second stage H_{j+1} on (1, c_a(A-bar), c_w-hat, c_x,j, X(0)) -> eta_j
///   H_j(a-bar) = (1, c_a(a-bar), c_w,j observed, c_x,j, X(0)) eta_j
/// with H_J = Y, and beta(a-bar) = E_n H_0(a-bar).
inline RecursiveFit fit_recursive_ls(const PanelData& p, const RecursiveOptions& opt = {}) {
  detail::require_panel(p);
  const int J = p.periods;
  const auto n = p.n();
  const auto regimes = detail::resolve_regimes(opt.regimes, J);
  const auto R = regimes.size();
  const auto a_hist = detail::treatment_history(p);
  const MatrixXd x0 = p.x[0];

  RecursiveFit out;
  out.periods = J;
  out.stages.resize(static_cast<std::size_t>(J));
  std::vector<VectorXd> h(R, p.y);
  for (int j = J - 1; j >= 0; --j) {
    const auto& maps = opt.at(j);
    const MatrixXd cw = maps.w.apply(detail::history(p.w, 0, j));
    const MatrixXd cz = maps.z.apply(detail::history(p.z, 0, j));
    const MatrixXd ca = maps.a.apply(a_hist);
    const MatrixXd cx = j >= 1 ? maps.x.apply(detail::history(p.x, 1, j)) : MatrixXd(n, 0);

    const LeastSquaresSolver first(hcat({ones_column(n), cz, ca, cx, x0}));
    const LeastSquaresSolver restricted(hcat({ones_column(n), ca, cx, x0}));
    auto& st = out.stages[static_cast<std::size_t>(j)];
    st.period = j;
    st.theta.resize(first.cols(), cw.cols());
    MatrixXd cw_hat(n, cw.cols());
    for (Eigen::Index k = 0; k < cw.cols(); ++k) {
      st.theta.col(k) = first.coefficients(cw.col(k));
      cw_hat.col(k) = first.design() * st.theta.col(k);
    }
    st.first_stage_f = detail::block_f(first, restricted, cw);

    const MatrixXd d_hat = hcat({ones_column(n), ca, cw_hat, cx, x0});
    const LeastSquaresSolver second(d_hat);
    st.w_offset = 1 + ca.cols();
    st.n_w_features = cw.cols();
    st.eta_names.push_back("(intercept)");
    for (Eigen::Index k = 0; k < ca.cols(); ++k) st.eta_names.push_back("a:" + maps.a.name() + std::to_string(k));
    for (Eigen::Index k = 0; k < cw.cols(); ++k) st.eta_names.push_back("w:" + maps.w.name() + std::to_string(k));
    for (Eigen::Index k = 0; k < cx.cols(); ++k) st.eta_names.push_back("x:" + maps.x.name() + std::to_string(k));
    for (const auto& nm : p.x_names) st.eta_names.push_back(nm + "(0)");

    for (std::size_t r = 0; r < R; ++r) {
      const VectorXd eta = second.coefficients(h[r]);
      st.eta.push_back(eta);
      st.orthogonality_residual = std::max(
          st.orthogonality_residual, detail::orthogonality(d_hat, cw_hat, cw, eta.segment(st.w_offset, st.n_w_features)));
      const MatrixXd ca_r = detail::broadcast(maps.a.apply_regime(regimes[r]), n);
      h[r] = hcat({ones_column(n), ca_r, cw, cx, x0}) * eta;
    }
  }

  auto& e = out.estimate;
  e.method = Method::recursive_ls;
  for (std::size_t r = 0; r < R; ++r) {
    ScalarEstimate s;
    s.value = h[r].mean();
    e.beta.push_back(s);
  }
  detail::finish_longitudinal(e, regimes);
  e.coefficients = out.stages.back().eta.front();
  e.coefficient_names = out.stages.back().eta_names;
  for (const auto& st : out.stages) {
    const auto& eta = st.eta.front();
    const auto old = e.eta_w.size();
    e.eta_w.conservativeResize(old + st.n_w_features);
    e.eta_w.tail(st.n_w_features) = eta.segment(st.w_offset, st.n_w_features);
    for (Eigen::Index k = 0; k < st.n_w_features; ++k)
      e.eta_w_names.push_back("stage" + std::to_string(st.period) + ":" + st.eta_names[static_cast<std::size_t>(st.w_offset + k)]);
    for (double f : st.first_stage_f) {
      e.diagnostics.first_stage_f.push_back(f);
      if (f < kWeakFirstStageF) {
        e.diagnostics.weak_first_stage = true;
        e.diagnostics.warnings.push_back("PerPeriodWeakProxy: stage " + std::to_string(st.period) +
                                         " first-stage F below 10");
      }
    }
  }
  return out;
}

/// The two-period algorithm written out step by step. Same arithmetic as the
/// general recursion at J = 2.
inline RecursiveFit fit_recursive_ls_two_period(const PanelData& p, const RecursiveOptions& opt = {}) {
  detail::require_panel(p);
  if (p.periods != 2) fail(ErrorCode::InvalidLayout, "two-period path needs J = 2");
  const auto n = p.n();
  const auto regimes = detail::resolve_regimes(opt.regimes, 2);
  const auto a_hist = detail::treatment_history(p);
  const MatrixXd x0 = p.x[0];
  RecursiveFit out;
  out.periods = 2;
  out.stages.resize(2);

  // Step 1: multivariate regression of c_w(W-bar) on (1, c_z, c_a, c_x, X(0))
  const auto& m1 = opt.at(1);
  const MatrixXd cw1 = m1.w.apply({p.w[0], p.w[1]});
  const MatrixXd cz1 = m1.z.apply({p.z[0], p.z[1]});
  const MatrixXd ca1 = m1.a.apply(a_hist);
  const MatrixXd cx1 = m1.x.apply({p.x[1]});
  const LeastSquaresSolver s1(hcat({ones_column(n), cz1, ca1, cx1, x0}));
  const LeastSquaresSolver s1r(hcat({ones_column(n), ca1, cx1, x0}));
  auto& st1 = out.stages[1];
  st1.period = 1;
  st1.theta.resize(s1.cols(), cw1.cols());
  MatrixXd cw1_hat(n, cw1.cols());
  for (Eigen::Index k = 0; k < cw1.cols(); ++k) {
    st1.theta.col(k) = s1.coefficients(cw1.col(k));
    cw1_hat.col(k) = s1.design() * st1.theta.col(k);
  }
  st1.first_stage_f = detail::block_f(s1, s1r, cw1);

  // Step 2: Y on (1, c_a, c_w-hat, c_x, X(0)); H_1 at observed c_w
  const MatrixXd d1 = hcat({ones_column(n), ca1, cw1_hat, cx1, x0});
  const LeastSquaresSolver s2(d1);
  st1.w_offset = 1 + ca1.cols();
  st1.n_w_features = cw1.cols();
  const VectorXd eta1 = s2.coefficients(p.y);

  // Step 3: W(0) on (1, Z(0), c_a, X(0)); H_1(a-bar) on (1, c_a, W-hat(0), X(0))
  const auto& m0 = opt.at(0);
  const MatrixXd cw0 = m0.w.apply({p.w[0]});
  const MatrixXd cz0 = m0.z.apply({p.z[0]});
  const MatrixXd ca0 = m0.a.apply(a_hist);
  const MatrixXd cx0(n, 0);
  const LeastSquaresSolver s3(hcat({ones_column(n), cz0, ca0, cx0, x0}));
  const LeastSquaresSolver s3r(hcat({ones_column(n), ca0, cx0, x0}));
  auto& st0 = out.stages[0];
  st0.period = 0;
  st0.theta.resize(s3.cols(), cw0.cols());
  MatrixXd cw0_hat(n, cw0.cols());
  for (Eigen::Index k = 0; k < cw0.cols(); ++k) {
    st0.theta.col(k) = s3.coefficients(cw0.col(k));
    cw0_hat.col(k) = s3.design() * st0.theta.col(k);
  }
  st0.first_stage_f = detail::block_f(s3, s3r, cw0);
  const MatrixXd d0 = hcat({ones_column(n), ca0, cw0_hat, cx0, x0});
  const LeastSquaresSolver s4(d0);
  st0.w_offset = 1 + ca0.cols();
  st0.n_w_features = cw0.cols();

  auto& e = out.estimate;
  e.method = Method::recursive_ls;
  for (const auto& ab : regimes) {
    st1.eta.push_back(eta1);
    st1.orthogonality_residual = std::max(
        st1.orthogonality_residual, detail::orthogonality(d1, cw1_hat, cw1, eta1.segment(st1.w_offset, st1.n_w_features)));
    const VectorXd h1 = hcat({ones_column(n), detail::broadcast(m1.a.apply_regime(ab), n), cw1, cx1, x0}) * eta1;
    const VectorXd eta0 = s4.coefficients(h1);
    st0.eta.push_back(eta0);
    st0.orthogonality_residual = std::max(
        st0.orthogonality_residual, detail::orthogonality(d0, cw0_hat, cw0, eta0.segment(st0.w_offset, st0.n_w_features)));
    // Step 4: beta(a-bar) = E_n H_0(a-bar)
    const VectorXd h0 = hcat({ones_column(n), detail::broadcast(m0.a.apply_regime(ab), n), cw0, cx0, x0}) * eta0;
    ScalarEstimate s;
    s.value = h0.mean();
    e.beta.push_back(s);
  }
  detail::finish_longitudinal(e, regimes);
  e.coefficients = eta1;
  return out;
}

// ---------------------------------------------------------------------------

struct LgcompOptions {
  StageMaps maps;
  std::vector<std::vector<double>> regimes;
};

/// Parametric proximal g-computation, J = 2, linear bridges and
/// linear-Gaussian W laws:
///   W-bar | (Z-bar, A-bar, X-bar): OLS of (W(0), W(1)) on (1, Z(0), Z(1), A(0), A(1), X(1), X(0))
///   W(0)  | (A(0), X(0), Z(0)):    OLS of W(0) on (1, Z(0), A(0), X(0))
/// mu_1 = h_1 at the modeled mean of W-bar; Y on mu_1 gives eta_1.
/// mu_0 = h_0 at the modeled mean of W(0); H_1 on mu_0 gives eta_0.
/// beta(a-bar) = E_n h_0(W(0), a-bar, X(0); eta_0).
inline EffectEstimate fit_longitudinal_g_computation(const PanelData& p, const LgcompOptions& opt = {}) {
  detail::require_panel(p);
  if (p.periods != 2) fail(ErrorCode::InvalidLayout, "longitudinal g-computation is implemented for J = 2 only");
  if (!opt.maps.w.is_linear()) fail(ErrorCode::InvalidArgument, "g-computation needs a linear W feature map");
  const auto n = p.n();
  const auto regimes = detail::resolve_regimes(opt.regimes, 2);
  const auto a_hist = detail::treatment_history(p);
  const MatrixXd x0 = p.x[0];
  const auto& m = opt.maps;

  const MatrixXd law1 = hcat({ones_column(n), p.z[0], p.z[1], p.a[0], p.a[1], p.x[1], x0});
  const LeastSquaresSolver f1(law1);
  const auto dw = p.w[0].cols();
  const MatrixXd w_bar_hat = f1.fitted(hcat({p.w[0], p.w[1]}));
  const MatrixXd cw = m.w.apply({p.w[0], p.w[1]});
  const MatrixXd cw_mu = m.w.apply({w_bar_hat.leftCols(dw), w_bar_hat.rightCols(dw)});
  const MatrixXd ca = m.a.apply(a_hist);
  const MatrixXd cx = m.x.apply({p.x[1]});
  const VectorXd eta1 = LeastSquaresSolver(hcat({ones_column(n), ca, cw_mu, cx, x0})).coefficients(p.y);
  const VectorXd h1 = hcat({ones_column(n), ca, cw, cx, x0}) * eta1;

  const LeastSquaresSolver f0(hcat({ones_column(n), p.z[0], p.a[0], x0}));
  const MatrixXd w0_hat = f0.fitted(p.w[0]);
  const LeastSquaresSolver s0(hcat({ones_column(n), ca, w0_hat, x0}));
  const VectorXd eta0 = s0.coefficients(h1);

  EffectEstimate e;
  e.method = Method::longitudinal_g_computation;
  const VectorXd w0_mean = p.w[0].colwise().mean().transpose();
  const VectorXd x0_mean = x0.colwise().mean().transpose();
  for (const auto& ab : regimes) {
    const Eigen::RowVectorXd car = m.a.apply_regime(ab);
    VectorXd g(eta0.size());
    g << 1.0, car.transpose(), w0_mean, x0_mean;
    ScalarEstimate s;
    s.value = g.dot(eta0);
    e.beta.push_back(s);
  }
  detail::finish_longitudinal(e, regimes);
  e.coefficients = eta0;
  e.eta_w.resize(dw + cw.cols());
  e.eta_w << eta0.segment(1 + ca.cols(), dw), eta1.segment(1 + ca.cols(), cw.cols());
  return e;
}

// ---------------------------------------------------------------------------

struct IpwOptions {
  std::vector<std::vector<double>> regimes;
  /// Truncate stabilized weights at this quantile (off when unset).
  std::optional<double> truncate_quantile;
};

inline constexpr double kExtremeWeight = 50.0;

/// Stabilized weights prod_j P(A_j | A-bar_{j-1}) / P(A_j | A-bar_{j-1}, L-bar(j)),
/// both logistic; weighted OLS of Y on (1, cum(A-bar)) with a sandwich covariance.
inline EffectEstimate fit_ipw_msm(const PanelData& p, const IpwOptions& opt = {}) {
  if (p.periods < 2) fail(ErrorCode::InvalidLayout, "longitudinal estimators need J >= 2");
  const int J = p.periods;
  const auto n = p.n();
  for (const auto& a : p.a)
    for (Eigen::Index i = 0; i < n; ++i)
      if (a(i) != 0.0 && a(i) != 1.0) fail(ErrorCode::NonBinaryColumn, "IPW needs binary treatments");
  const auto regimes = detail::resolve_regimes(opt.regimes, J);
  EffectEstimate e;
  e.method = Method::ipw_msm;

  VectorXd weight = VectorXd::Ones(n);
  MatrixXd past(n, 0);
  MatrixXd covariates(n, 0);
  for (int j = 0; j < J; ++j) {
    const auto jj = static_cast<std::size_t>(j);
    covariates = hcat({covariates, p.x[jj], p.z[jj], p.w[jj]});
    const VectorXd& a = p.a[jj];
    const MatrixXd num_design = hcat({ones_column(n), past});
    const MatrixXd den_design = hcat({ones_column(n), past, covariates});
    const auto num = logistic_irls(num_design, a);
    const auto den = logistic_irls(den_design, a);
    if (den.separation) e.diagnostics.warnings.push_back("propensity model separated at period " + std::to_string(j));
    const VectorXd pn = num.fitted_probabilities(num_design);
    const VectorXd pd = den.fitted_probabilities(den_design);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double fn = a(i) == 1.0 ? pn(i) : 1.0 - pn(i);
      const double fd = a(i) == 1.0 ? pd(i) : 1.0 - pd(i);
      weight(i) *= fn / fd;
    }
    past = hcat({past, a});
  }
  if (opt.truncate_quantile) {
    std::vector<double> w(weight.data(), weight.data() + n);
    const double cap = stats::quantile(w, *opt.truncate_quantile);
    weight = weight.cwiseMin(cap);
  }
  e.diagnostics.max_weight = weight.maxCoeff();
  if (*e.diagnostics.max_weight > kExtremeWeight)
    e.diagnostics.warnings.push_back("ExtremeWeights: max stabilized weight " + std::to_string(*e.diagnostics.max_weight));

  VectorXd cum = VectorXd::Zero(n);
  for (const auto& a : p.a) cum += a;
  const MatrixXd design = hcat({ones_column(n), cum});
  const auto fit = ols(design, p.y, weight);
  const MatrixXd cov = sandwich_covariance(fit, design, weight);
  e.coefficients = fit.coefficients;
  e.coefficient_names = {"(intercept)", "cum(A)"};
  e.covariance = cov;
  for (const auto& ab : regimes) {
    double c = 0.0;
    for (double v : ab) c += v;
    VectorXd g(2);
    g << 1.0, c;
    ScalarEstimate s{g.dot(fit.coefficients), detail::delta_se(g, cov), std::nullopt};
    s.set_wald_ci();
    e.beta.push_back(s);
  }
  detail::finish_longitudinal(e, regimes);
  if (e.contrast) {
    VectorXd g(2);
    g << 0.0, static_cast<double>(J);
    e.contrast->se = detail::delta_se(g, cov);
    e.contrast->set_wald_ci();
  }
  return e;
}

inline RecursiveFit fit_recursive_ls(const Dataset& d, const RecursiveOptions& o = {}) {
  return fit_recursive_ls(panel_data(d), o);
}
inline EffectEstimate fit_longitudinal_g_computation(const Dataset& d, const LgcompOptions& o = {}) {
  return fit_longitudinal_g_computation(panel_data(d), o);
}
inline EffectEstimate fit_ipw_msm(const Dataset& d, const IpwOptions& o = {}) { return fit_ipw_msm(panel_data(d), o); }

}  // namespace proxcausal
