#pragma once

// Point-treatment estimators: OLS baseline, standard g-formula, proximal
// two-stage least squares and parametric proximal g-computation.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "proxcausal/bootstrap.hpp"
#include "proxcausal/bridge_solvers.hpp"
#include "proxcausal/data_model.hpp"
#include "proxcausal/estimate.hpp"
#include "proxcausal/linear_kernel.hpp"
#include "proxcausal/optimize.hpp"
#include "proxcausal/rng.hpp"
#include "proxcausal/stats.hpp"

namespace proxcausal {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kWeakFirstStageF = 10.0;

namespace detail {

inline double delta_se(const VectorXd& gradient, const MatrixXd& cov) {
  if (cov.size() == 0 || !cov.allFinite()) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(std::max(0.0, gradient.dot(cov * gradient)));
}

inline std::vector<std::string> concat_names(std::initializer_list<std::vector<std::string>> parts) {
  std::vector<std::string> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

/// Fills beta on the grid for a model whose beta(a) = g(a)'b, plus the
/// contrast beta(a0 + 1) - beta(a0) at a0 = 0.
template <class Gradient>
void fill_linear_grid(EffectEstimate& e, const std::vector<double>& grid, const VectorXd& b, const MatrixXd& cov,
                      Gradient&& gradient_at) {
  e.regimes = scalar_grid(grid);
  for (double a : grid) {
    const VectorXd g = gradient_at(a);
    ScalarEstimate s{g.dot(b), delta_se(g, cov), std::nullopt};
    s.set_wald_ci();
    e.beta.push_back(s);
  }
  const VectorXd gc = gradient_at(1.0) - gradient_at(0.0);
  ScalarEstimate c{gc.dot(b), delta_se(gc, cov), std::nullopt};
  c.set_wald_ci();
  e.contrast = c;
}

inline void require_point(const Dataset& d) {
  if (d.layout.is_longitudinal()) fail(ErrorCode::InvalidLayout, "expected point layout");
}

}  // namespace detail

// ---------------------------------------------------------------------------

struct AdjustSet {
  bool x = true, w = false, z = false;
};

struct OlsOptions {
  AdjustSet adjust;
  std::vector<double> grid{0.0, 1.0};
};

/// Least squares of Y on (1, A, selected covariates); classical covariance.
inline EffectEstimate fit_ols_baseline(const PointData& p, const OlsOptions& opt = {}) {
  const auto n = p.n();
  const MatrixXd empty(n, 0);
  const MatrixXd l = hcat({opt.adjust.x ? p.x : empty, opt.adjust.w ? p.w : empty, opt.adjust.z ? p.z : empty});
  const MatrixXd design = hcat({ones_column(n), p.a, l});
  const auto fit = ols(design, p.y);
  EffectEstimate e;
  e.method = Method::ols;
  e.coefficients = fit.coefficients;
  e.covariance = fit.cov_coefficients;
  e.coefficient_names = detail::concat_names({{"(intercept)", "A"},
                                              opt.adjust.x ? p.x_names : std::vector<std::string>{},
                                              opt.adjust.w ? p.w_names : std::vector<std::string>{},
                                              opt.adjust.z ? p.z_names : std::vector<std::string>{}});
  const VectorXd l_mean = l.colwise().mean().transpose();
  detail::fill_linear_grid(e, opt.grid, fit.coefficients, fit.cov_coefficients, [&](double a) {
    VectorXd g(design.cols());
    g << 1.0, a, l_mean;
    return g;
  });
  if (!fit.unique) e.diagnostics.warnings.push_back("outcome design is rank deficient");
  return e;
}

// ---------------------------------------------------------------------------

struct GFormulaOptions {
  AdjustSet adjust{true, true, true};
  /// Include A x L interaction terms.
  bool interactions = false;
  std::vector<double> grid{0.0, 1.0};
};

/// beta(a) = E_n{ E-hat(Y | a, L) } with a linear outcome model.
inline EffectEstimate fit_standard_g_formula(const PointData& p, const GFormulaOptions& opt = {}) {
  const auto n = p.n();
  const MatrixXd empty(n, 0);
  const MatrixXd l = hcat({opt.adjust.x ? p.x : empty, opt.adjust.w ? p.w : empty, opt.adjust.z ? p.z : empty});
  auto design_at = [&](const VectorXd& a) {
    const MatrixXd inter = opt.interactions ? MatrixXd(l.array().colwise() * a.array()) : MatrixXd(n, 0);
    return hcat({ones_column(n), a, l, inter});
  };
  const MatrixXd design = design_at(p.a);
  const auto fit = ols(design, p.y);
  EffectEstimate e;
  e.method = Method::g_formula;
  e.coefficients = fit.coefficients;
  e.covariance = fit.cov_coefficients;
  auto l_names = detail::concat_names({opt.adjust.x ? p.x_names : std::vector<std::string>{},
                                       opt.adjust.w ? p.w_names : std::vector<std::string>{},
                                       opt.adjust.z ? p.z_names : std::vector<std::string>{}});
  e.coefficient_names = detail::concat_names({{"(intercept)", "A"}, l_names});
  if (opt.interactions)
    for (const auto& nm : l_names) e.coefficient_names.push_back("A:" + nm);
  detail::fill_linear_grid(e, opt.grid, fit.coefficients, fit.cov_coefficients, [&](double a) {
    return VectorXd(design_at(VectorXd::Constant(n, a)).colwise().mean().transpose());
  });
  if (!fit.unique) e.diagnostics.warnings.push_back("outcome design is rank deficient");
  return e;
}

// ---------------------------------------------------------------------------
// W first stage shared by P2SLS and proximal g-computation.

struct WFirstStage {
  MatrixXd fitted;        // W-hat, n x d_w
  GaussianWLaw law;       // coefficients over (1, Z, A, X), residual covariance (MLE)
  std::vector<double> f_statistics;
  bool identity = false;  // Z empty: W serves as its own instrument
};

inline WFirstStage fit_w_first_stage(const PointData& p) {
  const auto n = p.n();
  const auto dw = p.w.cols();
  WFirstStage out;
  if (p.z.cols() == 0) {
    out.identity = true;
    out.fitted = p.w;
    out.law.coefficients = MatrixXd::Zero(1 + p.a.cols() + p.x.cols(), dw);
    out.law.covariance = MatrixXd::Zero(dw, dw);
    return out;
  }
  const MatrixXd s1 = hcat({ones_column(n), p.z, p.a, p.x});
  const LeastSquaresSolver full(s1);
  const LeastSquaresSolver restricted(hcat({ones_column(n), p.a, p.x}));
  out.fitted.resize(n, dw);
  out.law.coefficients.resize(s1.cols(), dw);
  MatrixXd resid(n, dw);
  const double q = static_cast<double>(full.rank() - restricted.rank());
  const double dof = static_cast<double>(n - full.rank());
  for (Eigen::Index k = 0; k < dw; ++k) {
    const VectorXd b = full.coefficients(p.w.col(k));
    out.law.coefficients.col(k) = b;
    out.fitted.col(k) = s1 * b;
    resid.col(k) = p.w.col(k) - out.fitted.col(k);
    const VectorXd rr = p.w.col(k) - restricted.design() * restricted.coefficients(p.w.col(k));
    const double rss_u = resid.col(k).squaredNorm();
    const double rss_r = rr.squaredNorm();
    out.f_statistics.push_back(q > 0 && dof > 0 && rss_u > 0 ? ((rss_r - rss_u) / q) / (rss_u / dof)
                                                             : std::numeric_limits<double>::infinity());
  }
  out.law.covariance = resid.transpose() * resid / static_cast<double>(n);
  return out;
}

inline void record_first_stage(Diagnostics& d, const WFirstStage& fs) {
  d.first_stage_f = fs.f_statistics;
  for (double f : fs.f_statistics)
    if (f < kWeakFirstStageF) d.weak_first_stage = true;
  if (d.weak_first_stage) d.warnings.push_back("WeakFirstStage: Z-block F statistic below 10");
}

// ---------------------------------------------------------------------------

struct P2slsOptions {
  std::vector<double> grid{0.0, 1.0};
};

/// Stage 1: OLS of each W on (1, Z, A, X). Stage 2: OLS of Y on
/// (1, A, W-hat, X). beta(a) = b0 + b_a a + eta_w' mean(W) + eta_x' mean(X).
/// Covariance: classical 2SLS, residual variance from the structural
/// residual Y - (1, A, W, X) b.
inline EffectEstimate fit_p2sls(const PointData& p, const P2slsOptions& opt = {}) {
  if (p.w.cols() == 0) fail(ErrorCode::InvalidArgument, "P2SLS needs at least one W column");
  const auto n = p.n();
  const auto fs = fit_w_first_stage(p);
  const MatrixXd d_hat = hcat({ones_column(n), p.a, fs.fitted, p.x});
  const LeastSquaresSolver stage2(d_hat);
  const VectorXd b = stage2.coefficients(p.y);
  const MatrixXd d_obs = hcat({ones_column(n), p.a, p.w, p.x});
  const VectorXd resid = p.y - d_obs * b;
  const double dof = static_cast<double>(n - stage2.rank());
  const double s2 = dof > 0 ? resid.squaredNorm() / dof : std::numeric_limits<double>::quiet_NaN();
  const MatrixXd cov = s2 * stage2.xtwx_pinv();

  EffectEstimate e;
  e.method = Method::p2sls;
  e.coefficients = b;
  e.covariance = cov;
  e.coefficient_names = detail::concat_names({{"(intercept)", "A"}, p.w_names, p.x_names});
  const auto dw = p.w.cols();
  e.eta_w = b.segment(2, dw);
  e.eta_w_se = cov.diagonal().segment(2, dw).cwiseMax(0.0).cwiseSqrt();
  e.eta_w_names = p.w_names;
  const VectorXd w_mean = p.w.colwise().mean().transpose();
  const VectorXd x_mean = p.x.colwise().mean().transpose();
  detail::fill_linear_grid(e, opt.grid, b, cov, [&](double a) {
    VectorXd g(b.size());
    g << 1.0, a, w_mean, x_mean;
    return g;
  });
  record_first_stage(e.diagnostics, fs);
  if (p.z.cols() < p.w.cols() || stage2.rank() < d_hat.cols()) {
    e.diagnostics.rank_deficient_stage2 = true;
    e.diagnostics.warnings.push_back("RankDeficientStage2: minimum-norm second stage");
  }
  return e;
}

// ---------------------------------------------------------------------------

enum class BridgeForm { linear, probit };
enum class Integration { closed_form, monte_carlo };

struct PgcompOptions {
  BridgeForm bridge = BridgeForm::linear;
  bool constrain_eta_w_zero = false;
  Integration integration = Integration::closed_form;
  int mc_draws = 4096;
  std::uint64_t seed = 0;
  int restarts = 3;
  double grad_tol = 1e-6;
  std::vector<double> grid{0.0, 1.0};
};

namespace detail {

/// Negative mean Bernoulli log-likelihood of Y under
/// mu_i = Phi(phi(eta) * d_i' eta) (closed form) or the Monte-Carlo average
/// of Phi over W draws from the fitted Gaussian law.
class ProbitBridgeObjective {
 public:
  ProbitBridgeObjective(MatrixXd design, VectorXd y, Eigen::Index w_start, Eigen::Index n_w, MatrixXd sigma,
                        std::optional<MatrixXd> mc_offsets)
      : d_(std::move(design)),
        y_(std::move(y)),
        w0_(w_start),
        nw_(n_w),
        sigma_(std::move(sigma)),
        offsets_(std::move(mc_offsets)) {}

  double phi(const VectorXd& eta) const {
    if (nw_ == 0 || offsets_) return 1.0;
    const VectorXd ew = eta.segment(w0_, nw_);
    return 1.0 / std::sqrt(1.0 + ew.dot(sigma_ * ew));
  }

  double operator()(const VectorXd& eta, VectorXd& grad) const {
    return offsets_ ? monte_carlo(eta, grad) : closed_form(eta, grad);
  }

 private:
  double closed_form(const VectorXd& eta, VectorXd& grad) const {
    const auto n = static_cast<double>(d_.rows());
    const VectorXd lp = d_ * eta;
    const double ph = phi(eta);
    double ll = 0.0;
    VectorXd s(lp.size());
    for (Eigen::Index i = 0; i < lp.size(); ++i) {
      const double t = ph * lp(i);
      if (y_(i) > 0.5) {
        ll += stats::log_normal_cdf(t);
        s(i) = stats::inverse_mills(t);
      } else {
        ll += stats::log_normal_cdf(-t);
        s(i) = -stats::inverse_mills(-t);
      }
    }
    grad = ph * (d_.transpose() * s);
    if (nw_ > 0) {
      const VectorXd ew = eta.segment(w0_, nw_);
      grad.segment(w0_, nw_) += s.dot(lp) * (-ph * ph * ph) * (sigma_ * ew);
    }
    grad /= -n;
    return -ll / n;
  }

  double monte_carlo(const VectorXd& eta, VectorXd& grad) const {
    // offsets_: n_w x K matrix of draws L e_k
    const auto n = static_cast<double>(d_.rows());
    const MatrixXd& e = *offsets_;
    const auto K = e.cols();
    const VectorXd lp = d_ * eta;
    const VectorXd shift = e.transpose() * eta.segment(w0_, nw_);  // K
    double ll = 0.0;
    grad = VectorXd::Zero(eta.size());
    for (Eigen::Index i = 0; i < lp.size(); ++i) {
      double mu = 0.0, dens = 0.0;
      VectorXd dens_e = VectorXd::Zero(nw_);
      for (Eigen::Index k = 0; k < K; ++k) {
        const double t = lp(i) + shift(k);
        const double f = stats::normal_pdf(t);
        mu += stats::normal_cdf(t);
        dens += f;
        dens_e += f * e.col(k);
      }
      mu /= static_cast<double>(K);
      dens /= static_cast<double>(K);
      dens_e /= static_cast<double>(K);
      mu = std::clamp(mu, 1e-300, 1.0 - 1e-16);
      const double wgt = y_(i) > 0.5 ? 1.0 / mu : -1.0 / (1.0 - mu);
      ll += y_(i) > 0.5 ? std::log(mu) : std::log1p(-mu);
      grad += wgt * dens * d_.row(i).transpose();
      grad.segment(w0_, nw_) += wgt * dens_e;
    }
    grad /= -n;
    return -ll / n;
  }

  MatrixXd d_;
  VectorXd y_;
  Eigen::Index w0_, nw_;
  MatrixXd sigma_;
  std::optional<MatrixXd> offsets_;
};

inline MatrixXd numerical_hessian(const Objective& f, const VectorXd& x) {
  const auto p = x.size();
  MatrixXd h(p, p);
  VectorXd gp(p), gm(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const double step = 1e-5 * std::max(1.0, std::abs(x(k)));
    VectorXd xp = x, xm = x;
    xp(k) += step;
    xm(k) -= step;
    f(xp, gp);
    f(xm, gm);
    h.col(k) = (gp - gm) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

}  // namespace detail

/// Parametric proximal g-computation. The W law is linear-Gaussian given
/// (Z, A, X). Linear bridge: least squares of Y on (1, A, W-hat, X), the
/// closed-form mu under a Gaussian W law. Probit bridge (binary Y): maximum
/// likelihood in eta with mu = Phi(phi * (1, A, W-hat, X) eta). Either way
/// beta(a) = E_n{ h(W, a, X; eta-hat) } at the observed W.
inline EffectEstimate fit_proximal_g_computation(const PointData& p, const PgcompOptions& opt = {}) {
  const auto n = p.n();
  const auto fs = fit_w_first_stage(p);
  const MatrixXd w_hat = opt.constrain_eta_w_zero ? MatrixXd(n, 0) : fs.fitted;
  const MatrixXd w_obs = opt.constrain_eta_w_zero ? MatrixXd(n, 0) : p.w;
  const auto dw = w_hat.cols();
  const MatrixXd design = hcat({ones_column(n), p.a, w_hat, p.x});
  EffectEstimate e;
  e.method = Method::proximal_g_computation;
  e.coefficient_names =
      detail::concat_names({{"(intercept)", "A"}, opt.constrain_eta_w_zero ? std::vector<std::string>{} : p.w_names, p.x_names});
  const VectorXd x_mean = p.x.colwise().mean().transpose();
  const VectorXd w_mean = w_obs.colwise().mean().transpose();

  if (opt.bridge == BridgeForm::linear) {
    const LeastSquaresSolver solver(design);
    const VectorXd b = solver.coefficients(p.y);
    const VectorXd resid = p.y - hcat({ones_column(n), p.a, w_obs, p.x}) * b;
    const double dof = static_cast<double>(n - solver.rank());
    const MatrixXd cov = (dof > 0 ? resid.squaredNorm() / dof : std::nan("")) * solver.xtwx_pinv();
    e.coefficients = b;
    e.covariance = cov;
    detail::fill_linear_grid(e, opt.grid, b, cov, [&](double a) {
      VectorXd g(b.size());
      g << 1.0, a, w_mean, x_mean;
      return g;
    });
  } else {
    for (Eigen::Index i = 0; i < n; ++i)
      if (p.y(i) != 0.0 && p.y(i) != 1.0) fail(ErrorCode::NonBinaryColumn, "probit bridge needs a binary outcome");
    std::optional<MatrixXd> offsets;
    if (opt.integration == Integration::monte_carlo && dw > 0) {
      CounterRng rng(opt.seed, 0x6d63ULL);
      MatrixXd draws(dw, opt.mc_draws);
      for (Eigen::Index k = 0; k < draws.cols(); ++k)
        for (Eigen::Index j = 0; j < dw; ++j) draws(j, k) = rng.normal();
      offsets = detail::psd_sqrt(fs.law.covariance) * draws;
    }
    const detail::ProbitBridgeObjective obj(design, p.y, 2, dw, dw > 0 ? fs.law.covariance : MatrixXd(), offsets);
    const Objective f = [&](const VectorXd& x, VectorXd& g) { return obj(x, g); };
    std::optional<MinimizeResult> best;
    double worst_grad = 0.0;
    for (int r = 0; r < std::max(1, opt.restarts); ++r) {
      VectorXd start = VectorXd::Zero(design.cols());
      if (r > 0) {
        CounterRng rng(opt.seed, 0x7374617274ULL + static_cast<std::uint64_t>(r));
        for (Eigen::Index k = 0; k < start.size(); ++k) start(k) = 0.5 * rng.normal();
      }
      auto res = minimize_bfgs(f, start, opt.grad_tol);
      if (!res.converged) {
        worst_grad = std::max(worst_grad, res.gradient_norm);
        continue;
      }
      if (!best || res.value < best->value) best = res;
    }
    if (!best)
      fail(ErrorCode::OptimizerNotConverged,
           "probit bridge did not converge; gradient infinity-norm " + std::to_string(worst_grad));
    const VectorXd eta = best->x;
    const MatrixXd cov = detail::symmetric_pinv(detail::numerical_hessian(f, eta)) / static_cast<double>(n);
    e.coefficients = eta;
    e.covariance = cov;
    e.diagnostics.gradient_norm = best->gradient_norm;
    e.regimes = scalar_grid(opt.grid);
    const MatrixXd base = hcat({ones_column(n), MatrixXd::Zero(n, 1), w_obs, p.x});
    auto beta_and_grad = [&](double a, VectorXd& g) {
      MatrixXd d = base;
      d.col(1).setConstant(a);
      const VectorXd lp = d * eta;
      double m = 0.0;
      g = VectorXd::Zero(eta.size());
      for (Eigen::Index i = 0; i < n; ++i) {
        m += stats::normal_cdf(lp(i));
        g += stats::normal_pdf(lp(i)) * d.row(i).transpose();
      }
      g /= static_cast<double>(n);
      return m / static_cast<double>(n);
    };
    for (double a : opt.grid) {
      VectorXd g;
      ScalarEstimate s{beta_and_grad(a, g), 0.0, std::nullopt};
      s.se = detail::delta_se(g, cov);
      s.set_wald_ci();
      e.beta.push_back(s);
    }
    VectorXd g1, g0;
    const double b1 = beta_and_grad(1.0, g1), b0 = beta_and_grad(0.0, g0);
    ScalarEstimate c{b1 - b0, detail::delta_se(g1 - g0, cov), std::nullopt};
    c.set_wald_ci();
    e.contrast = c;
  }
  if (!opt.constrain_eta_w_zero) {
    e.eta_w = e.coefficients.segment(2, dw);
    e.eta_w_se = e.covariance.diagonal().segment(2, dw).cwiseMax(0.0).cwiseSqrt();
    e.eta_w_names = p.w_names;
  }
  record_first_stage(e.diagnostics, fs);
  return e;
}

// ---------------------------------------------------------------------------

struct ConfoundingTest {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
  VectorXd eta_w;
  MatrixXd covariance;
  int bootstrap_failed = 0;
};

struct ConfoundingTestOptions {
  /// Bootstrap covariance of eta_w (reference) or the 2SLS asymptotic one.
  bool use_bootstrap = true;
  BootstrapOptions bootstrap{200, 0.05, 0, 1, false, 50};
};

/// Wald test of eta_w = 0 in the P2SLS fit, df = rank of the covariance.
inline ConfoundingTest test_confounding(const PointData& p, const ConfoundingTestOptions& opt = {}) {
  const auto fit = fit_p2sls(p);
  ConfoundingTest out;
  out.eta_w = fit.eta_w;
  const auto dw = fit.eta_w.size();
  if (opt.use_bootstrap) {
    auto br = bootstrap(p, [](const PointData& d) { return fit_p2sls(d).eta_w; }, opt.bootstrap);
    out.covariance = br.covariance();
    out.bootstrap_failed = br.n_failed;
  } else {
    out.covariance = fit.covariance.block(2, 2, dw, dw);
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(out.covariance);
  const VectorXd ev = es.eigenvalues();
  const double cutoff = kRankTolerance * std::max(ev.cwiseAbs().maxCoeff(), 0.0);
  VectorXd inv = VectorXd::Zero(ev.size());
  for (Eigen::Index k = 0; k < ev.size(); ++k)
    if (ev(k) > cutoff) {
      inv(k) = 1.0 / ev(k);
      ++out.df;
    }
  const VectorXd proj = es.eigenvectors().transpose() * out.eta_w;
  out.statistic = proj.cwiseProduct(inv).dot(proj);
  out.p_value = out.df > 0 ? stats::chi_squared_sf(out.statistic, out.df) : 1.0;
  return out;
}

// Dataset overloads.
inline EffectEstimate fit_ols_baseline(const Dataset& d, const OlsOptions& o = {}) {
  detail::require_point(d);
  return fit_ols_baseline(point_data(d), o);
}
inline EffectEstimate fit_standard_g_formula(const Dataset& d, const GFormulaOptions& o = {}) {
  detail::require_point(d);
  return fit_standard_g_formula(point_data(d), o);
}
inline EffectEstimate fit_p2sls(const Dataset& d, const P2slsOptions& o = {}) {
  detail::require_point(d);
  return fit_p2sls(point_data(d), o);
}
inline EffectEstimate fit_proximal_g_computation(const Dataset& d, const PgcompOptions& o = {}) {
  detail::require_point(d);
  return fit_proximal_g_computation(point_data(d), o);
}
inline ConfoundingTest test_confounding(const Dataset& d, const ConfoundingTestOptions& o = {}) {
  detail::require_point(d);
  return test_confounding(point_data(d), o);
}

}  // namespace proxcausal
