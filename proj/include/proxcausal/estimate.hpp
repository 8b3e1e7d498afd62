#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "proxcausal/errors.hpp"
#include "proxcausal/stats.hpp"

namespace proxcausal {

enum class Method { ols, g_formula, p2sls, proximal_g_computation, recursive_ls, longitudinal_g_computation, ipw_msm };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::ols: return "ols";
    case Method::g_formula: return "g_formula";
    case Method::p2sls: return "p2sls";
    case Method::proximal_g_computation: return "proximal_g_computation";
    case Method::recursive_ls: return "recursive_ls";
    case Method::longitudinal_g_computation: return "longitudinal_g_computation";
    case Method::ipw_msm: return "ipw_msm";
  }
  return "?";
}

struct Interval {
  double lower = 0.0, upper = 0.0;
};

/// Scalar summary with an optional standard error and interval.
struct ScalarEstimate {
  double value = 0.0;
  double se = std::numeric_limits<double>::quiet_NaN();
  std::optional<Interval> ci;

  bool has_se() const { return std::isfinite(se); }
  /// Wald interval value +- z_{1-alpha/2} se.
  void set_wald_ci(double alpha = 0.05) {
    if (!has_se()) return;
    const double q = stats::normal_quantile(1.0 - alpha / 2.0);
    ci = Interval{value - q * se, value + q * se};
  }
};

struct Diagnostics {
  /// First-stage F statistic of the Z block, one per W column.
  std::vector<double> first_stage_f;
  bool weak_first_stage = false;
  bool rank_deficient_stage2 = false;
  std::optional<double> confounding_p_value;
  std::optional<double> gradient_norm;
  std::optional<double> max_weight;
  std::vector<std::string> warnings;
};

struct EffectEstimate {
  Method method = Method::ols;
  /// Treatment values (point) or regimes (longitudinal) and beta-hat at each.
  std::vector<std::vector<double>> regimes;
  std::vector<ScalarEstimate> beta;
  /// Slope / contrast: beta_a for linear models, beta(1) - beta(0) otherwise.
  std::optional<ScalarEstimate> contrast;
  Eigen::VectorXd eta_w;
  Eigen::VectorXd eta_w_se;
  std::vector<std::string> eta_w_names;
  /// Full coefficient vector of the final outcome/bridge regression.
  Eigen::VectorXd coefficients;
  std::vector<std::string> coefficient_names;
  Eigen::MatrixXd covariance;
  Diagnostics diagnostics;

  const ScalarEstimate& beta_at(const std::vector<double>& regime) const {
    for (std::size_t k = 0; k < regimes.size(); ++k)
      if (regimes[k] == regime) return beta[k];
    fail(ErrorCode::InvalidArgument, "regime not on the estimate grid");
  }
  const ScalarEstimate& beta_at(double a) const { return beta_at(std::vector<double>{a}); }

  /// Flat parameter vector (contrast, beta..., eta_w...) for resampling.
  Eigen::VectorXd parameters() const {
    const auto nb = static_cast<Eigen::Index>(beta.size());
    Eigen::VectorXd p(1 + nb + eta_w.size());
    p(0) = contrast ? contrast->value : std::numeric_limits<double>::quiet_NaN();
    for (Eigen::Index k = 0; k < nb; ++k) p(1 + k) = beta[static_cast<std::size_t>(k)].value;
    p.tail(eta_w.size()) = eta_w;
    return p;
  }
};

/// Grid of scalar treatment values as single-entry regimes.
inline std::vector<std::vector<double>> scalar_grid(const std::vector<double>& values) {
  std::vector<std::vector<double>> out;
  for (double v : values) out.push_back({v});
  return out;
}

/// All 2^J binary regimes in lexicographic order (0,..,0), (0,..,1), ...
inline std::vector<std::vector<double>> binary_regimes(int J) {
  std::vector<std::vector<double>> out;
  for (int m = 0; m < (1 << J); ++m) {
    std::vector<double> r(static_cast<std::size_t>(J));
    for (int j = 0; j < J; ++j) r[static_cast<std::size_t>(j)] = (m >> (J - 1 - j)) & 1;
    out.push_back(r);
  }
  return out;
}

}  // namespace proxcausal
