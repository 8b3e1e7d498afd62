#pragma once

// Outcome confounding bridges h(a, x, w) solving
//   E(Y | a, z, x) = sum_w h(a, x, w) P(w | a, z, x)
// for discrete laws, and the parametric (linear or probit-linked) bridge used
// by the estimators on continuous data.

#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "proxcausal/discrete_law.hpp"
#include "proxcausal/errors.hpp"
#include "proxcausal/rng.hpp"
#include "proxcausal/stats.hpp"
#include "proxcausal/synthetic_dgp.hpp"

namespace proxcausal {

struct DiscreteBridge {
  std::size_t a = 0;
  std::optional<std::size_t> x;
  Eigen::VectorXd h;  // indexed by w
  /// max_z |E(Y|a,z,x) - sum_w h(w) P(w|a,z,x)|
  double residual = 0.0;
  bool rank_deficient = false;
  /// Binary solver only: the table built from each z slice, for the
  /// z-independence check.
  std::vector<Eigen::VectorXd> slice_tables;
};

namespace detail {

inline Eigen::VectorXd outcome_by_z(const DiscreteJointLaw& law, std::size_t a, std::optional<std::size_t> x) {
  const auto dz = law.cardinality("Z");
  Eigen::VectorXd b(static_cast<Eigen::Index>(dz));
  for (std::size_t z = 0; z < dz; ++z) {
    Cell c = condition_on(a, x);
    c.emplace_back("Z", z);
    b(static_cast<Eigen::Index>(z)) = law.expected_outcome(c);
  }
  return b;
}

}  // namespace detail

/// Largest violation of the bridge equation over z.
inline double bridge_residual(const DiscreteJointLaw& law, std::size_t a, std::optional<std::size_t> x,
                              const Eigen::VectorXd& h) {
  const Eigen::MatrixXd m = proxy_conditional_matrix(law, a, x);  // d_w x d_z
  if (h.size() != m.rows()) fail(ErrorCode::DimensionMismatch, "bridge table length differs from d_w");
  return (m.transpose() * h - detail::outcome_by_z(law, a, x)).cwiseAbs().maxCoeff();
}

inline constexpr double kWeakProxyThreshold = 1e-10;
inline constexpr double kBridgeSolveTolerance = 1e-8;

/// Closed form for binary W and Z:
///   h(w) = E(Y|a,z,x) + g (w - P(W=1|a,z,x)),
///   g = [E(Y|a,1,x) - E(Y|a,0,x)] / [P(W=1|a,1,x) - P(W=1|a,0,x)],
/// which does not depend on the z slice used.
inline DiscreteBridge solve_binary_bridge(const DiscreteJointLaw& law, std::size_t a,
                                          std::optional<std::size_t> x = std::nullopt) {
  if (law.cardinality("W") != 2 || law.cardinality("Z") != 2)
    fail(ErrorCode::InvalidLaw, "binary bridge needs binary W and Z");
  const Eigen::MatrixXd m = proxy_conditional_matrix(law, a, x);
  const Eigen::VectorXd ey = detail::outcome_by_z(law, a, x);
  const double dw = m(1, 1) - m(1, 0);
  if (std::abs(dw) < kWeakProxyThreshold)
    fail(ErrorCode::WeakProxy, "W is not associated with Z given (A, X)");
  const double g = (ey(1) - ey(0)) / dw;
  DiscreteBridge out;
  out.a = a;
  out.x = x;
  for (Eigen::Index z = 0; z < 2; ++z) {
    Eigen::VectorXd h(2);
    for (Eigen::Index w = 0; w < 2; ++w) h(w) = ey(z) + g * (static_cast<double>(w) - m(1, z));
    out.slice_tables.push_back(h);
  }
  out.h = out.slice_tables[0];
  out.residual = bridge_residual(law, a, x, out.h);
  return out;
}

/// Minimum-norm least-squares solve of the d_z x d_w system
/// sum_w h(w) P(w|a,z,x) = E(Y|a,z,x). Any exact solution gives the same
/// proximal g-formula value, so the minimum-norm one is returned when the
/// system is underdetermined.
inline DiscreteBridge solve_categorical_bridge(const DiscreteJointLaw& law, std::size_t a,
                                               std::optional<std::size_t> x = std::nullopt,
                                               double rank_tol = 1e-10) {
  const Eigen::MatrixXd m = proxy_conditional_matrix(law, a, x);
  const Eigen::MatrixXd system = m.transpose();  // d_z x d_w
  const Eigen::VectorXd b = detail::outcome_by_z(law, a, x);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(system, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd s = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rank_tol * s(0)) ++rank;
  Eigen::VectorXd h = Eigen::VectorXd::Zero(system.cols());
  for (Eigen::Index i = 0; i < rank; ++i) h += svd.matrixV().col(i) * (svd.matrixU().col(i).dot(b) / s(i));
  DiscreteBridge out;
  out.a = a;
  out.x = x;
  out.h = h;
  out.rank_deficient = rank < system.cols();
  out.residual = (system * h - b).cwiseAbs().maxCoeff();
  if (out.residual > kBridgeSolveTolerance)
    fail(ErrorCode::NoSolution, "bridge system residual " + std::to_string(out.residual) + " exceeds tolerance");
  return out;
}

/// Basis of the null space of the bridge system; adding any combination to a
/// solution gives another solution.
inline Eigen::MatrixXd bridge_null_space(const DiscreteJointLaw& law, std::size_t a,
                                         std::optional<std::size_t> x = std::nullopt, double rank_tol = 1e-10) {
  const Eigen::MatrixXd system = proxy_conditional_matrix(law, a, x).transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(system, Eigen::ComputeFullV);
  const Eigen::VectorXd s = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rank_tol * s(0)) ++rank;
  return svd.matrixV().rightCols(system.cols() - rank);
}

/// Without Z: h(a, x, w) = E(Y | a, x, w). Under exchangeability given (X, W)
/// the proximal g-formula built from it is the standard g-formula.
inline DiscreteBridge g_formula_bridge(const DiscreteJointLaw& law, std::size_t a,
                                       std::optional<std::size_t> x = std::nullopt) {
  const auto dw = law.cardinality("W");
  if (dw == 0) fail(ErrorCode::InvalidLaw, "law has no W");
  DiscreteBridge out;
  out.a = a;
  out.x = x;
  out.h.resize(static_cast<Eigen::Index>(dw));
  for (std::size_t w = 0; w < dw; ++w) {
    Cell c = detail::condition_on(a, x);
    c.emplace_back("W", w);
    out.h(static_cast<Eigen::Index>(w)) = law.expected_outcome(c);
  }
  return out;
}

enum class DiscreteSolver { binary, categorical, g_formula };

inline DiscreteBridge solve_bridge(const DiscreteJointLaw& law, std::size_t a, std::optional<std::size_t> x,
                                   DiscreteSolver solver) {
  switch (solver) {
    case DiscreteSolver::binary: return solve_binary_bridge(law, a, x);
    case DiscreteSolver::categorical: return solve_categorical_bridge(law, a, x);
    case DiscreteSolver::g_formula: return g_formula_bridge(law, a, x);
  }
  fail(ErrorCode::InvalidArgument, "unknown solver");
}

/// beta(a) = sum_{w,x} h(a, x, w) P(w, x) with one table per x category
/// (a single table when the law has no X).
inline double proximal_g_formula(const DiscreteJointLaw& law, const std::vector<Eigen::VectorXd>& tables) {
  const auto dx = law.cardinality("X");
  const std::size_t nx = dx == 0 ? 1 : dx;
  if (tables.size() != nx) fail(ErrorCode::DimensionMismatch, "need one bridge table per X category");
  double beta = 0.0;
  for (std::size_t x = 0; x < nx; ++x)
    for (Eigen::Index w = 0; w < tables[x].size(); ++w) {
      Cell c{{"W", static_cast<std::size_t>(w)}};
      if (dx > 0) c.emplace_back("X", x);
      beta += tables[x](w) * law.mass(c);
    }
  return beta;
}

inline double proximal_g_formula(const DiscreteJointLaw& law, std::size_t a,
                                 DiscreteSolver solver = DiscreteSolver::categorical) {
  const auto dx = law.cardinality("X");
  std::vector<Eigen::VectorXd> tables;
  if (dx == 0)
    tables.push_back(solve_bridge(law, a, std::nullopt, solver).h);
  else
    for (std::size_t x = 0; x < dx; ++x) tables.push_back(solve_bridge(law, a, x, solver).h);
  return proximal_g_formula(law, tables);
}

// ---------------------------------------------------------------------------
// Parametric bridges over (1, treatment features, W, X).

/// Linear-Gaussian law of W given (Z, A, X): W = B'(1, z, a, x) + e,
/// e ~ N(0, Sigma).
struct GaussianWLaw {
  Eigen::MatrixXd coefficients;  // rows: (1, z..., a..., x...), cols: W
  Eigen::MatrixXd covariance;    // d_w x d_w

  Eigen::VectorXd mean(const Eigen::VectorXd& z, const Eigen::VectorXd& a, const Eigen::VectorXd& x) const {
    Eigen::VectorXd r(1 + z.size() + a.size() + x.size());
    r << 1.0, z, a, x;
    if (r.size() != coefficients.rows()) fail(ErrorCode::DimensionMismatch, "(z, a, x) does not match the W law");
    return coefficients.transpose() * r;
  }
};

struct BridgeFunction {
  enum class Form { linear, probit_linked };
  Form form = Form::linear;
  Eigen::VectorXd eta;  // (intercept, treatment features, W, X)
  Eigen::Index n_a = 1, n_w = 0, n_x = 0;
  /// Residual covariance of the W first stage (probit_linked).
  Eigen::MatrixXd sigma;

  Eigen::VectorXd eta_w() const { return eta.segment(1 + n_a, n_w); }

  /// Attenuation (1 + eta_w' Sigma eta_w)^(-1/2).
  double phi() const {
    if (n_w == 0 || sigma.size() == 0) return 1.0;
    const Eigen::VectorXd ew = eta_w();
    return 1.0 / std::sqrt(1.0 + ew.dot(sigma * ew));
  }

  double linear_predictor(const Eigen::VectorXd& w, const Eigen::VectorXd& a, const Eigen::VectorXd& x) const {
    if (w.size() != n_w || a.size() != n_a || x.size() != n_x) fail(ErrorCode::DimensionMismatch, "bridge argument sizes");
    return eta(0) + eta.segment(1, n_a).dot(a) + eta.segment(1 + n_a, n_w).dot(w) + eta.segment(1 + n_a + n_w, n_x).dot(x);
  }

  /// h(w, a, x; eta): identity link for linear, Phi for probit_linked.
  double evaluate(const Eigen::VectorXd& w, const Eigen::VectorXd& a, const Eigen::VectorXd& x) const {
    const double lp = linear_predictor(w, a, x);
    return form == Form::linear ? lp : stats::normal_cdf(lp);
  }
};

/// E[h(W, a, x) | Z, A, X] with W ~ N(w_mean, Sigma):
///   Phi(phi * (1, a, w_mean, x) eta),  phi = (1 + eta_w' Sigma eta_w)^(-1/2).
inline double probit_bridge_mean(const BridgeFunction& h, const Eigen::VectorXd& w_mean, const Eigen::VectorXd& a,
                                 const Eigen::VectorXd& x) {
  if (h.form != BridgeFunction::Form::probit_linked) fail(ErrorCode::InvalidArgument, "bridge is not probit-linked");
  return stats::normal_cdf(h.phi() * h.linear_predictor(w_mean, a, x));
}

inline double probit_bridge_mean(const BridgeFunction& h, const GaussianWLaw& first_stage, const Eigen::VectorXd& z,
                                 const Eigen::VectorXd& a, const Eigen::VectorXd& x) {
  return probit_bridge_mean(h, first_stage.mean(z, a, x), a, x);
}

namespace detail {

/// Symmetric square root of a PSD matrix (tolerates singular Sigma).
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

/// Monte-Carlo integral of Phi((1, a, W, x) eta) over W ~ N(w_mean, Sigma).
inline McMean probit_bridge_mean_mc(const BridgeFunction& h, const Eigen::VectorXd& w_mean, const Eigen::VectorXd& a,
                                    const Eigen::VectorXd& x, std::size_t draws, std::uint64_t seed) {
  const Eigen::MatrixXd root = h.n_w > 0 ? detail::psd_sqrt(h.sigma) : Eigen::MatrixXd();
  CounterRng rng(seed, 0x70726f626974ULL);
  std::vector<double> v(draws);
  Eigen::VectorXd e(h.n_w);
  for (auto& out : v) {
    for (Eigen::Index k = 0; k < h.n_w; ++k) e(k) = rng.normal();
    const Eigen::VectorXd w = h.n_w > 0 ? Eigen::VectorXd(w_mean + root * e) : w_mean;
    out = stats::normal_cdf(h.linear_predictor(w, a, x));
  }
  return {stats::mean(v), stats::sd(v) / std::sqrt(static_cast<double>(draws))};
}

}  // namespace proxcausal
