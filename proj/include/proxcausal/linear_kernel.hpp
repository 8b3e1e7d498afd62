#pragma once

// Least squares and logistic regression shared by every estimator.
//
// Least squares goes through a thin QR of the (row-weighted) design followed
// by an SVD of the small triangular factor. Singular values below
// kRankTolerance * sigma_max are treated as zero, which makes the returned
// coefficients the minimum-norm solution when the design is rank deficient.

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "proxcausal/errors.hpp"

namespace proxcausal {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kRankTolerance = 1e-10;

struct LinearFit {
  VectorXd coefficients;
  VectorXd fitted_values;
  VectorXd residuals;
  Eigen::Index rank = 0;
  double sigma2_hat = 0.0;
  /// sigma2_hat * (X'WX)^+ ; a pseudo-inverse when rank deficient.
  MatrixXd cov_coefficients;
  /// (X'WX)^+ without the variance factor.
  MatrixXd xtwx_pinv;
  /// False when rank < number of columns: coefficients are then the
  /// minimum-norm member of the solution set.
  bool unique = true;

  VectorXd standard_errors() const { return cov_coefficients.diagonal().cwiseMax(0.0).cwiseSqrt(); }
};

/// Factorizes a design once and solves against any number of responses.
class LeastSquaresSolver {
 public:
  explicit LeastSquaresSolver(const MatrixXd& design, std::optional<VectorXd> weights = std::nullopt,
                              double rank_tolerance = kRankTolerance)
      : design_(design), weights_(std::move(weights)) {
    const auto n = design.rows();
    const auto p = design.cols();
    if (n < 1 || p < 1) fail(ErrorCode::DimensionMismatch, "design must be at least 1x1");
    if (!design.allFinite()) fail(ErrorCode::NonFiniteValue, "design contains non-finite values");
    MatrixXd xw = design;
    if (weights_) {
      const VectorXd& w = *weights_;
      if (w.size() != n) fail(ErrorCode::DimensionMismatch, "weights length differs from design rows");
      if ((w.array() < 0.0).any() || !w.allFinite())
        fail(ErrorCode::InvalidArgument, "weights must be finite and nonnegative");
      if (w.sum() <= 0.0) fail(ErrorCode::AllZeroWeights, "weights sum to zero");
      sqrt_w_ = w.cwiseSqrt();
      xw = sqrt_w_.asDiagonal() * design;
      n_effective_ = static_cast<double>((w.array() > 0.0).count());
    } else {
      n_effective_ = static_cast<double>(n);
    }

    if (n >= p) {
      qr_.compute(xw);
      MatrixXd r = qr_.matrixQR().topRows(p).triangularView<Eigen::Upper>();
      svd_.compute(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
      use_qr_ = true;
    } else {
      svd_.compute(xw, Eigen::ComputeThinU | Eigen::ComputeThinV);
    }
    const VectorXd& s = svd_.singularValues();
    const double cutoff = rank_tolerance * (s.size() > 0 ? s(0) : 0.0);
    rank_ = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
      if (s(i) > cutoff) ++rank_;
    const MatrixXd v = svd_.matrixV().leftCols(rank_);
    const VectorXd inv_s2 = s.head(rank_).array().square().inverse();
    xtwx_pinv_ = v * inv_s2.asDiagonal() * v.transpose();
  }

  Eigen::Index rank() const { return rank_; }
  Eigen::Index cols() const { return design_.cols(); }
  const MatrixXd& design() const { return design_; }
  const MatrixXd& xtwx_pinv() const { return xtwx_pinv_; }

  /// Minimum-norm coefficients for one response.
  VectorXd coefficients(const VectorXd& response) const {
    if (response.size() != design_.rows())
      fail(ErrorCode::DimensionMismatch, "response length differs from design rows");
    const VectorXd yw = weights_ ? VectorXd(sqrt_w_.cwiseProduct(response)) : response;
    VectorXd rhs;
    if (use_qr_) {
      VectorXd qty = qr_.householderQ().transpose() * yw;
      rhs = qty.head(design_.cols());
    } else {
      rhs = yw;
    }
    const auto r = rank_;
    VectorXd ut = svd_.matrixU().leftCols(r).transpose() * rhs;
    ut.array() /= svd_.singularValues().head(r).array();
    return svd_.matrixV().leftCols(r) * ut;
  }

  LinearFit fit(const VectorXd& response) const {
    LinearFit out;
    out.coefficients = coefficients(response);
    out.fitted_values = design_ * out.coefficients;
    out.residuals = response - out.fitted_values;
    out.rank = rank_;
    out.unique = rank_ == design_.cols();
    double rss = 0.0;
    if (weights_)
      rss = (weights_->array() * out.residuals.array().square()).sum();
    else
      rss = out.residuals.squaredNorm();
    const double dof = n_effective_ - static_cast<double>(rank_);
    out.sigma2_hat = dof > 0.0 ? rss / dof : std::numeric_limits<double>::quiet_NaN();
    out.xtwx_pinv = xtwx_pinv_;
    out.cov_coefficients = out.sigma2_hat * xtwx_pinv_;
    return out;
  }

  /// Fitted values for each column of a response matrix.
  MatrixXd fitted(const MatrixXd& responses) const {
    MatrixXd out(design_.rows(), responses.cols());
    for (Eigen::Index k = 0; k < responses.cols(); ++k)
      out.col(k) = design_ * coefficients(responses.col(k));
    return out;
  }

 private:
  MatrixXd design_;
  std::optional<VectorXd> weights_;
  VectorXd sqrt_w_;
  double n_effective_ = 0.0;
  Eigen::HouseholderQR<MatrixXd> qr_;
  Eigen::JacobiSVD<MatrixXd> svd_;
  bool use_qr_ = false;
  Eigen::Index rank_ = 0;
  MatrixXd xtwx_pinv_;
};

/// Weighted least squares with a minimum-norm solution when rank deficient.
inline LinearFit ols(const MatrixXd& design, const VectorXd& response,
                     std::optional<VectorXd> weights = std::nullopt) {
  return LeastSquaresSolver(design, std::move(weights)).fit(response);
}

/// Heteroskedasticity-robust (HC0) sandwich covariance for a weighted fit.
inline MatrixXd sandwich_covariance(const LinearFit& fit, const MatrixXd& design,
                                    const std::optional<VectorXd>& weights = std::nullopt) {
  VectorXd score_scale = fit.residuals;
  if (weights) score_scale = score_scale.cwiseProduct(*weights);
  const MatrixXd scores = score_scale.asDiagonal() * design;
  const MatrixXd meat = scores.transpose() * scores;
  return fit.xtwx_pinv * meat * fit.xtwx_pinv;
}

/// Horizontal concatenation; zero-column blocks are allowed.
inline MatrixXd hcat(std::initializer_list<MatrixXd> blocks) {
  Eigen::Index rows = -1;
  Eigen::Index cols = 0;
  for (const auto& b : blocks) {
    if (rows < 0) rows = b.rows();
    if (b.rows() != rows && b.cols() > 0) fail(ErrorCode::DimensionMismatch, "hcat: row counts differ");
    cols += b.cols();
  }
  MatrixXd out(std::max<Eigen::Index>(rows, 0), cols);
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    if (b.cols() == 0) continue;
    out.middleCols(at, b.cols()) = b;
    at += b.cols();
  }
  return out;
}

inline MatrixXd ones_column(Eigen::Index n) { return MatrixXd::Ones(n, 1); }

/// Column-centered and unit-variance copy, for callers that ask for it.
inline MatrixXd standardize_columns(const MatrixXd& m) {
  MatrixXd out = m;
  const double n = static_cast<double>(m.rows());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double mu = m.col(j).mean();
    const double var = (m.col(j).array() - mu).square().sum() / std::max(1.0, n - 1.0);
    out.col(j).array() -= mu;
    if (var > 0.0) out.col(j) /= std::sqrt(var);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Logistic regression by iteratively reweighted least squares.

struct LogisticFit {
  VectorXd coefficients;
  MatrixXd cov_coefficients;
  bool converged = false;
  bool separation = false;
  int n_iterations = 0;
  double log_likelihood = 0.0;
  /// Log-likelihood at the start and after every accepted iteration.
  std::vector<double> log_likelihood_trace;

  VectorXd fitted_probabilities(const MatrixXd& design) const {
    return (design * coefficients).unaryExpr([](double eta) { return 1.0 / (1.0 + std::exp(-eta)); });
  }
  VectorXd standard_errors() const { return cov_coefficients.diagonal().cwiseMax(0.0).cwiseSqrt(); }
};

namespace detail {

inline double logistic_loglik(const MatrixXd& x, const VectorXd& y, const VectorXd& beta) {
  const VectorXd eta = x * beta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double e = eta(i);
    // log(1 + exp(e)) without overflow
    const double softplus = std::max(e, 0.0) + std::log1p(std::exp(-std::abs(e)));
    ll += y(i) * e - softplus;
  }
  return ll;
}

inline MatrixXd symmetric_pinv(const MatrixXd& h, double tol = kRankTolerance) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(h);
  const VectorXd& ev = es.eigenvalues();
  const double cutoff = tol * ev.cwiseAbs().maxCoeff();
  VectorXd inv = VectorXd::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > cutoff) inv(i) = 1.0 / ev(i);
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

inline LogisticFit logistic_irls(const MatrixXd& design, const VectorXd& response, int max_iter = 100,
                                 double tol = 1e-8) {
  const auto n = design.rows();
  const auto p = design.cols();
  if (response.size() != n) fail(ErrorCode::DimensionMismatch, "response length differs from design rows");
  if (n < 1 || p < 1) fail(ErrorCode::DimensionMismatch, "design must be at least 1x1");
  Eigen::Index ones = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (response(i) != 0.0 && response(i) != 1.0)
      fail(ErrorCode::NonBinaryColumn, "logistic response must be 0/1");
    if (response(i) == 1.0) ++ones;
  }
  if (ones == 0 || ones == n) fail(ErrorCode::SingleClassResponse, "response has a single class");

  LogisticFit out;
  VectorXd beta = VectorXd::Zero(p);
  double ll = detail::logistic_loglik(design, response, beta);
  out.log_likelihood_trace.push_back(ll);
  MatrixXd h_inv;
  for (int iter = 1; iter <= max_iter; ++iter) {
    const VectorXd prob = (design * beta).unaryExpr([](double e) { return 1.0 / (1.0 + std::exp(-e)); });
    const VectorXd w = prob.cwiseProduct(VectorXd::Ones(n) - prob);
    const MatrixXd h = design.transpose() * w.asDiagonal() * design;
    const VectorXd g = design.transpose() * (response - prob);
    h_inv = detail::symmetric_pinv(h);
    VectorXd step = h_inv * g;

    VectorXd candidate = beta + step;
    double cand_ll = detail::logistic_loglik(design, response, candidate);
    int halvings = 0;
    while (cand_ll < ll && halvings < 40) {
      step *= 0.5;
      candidate = beta + step;
      cand_ll = detail::logistic_loglik(design, response, candidate);
      ++halvings;
    }
    out.n_iterations = iter;
    if (cand_ll < ll) break;  // no ascent direction left
    double rel = 0.0;
    for (Eigen::Index k = 0; k < p; ++k)
      rel = std::max(rel, std::abs(candidate(k) - beta(k)) / std::max(1.0, std::abs(candidate(k))));
    beta = candidate;
    ll = cand_ll;
    out.log_likelihood_trace.push_back(ll);
    if (rel < tol) {
      out.converged = true;
      break;
    }
  }
  const VectorXd prob = (design * beta).unaryExpr([](double e) { return 1.0 / (1.0 + std::exp(-e)); });
  const VectorXd w = prob.cwiseProduct(VectorXd::Ones(n) - prob);
  out.cov_coefficients = detail::symmetric_pinv(design.transpose() * w.asDiagonal() * design);
  out.coefficients = beta;
  out.log_likelihood = ll;
  // Separation: diverging coefficients, or every observation fitted to within
  // 1e-6 of its label (IRLS creeps slowly on separated data, so the norm
  // threshold alone is rarely reached within max_iter).
  const double max_gap = (response - prob).cwiseAbs().maxCoeff();
  out.separation = beta.norm() > 1e4 || max_gap < 1e-6;
  if (out.separation) out.converged = false;
  return out;
}

}  // namespace proxcausal
