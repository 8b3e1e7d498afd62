#pragma once

// Nonparametric bootstrap over sampling units: rows for point data, whole
// subjects for longitudinal data. Replicate r draws its indices from the
// stream (seed, r), so results do not depend on thread scheduling.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "proxcausal/data_model.hpp"
#include "proxcausal/errors.hpp"
#include "proxcausal/rng.hpp"
#include "proxcausal/stats.hpp"

namespace proxcausal {

struct BootstrapOptions {
  int B = 500;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  int jobs = 1;
  /// Keep going when more than 5% of replicates fail.
  bool force = false;
  int min_B = 50;
};

struct BootstrapResult {
  /// Successful replicates in replicate order (rows) by parameter (cols).
  Eigen::MatrixXd replicates;
  Eigen::VectorXd se;
  Eigen::VectorXd ci_lower, ci_upper;
  int B = 0;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  int n_failed = 0;
  bool unreliable = false;
  std::vector<std::string> failures;  // "replicate r: message"

  /// Sample covariance of the successful replicates.
  Eigen::MatrixXd covariance() const {
    const Eigen::Index m = replicates.rows();
    if (m < 2) return Eigen::MatrixXd::Constant(replicates.cols(), replicates.cols(), std::nan(""));
    const Eigen::RowVectorXd mu = replicates.colwise().mean();
    const Eigen::MatrixXd c = replicates.rowwise() - mu;
    return c.transpose() * c / static_cast<double>(m - 1);
  }
};

inline constexpr double kMaxFailedFraction = 0.05;

/// Indices for replicate r: n draws with replacement from 0..n-1.
inline std::vector<std::size_t> bootstrap_indices(std::size_t n, std::uint64_t seed, std::uint64_t r) {
  CounterRng rng(seed, r);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = static_cast<std::size_t>(rng.below(n));
  return idx;
}

/// Summary statistics over a replicate matrix: SD and type-7 percentile CI.
inline void summarize_replicates(BootstrapResult& out) {
  const Eigen::Index p = out.replicates.cols();
  const Eigen::Index m = out.replicates.rows();
  out.se.resize(p);
  out.ci_lower.resize(p);
  out.ci_upper.resize(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    std::vector<double> col(static_cast<std::size_t>(m));
    for (Eigen::Index r = 0; r < m; ++r) col[static_cast<std::size_t>(r)] = out.replicates(r, k);
    out.se(k) = m >= 2 ? stats::sd(col) : std::nan("");
    out.ci_lower(k) = m >= 1 ? stats::quantile(col, out.alpha / 2.0) : std::nan("");
    out.ci_upper(k) = m >= 1 ? stats::quantile(col, 1.0 - out.alpha / 2.0) : std::nan("");
  }
}

/// Runs `estimator(resample(data, idx)) -> VectorXd` on B resamples.
/// Replicates that throw proxcausal::Error are dropped and counted.
template <class Data, class Estimator>
BootstrapResult bootstrap(const Data& data, Estimator&& estimator, const BootstrapOptions& opt) {
  if (opt.B < opt.min_B) fail(ErrorCode::InvalidArgument, "bootstrap needs B >= " + std::to_string(opt.min_B));
  if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) fail(ErrorCode::InvalidArgument, "alpha must lie in (0,1)");
  const std::size_t n = sampling_units(data);
  const auto B = static_cast<std::size_t>(opt.B);
  std::vector<std::optional<Eigen::VectorXd>> results(B);
  std::vector<std::string> errors(B);

  auto work = [&](std::size_t r) {
    try {
      const auto idx = bootstrap_indices(n, opt.seed, r);
      results[r] = estimator(resample(data, idx));
    } catch (const Error& e) {
      errors[r] = e.what();
    }
  };
  const int jobs = std::max(1, opt.jobs);
  if (jobs == 1) {
    for (std::size_t r = 0; r < B; ++r) work(r);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t)
      pool.emplace_back([&] {
        for (std::size_t r = next++; r < B; r = next++) work(r);
      });
    for (auto& th : pool) th.join();
  }

  BootstrapResult out;
  out.B = opt.B;
  out.alpha = opt.alpha;
  out.seed = opt.seed;
  Eigen::Index p = -1;
  std::size_t ok = 0;
  for (std::size_t r = 0; r < B; ++r) {
    if (!results[r]) {
      ++out.n_failed;
      out.failures.push_back("replicate " + std::to_string(r) + ": " + errors[r]);
      continue;
    }
    if (p < 0) p = results[r]->size();
    if (results[r]->size() != p) fail(ErrorCode::DimensionMismatch, "estimator returned vectors of varying length");
    ++ok;
  }
  out.replicates.resize(static_cast<Eigen::Index>(ok), std::max<Eigen::Index>(p, 0));
  Eigen::Index row = 0;
  for (std::size_t r = 0; r < B; ++r)
    if (results[r]) out.replicates.row(row++) = results[r]->transpose();
  out.unreliable = static_cast<double>(out.n_failed) > kMaxFailedFraction * static_cast<double>(B);
  if (out.unreliable && !opt.force)
    fail(ErrorCode::TooManyFailedReplicates,
         std::to_string(out.n_failed) + " of " + std::to_string(B) + " bootstrap replicates failed");
  summarize_replicates(out);
  return out;
}

}  // namespace proxcausal
