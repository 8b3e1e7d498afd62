#pragma once

// Bootstrap wrappers for fitted estimates and the replication-study driver
// used by the acceptance suite and the `replicate` subcommand.

#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "proxcausal/bootstrap.hpp"
#include "proxcausal/csv.hpp"
#include "proxcausal/estimate.hpp"
#include "proxcausal/longitudinal_estimators.hpp"
#include "proxcausal/point_estimators.hpp"
#include "proxcausal/rng.hpp"
#include "proxcausal/stats.hpp"
#include "proxcausal/synthetic_dgp.hpp"

namespace proxcausal {

/// Bootstrap of an estimate-producing fit over the flat parameter vector
/// (contrast, beta..., eta_w...).
template <class Data, class Fit>
BootstrapResult bootstrap_estimate(const Data& data, Fit&& fit, const BootstrapOptions& opt) {
  return bootstrap(data, [&](const Data& d) { return fit(d).parameters(); }, opt);
}

/// Replaces SEs and intervals of `e` with bootstrap SDs and percentile CIs.
inline void attach_bootstrap(EffectEstimate& e, const BootstrapResult& b) {
  const auto nb = static_cast<Eigen::Index>(e.beta.size());
  if (b.se.size() < 1 + nb) fail(ErrorCode::DimensionMismatch, "bootstrap result does not match the estimate");
  auto put = [&](ScalarEstimate& s, Eigen::Index k) {
    s.se = b.se(k);
    s.ci = Interval{b.ci_lower(k), b.ci_upper(k)};
  };
  if (e.contrast) put(*e.contrast, 0);
  for (Eigen::Index k = 0; k < nb; ++k) put(e.beta[static_cast<std::size_t>(k)], 1 + k);
  const auto nw = e.eta_w.size();
  if (b.se.size() == 1 + nb + nw) e.eta_w_se = b.se.tail(nw);
}

// ---------------------------------------------------------------------------

using PointEstimator = std::function<EffectEstimate(const PointData&)>;
using PanelEstimator = std::function<EffectEstimate(const PanelData&)>;

/// Named estimators available to replication studies and the CLI.
inline std::map<std::string, PointEstimator> point_estimators() {
  return {
      {"ols", [](const PointData& d) { return fit_ols_baseline(d); }},
      {"g_formula", [](const PointData& d) { return fit_standard_g_formula(d); }},
      {"p2sls", [](const PointData& d) { return fit_p2sls(d); }},
      {"pgcomp", [](const PointData& d) { return fit_proximal_g_computation(d); }},
      {"pgcomp_probit",
       [](const PointData& d) {
         PgcompOptions o;
         o.bridge = BridgeForm::probit;
         return fit_proximal_g_computation(d, o);
       }},
  };
}

inline std::map<std::string, PanelEstimator> panel_estimators() {
  return {
      {"recursive", [](const PanelData& d) { return fit_recursive_ls(d).estimate; }},
      {"lgcomp", [](const PanelData& d) { return fit_longitudinal_g_computation(d); }},
      {"ipw", [](const PanelData& d) { return fit_ipw_msm(d); }},
  };
}

struct ReplicationOptions {
  std::size_t n = 1000;
  int reps = 200;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::vector<std::string> estimators;
  /// When > 0, coverage uses bootstrap percentile intervals with this many
  /// replicates; otherwise the estimator's own Wald intervals.
  int bootstrap_B = 0;
  double alpha = 0.05;
  int min_reps = 50;
};

struct SummaryRow {
  std::string estimator;
  std::string target;  // "contrast" or "beta(a...)"
  double truth = 0.0;
  double mean = 0.0;
  double bias = 0.0;
  double mc_se = 0.0;  // sd / sqrt(successful reps)
  double sd = 0.0;
  double mean_se = std::numeric_limits<double>::quiet_NaN();
  double coverage = std::numeric_limits<double>::quiet_NaN();
  int n_ok = 0;
  int n_failed = 0;
};

struct ReplicationSummary {
  std::vector<SummaryRow> rows;
  std::vector<std::string> failures;  // "estimator replicate r: message"

  const SummaryRow& row(const std::string& estimator, const std::string& target) const {
    for (const auto& r : rows)
      if (r.estimator == estimator && r.target == target) return r;
    fail(ErrorCode::InvalidArgument, "no summary row " + estimator + "/" + target);
  }
};

inline std::string regime_label(const std::vector<double>& regime) {
  std::string s = "beta(";
  for (std::size_t k = 0; k < regime.size(); ++k) {
    if (k) s += ",";
    s += format_double(regime[k]);
  }
  return s + ")";
}

/// Seed of the r-th simulated dataset in a study.
inline std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t r) { return hash_combine(seed, r + 1); }

namespace detail {

struct Draw {
  bool ok = false;
  std::string error;
  EffectEstimate estimate;
};

template <class Data, class Estimator>
Draw run_one(const Data& data, const Estimator& est, const ReplicationOptions& opt, std::uint64_t r) {
  Draw d;
  try {
    d.estimate = est(data);
    if (opt.bootstrap_B > 0) {
      BootstrapOptions b;
      b.B = opt.bootstrap_B;
      b.alpha = opt.alpha;
      b.seed = hash_combine(opt.seed ^ 0x626f6f74ULL, r);
      b.min_B = 1;
      attach_bootstrap(d.estimate, bootstrap_estimate(data, est, b));
    }
    d.ok = true;
  } catch (const Error& e) {
    d.error = e.what();
  }
  return d;
}

/// Runs `body(r)` for r in [0, reps) across `jobs` threads.
template <class Body>
void parallel_for(int reps, int jobs, Body&& body) {
  if (jobs <= 1) {
    for (int r = 0; r < reps; ++r) body(r);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (int r = next++; r < reps; r = next++) body(r);
    });
  for (auto& th : pool) th.join();
}

inline SummaryRow summarize_target(const std::string& estimator, const std::string& target, double truth,
                                   const std::vector<std::optional<ScalarEstimate>>& draws) {
  SummaryRow row;
  row.estimator = estimator;
  row.target = target;
  row.truth = truth;
  std::vector<double> v, se;
  int covered = 0, with_ci = 0;
  for (const auto& d : draws) {
    if (!d) {
      ++row.n_failed;
      continue;
    }
    v.push_back(d->value);
    if (d->has_se()) se.push_back(d->se);
    if (d->ci) {
      ++with_ci;
      if (d->ci->lower <= truth && truth <= d->ci->upper) ++covered;
    }
  }
  row.n_ok = static_cast<int>(v.size());
  if (!v.empty()) {
    row.mean = stats::mean(v);
    row.bias = row.mean - truth;
    row.sd = v.size() > 1 ? stats::sd(v) : 0.0;
    row.mc_se = row.sd / std::sqrt(static_cast<double>(v.size()));
  }
  if (!se.empty()) row.mean_se = stats::mean(se);
  if (with_ci > 0) row.coverage = static_cast<double>(covered) / static_cast<double>(with_ci);
  return row;
}

template <class Spec, class Data, class Estimator>
ReplicationSummary run_study(const Spec& spec, const std::map<std::string, Estimator>& registry,
                             const ReplicationOptions& opt, const GroundTruth& truth,
                             const std::function<Data(const Spec&, std::size_t, std::uint64_t)>& simulate,
                             const std::vector<std::vector<double>>& targets) {
  if (opt.reps < opt.min_reps) fail(ErrorCode::InvalidArgument, "replication study needs reps >= " + std::to_string(opt.min_reps));
  if (opt.estimators.empty()) fail(ErrorCode::InvalidArgument, "no estimators requested");
  std::vector<const Estimator*> ests;
  for (const auto& nm : opt.estimators) {
    auto it = registry.find(nm);
    if (it == registry.end()) fail(ErrorCode::InvalidArgument, "unknown estimator '" + nm + "'");
    ests.push_back(&it->second);
  }
  const auto E = ests.size();
  const auto R = static_cast<std::size_t>(opt.reps);
  std::vector<std::vector<Draw>> draws(E, std::vector<Draw>(R));
  parallel_for(opt.reps, opt.jobs, [&](int r) {
    const auto rr = static_cast<std::uint64_t>(r);
    const Data data = simulate(spec, opt.n, replicate_seed(opt.seed, rr));
    for (std::size_t e = 0; e < E; ++e) draws[e][static_cast<std::size_t>(r)] = run_one(data, *ests[e], opt, rr);
  });

  ReplicationSummary out;
  for (std::size_t e = 0; e < E; ++e) {
    for (std::size_t r = 0; r < R; ++r)
      if (!draws[e][r].ok) out.failures.push_back(opt.estimators[e] + " replicate " + std::to_string(r) + ": " + draws[e][r].error);
    std::vector<std::optional<ScalarEstimate>> col(R);
    for (std::size_t r = 0; r < R; ++r)
      if (draws[e][r].ok && draws[e][r].estimate.contrast) col[r] = *draws[e][r].estimate.contrast;
    const double contrast_truth = truth.beta(targets.back()) - truth.beta(targets.front());
    out.rows.push_back(summarize_target(opt.estimators[e], "contrast", contrast_truth, col));
    for (const auto& t : targets) {
      for (std::size_t r = 0; r < R; ++r) {
        col[r].reset();
        if (!draws[e][r].ok) continue;
        const auto& est = draws[e][r].estimate;
        for (std::size_t k = 0; k < est.regimes.size(); ++k)
          if (est.regimes[k] == t) col[r] = est.beta[k];
      }
      out.rows.push_back(summarize_target(opt.estimators[e], regime_label(t), truth.beta(t), col));
    }
  }
  return out;
}

}  // namespace detail

/// Point-treatment study. Targets: the contrast beta(1) - beta(0) and
/// beta(0), beta(1).
inline ReplicationSummary run_replication_study(const PointDgpSpec& spec, const ReplicationOptions& opt) {
  const std::function<PointData(const PointDgpSpec&, std::size_t, std::uint64_t)> sim =
      [](const PointDgpSpec& s, std::size_t n, std::uint64_t seed) { return to_point_data(simulate_point_units(s, n, seed)); };
  return detail::run_study(spec, point_estimators(), opt, point_ground_truth(spec), sim, {{0.0}, {1.0}});
}

/// Longitudinal study. Targets: every binary regime and the contrast
/// beta(1,..,1) - beta(0,..,0).
inline ReplicationSummary run_replication_study(const LongitudinalDgpSpec& spec, const ReplicationOptions& opt) {
  const std::function<PanelData(const LongitudinalDgpSpec&, std::size_t, std::uint64_t)> sim =
      [](const LongitudinalDgpSpec& s, std::size_t n, std::uint64_t seed) { return simulate_panel_units(s, n, seed).data; };
  return detail::run_study(spec, panel_estimators(), opt, longitudinal_ground_truth(spec), sim, binary_regimes(spec.J));
}

/// Summary table as CSV text (fixed column order, shortest round-trip doubles).
inline std::string summary_csv(const ReplicationSummary& s) {
  std::string out = "estimator,target,truth,mean,bias,mc_se,sd,mean_se,coverage,n_ok,n_failed\n";
  for (const auto& r : s.rows) {
    out += csv_escape(r.estimator) + "," + csv_escape(r.target) + "," + format_double(r.truth) + "," + format_double(r.mean) + "," +
           format_double(r.bias) + "," + format_double(r.mc_se) + "," + format_double(r.sd) + "," +
           format_double(r.mean_se) + "," + format_double(r.coverage) + "," + std::to_string(r.n_ok) + "," +
           std::to_string(r.n_failed) + "\n";
  }
  return out;
}

}  // namespace proxcausal
