#pragma once

// Greedy split of candidate proxies into treatment-inducing (Z) and
// outcome-inducing (W) sets. Candidates are ranked by association with the
// outcome and with the treatment; each round the outcome side picks first.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "proxcausal/data_model.hpp"
#include "proxcausal/errors.hpp"
#include "proxcausal/linear_kernel.hpp"
#include "proxcausal/rng.hpp"

namespace proxcausal {

struct TiePolicy {
  enum class Kind { prioritize_w, prioritize_z, randomize };
  Kind kind = Kind::prioritize_w;
  std::uint64_t seed = 0;

  static TiePolicy prioritize_w() { return {Kind::prioritize_w, 0}; }
  static TiePolicy prioritize_z() { return {Kind::prioritize_z, 0}; }
  static TiePolicy randomize(std::uint64_t seed) { return {Kind::randomize, seed}; }
};

enum class AssociationScale { wald, coefficient };

struct CandidateStats {
  std::string name;
  double outcome_strength = 0.0;    // |t| of the candidate in Y ~ (1, A, X, L)
  double treatment_strength = 0.0;  // |z| (or |t|) in A ~ (1, X, L)
};

struct AllocationResult {
  std::vector<std::string> z_set, w_set;
  std::vector<CandidateStats> ranking_table;  // in candidate name order
  std::vector<std::string> tie_events;
  /// Picks in order as (name, "W" | "Z").
  std::vector<std::pair<std::string, std::string>> trace;
};

struct AllocationOptions {
  TiePolicy tie_policy;
  AssociationScale scale = AssociationScale::wald;
};

namespace detail {

/// Sort names by decreasing strength; equal strengths by name.
inline std::vector<std::string> ranked(const std::vector<CandidateStats>& stats, bool outcome_side) {
  std::vector<CandidateStats> s = stats;
  std::stable_sort(s.begin(), s.end(), [&](const CandidateStats& l, const CandidateStats& r) {
    const double a = outcome_side ? l.outcome_strength : l.treatment_strength;
    const double b = outcome_side ? r.outcome_strength : r.treatment_strength;
    if (a != b) return a > b;
    return l.name < r.name;
  });
  std::vector<std::string> out;
  for (const auto& c : s) out.push_back(c.name);
  return out;
}

inline void erase_name(std::vector<std::string>& v, const std::string& name) {
  v.erase(std::remove(v.begin(), v.end(), name), v.end());
}

}  // namespace detail

/// The greedy rounds on a precomputed ranking table.
inline AllocationResult allocate_from_stats(std::vector<CandidateStats> stats, const TiePolicy& policy) {
  if (stats.empty()) fail(ErrorCode::EmptyCandidates, "no candidate proxies");
  std::sort(stats.begin(), stats.end(), [](const auto& l, const auto& r) { return l.name < r.name; });
  for (std::size_t k = 1; k < stats.size(); ++k)
    if (stats[k].name == stats[k - 1].name) fail(ErrorCode::InvalidArgument, "duplicate candidate '" + stats[k].name + "'");
  AllocationResult out;
  out.ranking_table = stats;
  auto w_list = detail::ranked(stats, true);
  auto z_list = detail::ranked(stats, false);
  for (std::size_t k = 1; k < w_list.size(); ++k) {
    // report equal strengths resolved by name
    auto find = [&](const std::string& nm) {
      return *std::find_if(stats.begin(), stats.end(), [&](const auto& c) { return c.name == nm; });
    };
    if (find(w_list[k]).outcome_strength == find(w_list[k - 1]).outcome_strength)
      out.tie_events.push_back("outcome ranking: " + w_list[k - 1] + " and " + w_list[k] + " equal; ordered by name");
    if (find(z_list[k]).treatment_strength == find(z_list[k - 1]).treatment_strength)
      out.tie_events.push_back("treatment ranking: " + z_list[k - 1] + " and " + z_list[k] + " equal; ordered by name");
  }

  std::uint64_t round = 0;
  auto assign_w = [&](std::string nm) {
    out.w_set.push_back(nm);
    out.trace.emplace_back(nm, "W");
    detail::erase_name(w_list, nm);
    detail::erase_name(z_list, nm);
  };
  auto assign_z = [&](std::string nm) {
    out.z_set.push_back(nm);
    out.trace.emplace_back(nm, "Z");
    detail::erase_name(w_list, nm);
    detail::erase_name(z_list, nm);
  };
  while (!w_list.empty() || !z_list.empty()) {
    if (!w_list.empty() && !z_list.empty() && w_list.front() == z_list.front()) {
      const std::string nm = w_list.front();
      bool to_w = true;
      switch (policy.kind) {
        case TiePolicy::Kind::prioritize_w: to_w = true; break;
        case TiePolicy::Kind::prioritize_z: to_w = false; break;
        case TiePolicy::Kind::randomize: to_w = CounterRng(policy.seed, round).bernoulli(0.5); break;
      }
      out.tie_events.push_back("round " + std::to_string(round + 1) + ": " + nm + " tops both rankings; assigned to " +
                               (to_w ? "W" : "Z"));
      if (to_w) {
        assign_w(nm);
        if (!z_list.empty()) assign_z(z_list.front());
      } else {
        assign_z(nm);
        if (!w_list.empty()) assign_w(w_list.front());
      }
    } else {
      if (!w_list.empty()) assign_w(w_list.front());
      if (!z_list.empty()) assign_z(z_list.front());
    }
    ++round;
  }
  return out;
}

/// Association statistics from one outcome regression and one treatment
/// regression on all candidates jointly, then the greedy rounds.
inline AllocationResult allocate_proxies(const Dataset& d, std::vector<std::string> candidates,
                                         const AllocationOptions& opt = {}) {
  // fixed column order, so input order cannot leak in through rounding
  std::sort(candidates.begin(), candidates.end());
  if (candidates.empty()) fail(ErrorCode::EmptyCandidates, "no candidate proxies");
  if (d.layout.is_longitudinal()) fail(ErrorCode::InvalidLayout, "allocation works on point data");
  for (const auto& c : candidates) {
    if (!d.has_column(c)) fail(ErrorCode::MissingColumn, "no column '" + c + "'");
    const auto role = d.role_of(c);
    if (role && *role != ColumnRole::proxy_z && *role != ColumnRole::proxy_w)
      fail(ErrorCode::RoleConflict, "candidate '" + c + "' already has role " + std::string(to_string(*role)));
  }
  const auto n = static_cast<Eigen::Index>(d.n_rows);
  auto col = [&](const std::string& nm) {
    const auto& v = d.column(nm);
    return Eigen::Map<const Eigen::VectorXd>(v.data(), n).eval();
  };
  const auto y_name = d.columns_with(ColumnRole::outcome).at(0);
  const auto a_name = d.columns_with(ColumnRole::treatment).at(0);
  const Eigen::VectorXd y = col(y_name), a = col(a_name);
  MatrixXd x(n, 0);
  for (const auto& nm : d.columns_with(ColumnRole::covariate_x)) x = hcat({x, col(nm)});
  MatrixXd l(n, static_cast<Eigen::Index>(candidates.size()));
  for (std::size_t k = 0; k < candidates.size(); ++k) l.col(static_cast<Eigen::Index>(k)) = col(candidates[k]);

  const auto p_l = l.cols();
  const MatrixXd dy = hcat({ones_column(n), a, x, l});
  const auto fy = ols(dy, y);
  const VectorXd ty = opt.scale == AssociationScale::wald
                          ? VectorXd(fy.coefficients.tail(p_l).cwiseQuotient(fy.standard_errors().tail(p_l)))
                          : VectorXd(fy.coefficients.tail(p_l));

  bool binary = true;
  for (Eigen::Index i = 0; i < n && binary; ++i) binary = a(i) == 0.0 || a(i) == 1.0;
  const MatrixXd da = hcat({ones_column(n), x, l});
  VectorXd ta;
  if (binary) {
    const auto fa = logistic_irls(da, a);
    ta = opt.scale == AssociationScale::wald ? VectorXd(fa.coefficients.tail(p_l).cwiseQuotient(fa.standard_errors().tail(p_l)))
                                             : VectorXd(fa.coefficients.tail(p_l));
  } else {
    const auto fa = ols(da, a);
    ta = opt.scale == AssociationScale::wald ? VectorXd(fa.coefficients.tail(p_l).cwiseQuotient(fa.standard_errors().tail(p_l)))
                                             : VectorXd(fa.coefficients.tail(p_l));
  }
  std::vector<CandidateStats> stats;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const auto K = static_cast<Eigen::Index>(k);
    stats.push_back({candidates[k], std::abs(ty(K)), std::abs(ta(K))});
  }
  return allocate_from_stats(std::move(stats), opt.tie_policy);
}

/// Copy of the dataset with the allocated roles set.
inline Dataset apply_allocation(Dataset d, const AllocationResult& r) {
  for (const auto& nm : r.z_set) d.roles[nm] = ColumnRole::proxy_z;
  for (const auto& nm : r.w_set) d.roles[nm] = ColumnRole::proxy_w;
  return d;
}

}  // namespace proxcausal
