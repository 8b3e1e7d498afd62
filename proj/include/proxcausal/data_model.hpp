#pragma once

// Observational datasets with column roles, plus the dense views the
// estimators work on (PointData for one row per unit, PanelData for one
// record per subject with J periods).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "proxcausal/errors.hpp"

namespace proxcausal {

enum class ColumnRole { outcome, treatment, covariate_x, proxy_z, proxy_w, subject_id, time_index };

inline std::string_view to_string(ColumnRole r) {
  switch (r) {
    case ColumnRole::outcome: return "outcome";
    case ColumnRole::treatment: return "treatment";
    case ColumnRole::covariate_x: return "covariate_x";
    case ColumnRole::proxy_z: return "proxy_z";
    case ColumnRole::proxy_w: return "proxy_w";
    case ColumnRole::subject_id: return "subject_id";
    case ColumnRole::time_index: return "time_index";
  }
  return "unknown";
}

inline std::optional<ColumnRole> parse_role(std::string_view s) {
  for (auto r : {ColumnRole::outcome, ColumnRole::treatment, ColumnRole::covariate_x, ColumnRole::proxy_z,
                 ColumnRole::proxy_w, ColumnRole::subject_id, ColumnRole::time_index})
    if (to_string(r) == s) return r;
  return std::nullopt;
}

struct Layout {
  enum class Kind { point, longitudinal };
  Kind kind = Kind::point;
  int periods = 1;  // J; meaningful for longitudinal layouts only

  static Layout point() { return {}; }
  static Layout longitudinal(int j) { return {Kind::longitudinal, j}; }
  bool is_longitudinal() const { return kind == Kind::longitudinal; }
  bool operator==(const Layout&) const = default;
};

using RoleMap = std::map<std::string, ColumnRole>;

struct RawTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
};

/// A validated table. Columns without an entry in `roles` are carried along
/// (e.g. proxy candidates awaiting allocation) but ignored by estimators.
struct Dataset {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  RoleMap roles;
  Layout layout;
  std::size_t n_rows = 0;

  bool has_column(std::string_view name) const {
    return std::find(names.begin(), names.end(), name) != names.end();
  }

  const std::vector<double>& column(std::string_view name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) fail(ErrorCode::MissingColumn, "no column '" + std::string(name) + "'");
    return columns[static_cast<std::size_t>(it - names.begin())];
  }

  /// Column names carrying a role, in table order.
  std::vector<std::string> columns_with(ColumnRole role) const {
    std::vector<std::string> out;
    for (const auto& n : names) {
      auto it = roles.find(n);
      if (it != roles.end() && it->second == role) out.push_back(n);
    }
    return out;
  }

  std::optional<ColumnRole> role_of(std::string_view name) const {
    auto it = roles.find(std::string(name));
    if (it == roles.end()) return std::nullopt;
    return it->second;
  }

  std::size_t n_subjects() const {
    return layout.is_longitudinal() ? n_rows / static_cast<std::size_t>(layout.periods) : n_rows;
  }

  bool operator==(const Dataset&) const = default;
};

namespace detail {

inline void check_subject_time(const RawTable& raw, const RoleMap& roles, const Layout& layout,
                               std::vector<Violation>& out) {
  std::string id_col, t_col;
  for (const auto& [name, role] : roles) {
    if (role == ColumnRole::subject_id) id_col = name;
    if (role == ColumnRole::time_index) t_col = name;
  }
  auto find = [&](const std::string& n) -> const std::vector<double>* {
    for (std::size_t k = 0; k < raw.names.size(); ++k)
      if (raw.names[k] == n) return &raw.columns[k];
    return nullptr;
  };
  const auto* ids = find(id_col);
  const auto* times = find(t_col);
  if (!ids || !times) return;
  const int J = layout.periods;
  std::map<double, std::vector<int>> seen;  // subject -> count per period
  for (std::size_t i = 0; i < ids->size(); ++i) {
    const double id = (*ids)[i];
    const double t = (*times)[i];
    if (!std::isfinite(id) || !std::isfinite(t)) continue;  // reported as NonFiniteValue
    if (t != std::floor(t) || t < 0 || t >= J) {
      out.push_back({ErrorCode::DuplicateSubjectTime, t_col, static_cast<long>(i),
                     "time index outside 0.." + std::to_string(J - 1)});
      continue;
    }
    auto& counts = seen[id];
    if (counts.empty()) counts.assign(static_cast<std::size_t>(J), 0);
    if (++counts[static_cast<std::size_t>(t)] == 2)
      out.push_back({ErrorCode::DuplicateSubjectTime, t_col, static_cast<long>(i),
                     "subject " + std::to_string(id) + " repeats time " + std::to_string(static_cast<int>(t))});
  }
  for (const auto& [id, counts] : seen)
    for (int j = 0; j < J; ++j)
      if (counts[static_cast<std::size_t>(j)] == 0)
        out.push_back({ErrorCode::DuplicateSubjectTime, t_col, -1,
                       "subject " + std::to_string(id) + " missing time " + std::to_string(j)});
}

}  // namespace detail

/// Checks every invariant and returns the dataset, or throws a
/// ValidationError listing all violations found.
inline Dataset validate_dataset(const RawTable& raw, const RoleMap& roles, const Layout& layout) {
  if (raw.names.empty() || raw.columns.empty() || raw.columns.front().empty())
    fail(ErrorCode::InvalidArgument, "raw table is empty");
  if (raw.names.size() != raw.columns.size())
    fail(ErrorCode::DimensionMismatch, "column names and columns differ in count");

  std::vector<Violation> v;
  const std::size_t n = raw.columns.front().size();
  for (std::size_t k = 0; k < raw.columns.size(); ++k) {
    if (raw.columns[k].size() != n)
      v.push_back({ErrorCode::RaggedColumn, raw.names[k], -1,
                   "length " + std::to_string(raw.columns[k].size()) + " != " + std::to_string(n)});
    for (std::size_t i = 0; i < raw.columns[k].size(); ++i)
      if (!std::isfinite(raw.columns[k][i]))
        v.push_back({ErrorCode::NonFiniteValue, raw.names[k], static_cast<long>(i), "missing or non-finite"});
  }
  for (std::size_t k = 0; k < raw.names.size(); ++k)
    for (std::size_t m = k + 1; m < raw.names.size(); ++m)
      if (raw.names[k] == raw.names[m]) v.push_back({ErrorCode::RoleConflict, raw.names[k], -1, "duplicate column name"});

  std::map<ColumnRole, int> count;
  for (const auto& [name, role] : roles) {
    if (std::find(raw.names.begin(), raw.names.end(), name) == raw.names.end())
      v.push_back({ErrorCode::MissingColumn, name, -1, "role '" + std::string(to_string(role)) + "' names a missing column"});
    ++count[role];
  }
  if (count[ColumnRole::outcome] != 1)
    v.push_back({ErrorCode::RoleConflict, "", -1,
                 "expected exactly one outcome column, found " + std::to_string(count[ColumnRole::outcome])});
  if (count[ColumnRole::treatment] < 1) v.push_back({ErrorCode::RoleConflict, "", -1, "no treatment column"});
  if (layout.is_longitudinal()) {
    if (layout.periods < 2) v.push_back({ErrorCode::RoleConflict, "", -1, "longitudinal layout needs J >= 2"});
    if (count[ColumnRole::treatment] > 1)
      v.push_back({ErrorCode::RoleConflict, "", -1, "long format carries one treatment column per period row"});
    if (count[ColumnRole::subject_id] != 1 || count[ColumnRole::time_index] != 1)
      v.push_back({ErrorCode::RoleConflict, "", -1, "longitudinal layout needs one subject_id and one time_index column"});
    if (v.empty() && layout.periods >= 2) {
      detail::check_subject_time(raw, roles, layout, v);
      if (n % static_cast<std::size_t>(layout.periods) != 0 && v.empty())
        v.push_back({ErrorCode::DuplicateSubjectTime, "", -1, "row count not a multiple of J"});
    }
  }
  if (!v.empty()) throw ValidationError(std::move(v));

  Dataset d;
  d.names = raw.names;
  d.columns = raw.columns;
  d.roles = roles;
  d.layout = layout;
  d.n_rows = n;
  return d;
}

inline Dataset validate_dataset(const Dataset& d) {
  return validate_dataset(RawTable{d.names, d.columns}, d.roles, d.layout);
}

// ---------------------------------------------------------------------------
// Dense views.

struct PointData {
  Eigen::VectorXd y;
  Eigen::VectorXd a;
  Eigen::MatrixXd x;
  Eigen::MatrixXd z;
  Eigen::MatrixXd w;
  std::vector<std::string> x_names, z_names, w_names;

  Eigen::Index n() const { return y.size(); }
};

namespace detail {

inline Eigen::MatrixXd gather(const Dataset& d, const std::vector<std::string>& cols,
                              const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const auto& c = d.column(cols[k]);
    for (std::size_t i = 0; i < rows.size(); ++i)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = c[rows[i]];
  }
  return m;
}

inline std::vector<std::size_t> iota_rows(std::size_t n) {
  std::vector<std::size_t> r(n);
  std::iota(r.begin(), r.end(), std::size_t{0});
  return r;
}

}  // namespace detail

inline PointData point_data(const Dataset& d) {
  if (d.layout.is_longitudinal()) fail(ErrorCode::InvalidLayout, "expected a point-treatment dataset");
  const auto treat = d.columns_with(ColumnRole::treatment);
  if (treat.size() != 1) fail(ErrorCode::RoleConflict, "point estimators need exactly one treatment column");
  const auto rows = detail::iota_rows(d.n_rows);
  PointData p;
  p.y = detail::gather(d, d.columns_with(ColumnRole::outcome), rows).col(0);
  p.a = detail::gather(d, treat, rows).col(0);
  p.x_names = d.columns_with(ColumnRole::covariate_x);
  p.z_names = d.columns_with(ColumnRole::proxy_z);
  p.w_names = d.columns_with(ColumnRole::proxy_w);
  p.x = detail::gather(d, p.x_names, rows);
  p.z = detail::gather(d, p.z_names, rows);
  p.w = detail::gather(d, p.w_names, rows);
  return p;
}

/// Wide per-subject records: subject i's period-j values sit in row i of the
/// period-j blocks. Subjects are ordered by ascending subject id.
struct PanelData {
  int periods = 0;
  Eigen::VectorXd subject_ids;
  Eigen::VectorXd y;
  std::vector<Eigen::VectorXd> a;  // a[j](i)
  std::vector<Eigen::MatrixXd> x, z, w;
  std::vector<std::string> x_names, z_names, w_names;

  Eigen::Index n() const { return y.size(); }
};

/// Pivots long format to wide records, sorting by (subject_id, time_index).
/// L(j) is taken to precede A(j) within a row. The outcome is read from each
/// subject's final-period row.
inline PanelData panel_data(const Dataset& d) {
  if (!d.layout.is_longitudinal()) fail(ErrorCode::InvalidLayout, "expected a longitudinal dataset");
  const int J = d.layout.periods;
  const auto& ids = d.column(d.columns_with(ColumnRole::subject_id).at(0));
  const auto& times = d.column(d.columns_with(ColumnRole::time_index).at(0));
  std::vector<std::size_t> order = detail::iota_rows(d.n_rows);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    if (ids[l] != ids[r]) return ids[l] < ids[r];
    return times[l] < times[r];
  });
  const std::size_t n = d.n_rows / static_cast<std::size_t>(J);
  PanelData p;
  p.periods = J;
  p.x_names = d.columns_with(ColumnRole::covariate_x);
  p.z_names = d.columns_with(ColumnRole::proxy_z);
  p.w_names = d.columns_with(ColumnRole::proxy_w);
  const auto treat = d.columns_with(ColumnRole::treatment);
  const auto outcome = d.columns_with(ColumnRole::outcome);
  p.subject_ids.resize(static_cast<Eigen::Index>(n));
  for (int j = 0; j < J; ++j) {
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = order[i * static_cast<std::size_t>(J) + static_cast<std::size_t>(j)];
    p.a.push_back(detail::gather(d, treat, rows).col(0));
    p.x.push_back(detail::gather(d, p.x_names, rows));
    p.z.push_back(detail::gather(d, p.z_names, rows));
    p.w.push_back(detail::gather(d, p.w_names, rows));
    if (j == J - 1) {
      p.y = detail::gather(d, outcome, rows).col(0);
      for (std::size_t i = 0; i < n; ++i) p.subject_ids(static_cast<Eigen::Index>(i)) = ids[rows[i]];
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Resampling. Sampling units are rows for point data and subjects for
// longitudinal data, so trajectories stay intact.

namespace detail {

inline Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, std::span<const std::size_t> idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

inline Eigen::VectorXd take(const Eigen::VectorXd& v, std::span<const std::size_t> idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(idx[i]));
  return out;
}

}  // namespace detail

inline std::size_t sampling_units(const PointData& p) { return static_cast<std::size_t>(p.n()); }
inline std::size_t sampling_units(const PanelData& p) { return static_cast<std::size_t>(p.n()); }
inline std::size_t sampling_units(const Dataset& d) { return d.n_subjects(); }

inline PointData resample(const PointData& p, std::span<const std::size_t> idx) {
  PointData out = p;
  out.y = detail::take(p.y, idx);
  out.a = detail::take(p.a, idx);
  out.x = detail::take_rows(p.x, idx);
  out.z = detail::take_rows(p.z, idx);
  out.w = detail::take_rows(p.w, idx);
  return out;
}

inline PanelData resample(const PanelData& p, std::span<const std::size_t> idx) {
  PanelData out;
  out.periods = p.periods;
  out.x_names = p.x_names;
  out.z_names = p.z_names;
  out.w_names = p.w_names;
  out.y = detail::take(p.y, idx);
  out.subject_ids = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(idx.size()), 0.0,
                                               static_cast<double>(idx.size()) - 1.0);
  for (int j = 0; j < p.periods; ++j) {
    out.a.push_back(detail::take(p.a[static_cast<std::size_t>(j)], idx));
    out.x.push_back(detail::take_rows(p.x[static_cast<std::size_t>(j)], idx));
    out.z.push_back(detail::take_rows(p.z[static_cast<std::size_t>(j)], idx));
    out.w.push_back(detail::take_rows(p.w[static_cast<std::size_t>(j)], idx));
  }
  return out;
}

/// Dataset-level resampling. Longitudinal subjects drawn more than once get
/// fresh ids (0..n-1 in draw order) so the result still validates.
inline Dataset resample(const Dataset& d, std::span<const std::size_t> idx) {
  Dataset out;
  out.names = d.names;
  out.roles = d.roles;
  out.layout = d.layout;
  out.columns.assign(d.columns.size(), {});
  if (!d.layout.is_longitudinal()) {
    for (std::size_t k = 0; k < d.columns.size(); ++k) {
      out.columns[k].reserve(idx.size());
      for (auto i : idx) out.columns[k].push_back(d.columns[k][i]);
    }
    out.n_rows = idx.size();
    return out;
  }
  const auto id_name = d.columns_with(ColumnRole::subject_id).at(0);
  const auto& ids = d.column(id_name);
  std::vector<double> unique_ids(ids.begin(), ids.end());
  std::sort(unique_ids.begin(), unique_ids.end());
  unique_ids.erase(std::unique(unique_ids.begin(), unique_ids.end()), unique_ids.end());
  std::map<double, std::vector<std::size_t>> rows_of;
  for (std::size_t i = 0; i < d.n_rows; ++i) rows_of[ids[i]].push_back(i);
  const auto id_pos = static_cast<std::size_t>(std::find(d.names.begin(), d.names.end(), id_name) - d.names.begin());
  for (std::size_t draw = 0; draw < idx.size(); ++draw) {
    for (auto row : rows_of.at(unique_ids.at(idx[draw]))) {
      for (std::size_t k = 0; k < d.columns.size(); ++k)
        out.columns[k].push_back(k == id_pos ? static_cast<double>(draw) : d.columns[k][row]);
    }
  }
  out.n_rows = out.columns.front().size();
  return out;
}

/// Copy of `d` with additional roles assigned (used after proxy allocation).
inline Dataset with_roles(const Dataset& d, const RoleMap& extra) {
  RoleMap roles = d.roles;
  for (const auto& [k, r] : extra) roles[k] = r;
  return validate_dataset(RawTable{d.names, d.columns}, roles, d.layout);
}

}  // namespace proxcausal
