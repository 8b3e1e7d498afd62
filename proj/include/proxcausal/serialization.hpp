#pragma once

// JSON forms of specs, role files, estimates and study summaries. Readers are
// strict: unknown keys and wrong types raise ConfigSchemaError naming the
// source file and the JSON path.

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "proxcausal/data_model.hpp"
#include "proxcausal/errors.hpp"
#include "proxcausal/estimate.hpp"
#include "proxcausal/inference.hpp"
#include "proxcausal/longitudinal_estimators.hpp"
#include "proxcausal/proxy_allocation.hpp"
#include "proxcausal/synthetic_dgp.hpp"

namespace proxcausal {

using json = nlohmann::json;

inline constexpr const char* kLibraryVersion = "0.1.0";
inline constexpr int kFormatVersion = 1;

namespace io {

// ---------------------------------------------------------------------------
// parsing with context

inline json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // byte offset -> line:column
    std::size_t line = 1, col = 1;
    const auto stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    fail(ErrorCode::ConfigSchemaError,
         source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON");
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  if (in.bad()) fail(ErrorCode::IoError, "read error on '" + path + "'");
  return s.str();
}

inline json read_json_file(const std::string& path) { return parse_json_text(read_text_file(path), path); }

/// Object view that checks types and rejects keys nobody asked for.
class Reader {
 public:
  Reader(const json& j, std::string source, std::string path = "")
      : j_(j), source_(std::move(source)), path_(std::move(path)) {
    if (!j_.is_object()) error("", "expected an object");
  }

  [[noreturn]] void error(const std::string& key, const std::string& what) const {
    const std::string where = key.empty() ? (path_.empty() ? "/" : path_) : path_ + "/" + key;
    fail(ErrorCode::ConfigSchemaError, source_ + ": " + where + ": " + what);
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  void get(const std::string& key, T& out) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    convert(key, j_.at(key), out);
  }

  template <class T>
  void require(const std::string& key, T& out) {
    if (!j_.contains(key)) error(key, "missing required key");
    get(key, out);
  }

  Reader child(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) error(key, "missing required key");
    return Reader(j_.at(key), source_, path_ + "/" + key);
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  std::string path_of(const std::string& key) const { return path_ + "/" + key; }
  const std::string& source() const { return source_; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) error(it.key(), "unknown key");
  }

 private:
  void convert(const std::string& key, const json& v, double& out) const {
    if (v.is_null()) {
      out = std::numeric_limits<double>::quiet_NaN();
      return;
    }
    if (!v.is_number()) error(key, "expected a number");
    out = v.get<double>();
  }
  void convert(const std::string& key, const json& v, int& out) const {
    if (!v.is_number_integer()) error(key, "expected an integer");
    const auto x = v.get<long long>();
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) error(key, "integer out of range");
    out = static_cast<int>(x);
  }
  template <class T>
    requires(std::is_unsigned_v<T> && !std::is_same_v<T, bool>)
  void convert(const std::string& key, const json& v, T& out) const {
    if (!v.is_number_unsigned()) error(key, "expected a non-negative integer");
    out = v.get<T>();
  }
  void convert(const std::string& key, const json& v, bool& out) const {
    if (!v.is_boolean()) error(key, "expected true or false");
    out = v.get<bool>();
  }
  void convert(const std::string& key, const json& v, std::string& out) const {
    if (!v.is_string()) error(key, "expected a string");
    out = v.get<std::string>();
  }
  template <class T>
  void convert(const std::string& key, const json& v, std::vector<T>& out) const {
    if (!v.is_array()) error(key, "expected an array");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      T e{};
      convert(key + "/" + std::to_string(i), v[i], e);
      out.push_back(std::move(e));
    }
  }
  template <class T, std::size_t N>
  void convert(const std::string& key, const json& v, std::array<T, N>& out) const {
    if (!v.is_array() || v.size() != N) error(key, "expected an array of length " + std::to_string(N));
    for (std::size_t i = 0; i < N; ++i) convert(key + "/" + std::to_string(i), v[i], out[i]);
  }
  template <class T>
  void convert(const std::string& key, const json& v, std::optional<T>& out) const {
    if (v.is_null()) {
      out.reset();
      return;
    }
    T e{};
    convert(key, v, e);
    out = std::move(e);
  }

  const json& j_;
  std::string source_, path_;
  std::set<std::string> used_;
};

template <class E>
E enum_from(const Reader& r, const std::string& key, const std::string& s,
            std::initializer_list<std::pair<const char*, E>> options) {
  std::string list;
  for (const auto& [name, value] : options) {
    if (s == name) return value;
    list += list.empty() ? name : std::string(", ") + name;
  }
  r.error(key, "'" + s + "' is not one of " + list);
}

// ---------------------------------------------------------------------------
// small helpers

inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json vec(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(number(v(k)));
  return a;
}

inline json mat(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec(m.row(i).transpose()));
  return a;
}

inline json vec(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

inline std::string noise_name(NoiseShape s) {
  switch (s) {
    case NoiseShape::gaussian: return "gaussian";
    case NoiseShape::student_t3: return "student_t3";
    case NoiseShape::skewed: return "skewed";
  }
  return "gaussian";
}

inline NoiseShape noise_from(const Reader& r, const std::string& key, const std::string& s) {
  return enum_from<NoiseShape>(r, key, s,
                               {{"gaussian", NoiseShape::gaussian}, {"student_t3", NoiseShape::student_t3}, {"skewed", NoiseShape::skewed}});
}

// ---------------------------------------------------------------------------
// DGP specs

inline json to_json(const PointDgpSpec& s) {
  return json{{"d_x", s.d_x},
              {"d_z", s.d_z},
              {"d_w", s.d_w},
              {"beta0", s.beta0},
              {"beta_a", s.beta_a},
              {"beta_u", s.beta_u},
              {"beta_x", s.beta_x},
              {"eta0", s.eta0},
              {"eta_u", s.eta_u},
              {"eta_x", s.eta_x},
              {"zeta0", s.zeta0},
              {"zeta_u", s.zeta_u},
              {"zeta_x", s.zeta_x},
              {"u0", s.u0},
              {"u_x", s.u_x},
              {"alpha0", s.alpha0},
              {"alpha_u", s.alpha_u},
              {"alpha_z", s.alpha_z},
              {"alpha_x", s.alpha_x},
              {"sigma_u", s.sigma_u},
              {"sigma_z", s.sigma_z},
              {"sigma_w", s.sigma_w},
              {"sigma_a", s.sigma_a},
              {"sigma_y", s.sigma_y},
              {"treatment", s.treatment == TreatmentType::binary ? "binary" : "continuous"},
              {"outcome", s.outcome == OutcomeType::binary ? "binary" : "continuous"},
              {"latent_noise", noise_name(s.latent_noise)},
              {"proxy_noise", noise_name(s.proxy_noise)},
              {"seed", s.seed}};
}

inline PointDgpSpec point_spec_from(Reader r) {
  PointDgpSpec s;
  r.get("d_x", s.d_x);
  r.get("d_z", s.d_z);
  r.get("d_w", s.d_w);
  r.get("beta0", s.beta0);
  r.get("beta_a", s.beta_a);
  r.get("beta_u", s.beta_u);
  r.get("beta_x", s.beta_x);
  r.get("eta0", s.eta0);
  r.get("eta_u", s.eta_u);
  r.get("eta_x", s.eta_x);
  r.get("zeta0", s.zeta0);
  r.get("zeta_u", s.zeta_u);
  r.get("zeta_x", s.zeta_x);
  r.get("u0", s.u0);
  r.get("u_x", s.u_x);
  r.get("alpha0", s.alpha0);
  r.get("alpha_u", s.alpha_u);
  r.get("alpha_z", s.alpha_z);
  r.get("alpha_x", s.alpha_x);
  r.get("sigma_u", s.sigma_u);
  r.get("sigma_z", s.sigma_z);
  r.get("sigma_w", s.sigma_w);
  r.get("sigma_a", s.sigma_a);
  r.get("sigma_y", s.sigma_y);
  std::string t = "binary", o = "continuous", ln = "gaussian", pn = "gaussian";
  r.get("treatment", t);
  r.get("outcome", o);
  r.get("latent_noise", ln);
  r.get("proxy_noise", pn);
  s.treatment = enum_from<TreatmentType>(r, "treatment", t, {{"binary", TreatmentType::binary}, {"continuous", TreatmentType::continuous}});
  s.outcome = enum_from<OutcomeType>(r, "outcome", o, {{"binary", OutcomeType::binary}, {"continuous", OutcomeType::continuous}});
  s.latent_noise = noise_from(r, "latent_noise", ln);
  s.proxy_noise = noise_from(r, "proxy_noise", pn);
  r.get("seed", s.seed);
  r.finish();
  return s;
}

inline json to_json(const PeriodBlock& b) {
  return json{{"u_rho", b.u_rho},     {"sigma_nu", b.sigma_nu}, {"x_lag", b.x_lag}, {"x_u", b.x_u},
              {"x_alag", b.x_alag},   {"sigma_x", b.sigma_x},   {"z_u", b.z_u},     {"z_alag", b.z_alag},
              {"sigma_z", b.sigma_z}, {"w_u", b.w_u},           {"sigma_w", b.sigma_w}, {"a0", b.a0},
              {"a_u", b.a_u},         {"a_lag", b.a_lag},       {"a_z", b.a_z},     {"a_x", b.a_x},
              {"a_zbase", b.a_zbase}, {"a_xbase", b.a_xbase}};
}

inline PeriodBlock period_block_from(Reader r) {
  PeriodBlock b;
  r.get("u_rho", b.u_rho);
  r.get("sigma_nu", b.sigma_nu);
  r.get("x_lag", b.x_lag);
  r.get("x_u", b.x_u);
  r.get("x_alag", b.x_alag);
  r.get("sigma_x", b.sigma_x);
  r.get("z_u", b.z_u);
  r.get("z_alag", b.z_alag);
  r.get("sigma_z", b.sigma_z);
  r.get("w_u", b.w_u);
  r.get("sigma_w", b.sigma_w);
  r.get("a0", b.a0);
  r.get("a_u", b.a_u);
  r.get("a_lag", b.a_lag);
  r.get("a_z", b.a_z);
  r.get("a_x", b.a_x);
  r.get("a_zbase", b.a_zbase);
  r.get("a_xbase", b.a_xbase);
  r.finish();
  return b;
}

inline json to_json(const LongitudinalDgpSpec& s) {
  json periods = json::array();
  for (const auto& b : s.periods) periods.push_back(to_json(b));
  return json{{"J", s.J},
              {"d_x", s.d_x},
              {"d_z", s.d_z},
              {"d_w", s.d_w},
              {"first_treatment", s.first_treatment == LongitudinalDgpSpec::FirstTreatment::latent_class ? "latent_class" : "probit"},
              {"class_prob", s.class_prob},
              {"u_class", s.u_class},
              {"sigma_u0", s.sigma_u0},
              {"periods", periods},
              {"y0", s.y0},
              {"y_a", s.y_a},
              {"y_u", s.y_u},
              {"y_x", s.y_x},
              {"sigma_y", s.sigma_y},
              {"latent_noise", noise_name(s.latent_noise)},
              {"proxy_noise", noise_name(s.proxy_noise)},
              {"seed", s.seed}};
}

inline LongitudinalDgpSpec longitudinal_spec_from(Reader r) {
  // unspecified fields fall back to the shipped default, not to bare zeros
  LongitudinalDgpSpec s = default_longitudinal_spec();
  r.get("J", s.J);
  r.get("d_x", s.d_x);
  r.get("d_z", s.d_z);
  r.get("d_w", s.d_w);
  std::string ft = "latent_class";
  r.get("first_treatment", ft);
  s.first_treatment = enum_from<LongitudinalDgpSpec::FirstTreatment>(
      r, "first_treatment", ft,
      {{"latent_class", LongitudinalDgpSpec::FirstTreatment::latent_class}, {"probit", LongitudinalDgpSpec::FirstTreatment::probit}});
  r.get("class_prob", s.class_prob);
  r.get("u_class", s.u_class);
  r.get("sigma_u0", s.sigma_u0);
  if (r.has("periods")) {
    const json& p = r.raw("periods");
    if (!p.is_array()) r.error("periods", "expected an array");
    s.periods.clear();
    for (std::size_t k = 0; k < p.size(); ++k)
      s.periods.push_back(period_block_from(Reader(p[k], r.source(), r.path_of("periods/" + std::to_string(k)))));
  }
  r.get("y0", s.y0);
  r.get("y_a", s.y_a);
  r.get("y_u", s.y_u);
  r.get("y_x", s.y_x);
  r.get("sigma_y", s.sigma_y);
  std::string ln = "gaussian", pn = "gaussian";
  r.get("latent_noise", ln);
  r.get("proxy_noise", pn);
  s.latent_noise = noise_from(r, "latent_noise", ln);
  s.proxy_noise = noise_from(r, "proxy_noise", pn);
  r.get("seed", s.seed);
  r.finish();
  return s;
}

/// {"kind": "point" | "longitudinal", "spec": {...}}
struct SpecFile {
  bool longitudinal = false;
  PointDgpSpec point;
  LongitudinalDgpSpec panel = default_longitudinal_spec();
};

inline json to_json(const SpecFile& f) {
  return json{{"kind", f.longitudinal ? "longitudinal" : "point"}, {"spec", f.longitudinal ? to_json(f.panel) : to_json(f.point)}};
}

inline SpecFile spec_file_from(const json& j, const std::string& source) {
  Reader r(j, source);
  std::string kind;
  r.require("kind", kind);
  SpecFile f;
  f.longitudinal = enum_from<bool>(r, "kind", kind, {{"point", false}, {"longitudinal", true}});
  if (f.longitudinal)
    f.panel = longitudinal_spec_from(r.child("spec"));
  else
    f.point = point_spec_from(r.child("spec"));
  r.finish();
  return f;
}

inline json to_json(const GroundTruth& g) {
  return json{{"form", g.form == GroundTruth::Form::linear ? "linear" : "probit"},
              {"intercept", g.intercept},
              {"slopes", g.slopes},
              {"scale", g.scale}};
}

// ---------------------------------------------------------------------------
// role files: {"roles": {"col": "role", ...}, "layout": {"kind": ..., "periods": J}}

struct RoleFile {
  RoleMap roles;
  Layout layout;
};

inline json to_json(const RoleFile& f) {
  json roles = json::object();
  for (const auto& [name, role] : f.roles) roles[name] = std::string(to_string(role));
  json layout{{"kind", f.layout.is_longitudinal() ? "longitudinal" : "point"}};
  if (f.layout.is_longitudinal()) layout["periods"] = f.layout.periods;
  return json{{"roles", roles}, {"layout", layout}};
}

inline RoleFile role_file_from(const json& j, const std::string& source) {
  Reader r(j, source);
  RoleFile f;
  const json& roles = r.raw("roles");
  if (!roles.is_object()) r.error("roles", "expected an object of column -> role");
  for (auto it = roles.begin(); it != roles.end(); ++it) {
    if (!it.value().is_string()) r.error("roles/" + it.key(), "expected a role name");
    const auto role = parse_role(it.value().get<std::string>());
    if (!role) r.error("roles/" + it.key(), "unknown role '" + it.value().get<std::string>() + "'");
    f.roles[it.key()] = *role;
  }
  if (r.has("layout")) {
    Reader l = r.child("layout");
    std::string kind = "point";
    int periods = 1;
    l.get("kind", kind);
    l.get("periods", periods);
    l.finish();
    f.layout = enum_from<bool>(l, "kind", kind, {{"point", false}, {"longitudinal", true}}) ? Layout::longitudinal(periods)
                                                                                          : Layout::point();
  }
  r.finish();
  return f;
}

inline RoleFile role_file_of(const Dataset& d) { return {d.roles, d.layout}; }

// ---------------------------------------------------------------------------
// estimates

inline json to_json(const ScalarEstimate& s) {
  json j{{"value", number(s.value)}, {"se", number(s.se)}};
  j["ci"] = s.ci ? json::array({number(s.ci->lower), number(s.ci->upper)}) : json(nullptr);
  return j;
}

inline ScalarEstimate scalar_from(Reader r) {
  ScalarEstimate s;
  r.require("value", s.value);
  r.get("se", s.se);
  std::optional<std::vector<double>> ci;
  r.get("ci", ci);
  if (ci) {
    if (ci->size() != 2) r.error("ci", "expected [lower, upper]");
    s.ci = Interval{(*ci)[0], (*ci)[1]};
  }
  r.finish();
  return s;
}

inline json to_json(const Diagnostics& d) {
  json j{{"first_stage_f", vec(d.first_stage_f)},
         {"weak_first_stage", d.weak_first_stage},
         {"rank_deficient_stage2", d.rank_deficient_stage2},
         {"warnings", d.warnings}};
  j["confounding_p_value"] = d.confounding_p_value ? number(*d.confounding_p_value) : json(nullptr);
  j["gradient_norm"] = d.gradient_norm ? number(*d.gradient_norm) : json(nullptr);
  j["max_weight"] = d.max_weight ? number(*d.max_weight) : json(nullptr);
  return j;
}

inline json to_json(const EffectEstimate& e) {
  json beta = json::array();
  for (std::size_t k = 0; k < e.beta.size(); ++k) {
    json b = to_json(e.beta[k]);
    b["regime"] = e.regimes[k];
    beta.push_back(b);
  }
  return json{{"method", std::string(to_string(e.method))},
              {"contrast", e.contrast ? to_json(*e.contrast) : json(nullptr)},
              {"beta", beta},
              {"eta_w", vec(e.eta_w)},
              {"eta_w_se", vec(e.eta_w_se)},
              {"eta_w_names", e.eta_w_names},
              {"coefficients", vec(e.coefficients)},
              {"coefficient_names", e.coefficient_names},
              {"covariance", mat(e.covariance)},
              {"diagnostics", to_json(e.diagnostics)}};
}

inline json to_json(const StageFit& s) {
  json eta = json::array();
  for (const auto& e : s.eta) eta.push_back(vec(e));
  return json{{"period", s.period},
              {"theta", mat(s.theta)},
              {"first_stage_f", vec(s.first_stage_f)},
              {"eta", eta},
              {"eta_names", s.eta_names},
              {"orthogonality_residual", number(s.orthogonality_residual)}};
}

// ---------------------------------------------------------------------------
// allocation

inline std::string tie_policy_name(const TiePolicy& p) {
  switch (p.kind) {
    case TiePolicy::Kind::prioritize_w: return "prioritize_w";
    case TiePolicy::Kind::prioritize_z: return "prioritize_z";
    case TiePolicy::Kind::randomize: return "randomize";
  }
  return "prioritize_w";
}

inline json to_json(const AllocationResult& a) {
  json table = json::array();
  for (const auto& c : a.ranking_table)
    table.push_back({{"name", c.name}, {"outcome_strength", number(c.outcome_strength)}, {"treatment_strength", number(c.treatment_strength)}});
  json trace = json::array();
  for (const auto& [name, side] : a.trace) trace.push_back(json::array({name, side}));
  return json{{"z_set", a.z_set}, {"w_set", a.w_set}, {"ranking_table", table}, {"tie_events", a.tie_events}, {"trace", trace}};
}

/// Only the sets are needed downstream; the rest of the file is audit trail.
inline AllocationResult allocation_from(const json& j, const std::string& source) {
  Reader r(j, source);
  AllocationResult a;
  r.require("z_set", a.z_set);
  r.require("w_set", a.w_set);
  r.get("tie_events", a.tie_events);
  for (const char* k : {"ranking_table", "trace", "provenance"})
    if (r.has(k)) (void)r.raw(k);
  r.finish();
  return a;
}

// ---------------------------------------------------------------------------
// replication summaries

inline json to_json(const SummaryRow& s) {
  return json{{"estimator", s.estimator}, {"target", s.target},     {"truth", number(s.truth)},
              {"mean", number(s.mean)},   {"bias", number(s.bias)}, {"mc_se", number(s.mc_se)},
              {"sd", number(s.sd)},       {"mean_se", number(s.mean_se)}, {"coverage", number(s.coverage)},
              {"n_ok", s.n_ok},           {"n_failed", s.n_failed}};
}

inline json to_json(const ReplicationSummary& s) {
  json rows = json::array();
  for (const auto& r : s.rows) rows.push_back(to_json(r));
  return json{{"rows", rows}, {"failures", s.failures}};
}

inline ReplicationSummary summary_from(const json& j, const std::string& source) {
  Reader r(j, source);
  ReplicationSummary s;
  const json& rows = r.raw("rows");
  if (!rows.is_array()) r.error("rows", "expected an array");
  for (std::size_t k = 0; k < rows.size(); ++k) {
    Reader e(rows[k], source, "/rows/" + std::to_string(k));
    SummaryRow row;
    e.require("estimator", row.estimator);
    e.require("target", row.target);
    e.require("truth", row.truth);
    e.require("mean", row.mean);
    e.require("bias", row.bias);
    e.require("mc_se", row.mc_se);
    e.require("sd", row.sd);
    e.require("mean_se", row.mean_se);
    e.require("coverage", row.coverage);
    e.require("n_ok", row.n_ok);
    e.require("n_failed", row.n_failed);
    e.finish();
    s.rows.push_back(row);
  }
  r.get("failures", s.failures);
  for (const char* k : {"provenance", "options"})
    if (r.has(k)) (void)r.raw(k);
  r.finish();
  return s;
}

// ---------------------------------------------------------------------------
// discrete laws for the bridge diagnostic

inline CategoricalLawParams categorical_params_from(Reader r) {
  CategoricalLawParams q;
  r.get("d_u", q.d_u);
  r.get("d_z", q.d_z);
  r.get("d_w", q.d_w);
  r.get("d_x", q.d_x);
  r.get("p_x", q.p_x);
  r.require("p_u", q.p_u);
  r.require("p_z", q.p_z);
  r.require("p_w", q.p_w);
  r.require("p_a1", q.p_a1);
  r.require("p_y1", q.p_y1);
  r.finish();
  return q;
}

inline BinaryLawParams binary_params_from(Reader r) {
  BinaryLawParams b;
  r.get("p_u1", b.p_u1);
  r.get("p_z1", b.p_z1);
  r.get("p_w1", b.p_w1);
  r.get("p_a1", b.p_a1);
  r.get("p_y1", b.p_y1);
  r.finish();
  return b;
}

/// {"type": "binary", ...} | {"type": "categorical", ...} |
/// {"type": "random", "seed": s, "d_u": .., "d_z": .., "d_w": .., "d_x": ..}
inline LawWithTruth law_from(const json& j, const std::string& source) {
  Reader r(j, source);
  std::string type;
  r.require("type", type);
  if (type == "binary") {
    json rest = j;
    rest.erase("type");
    return build_discrete_law(binary_params_from(Reader(rest, source)));
  }
  if (type == "categorical") {
    json rest = j;
    rest.erase("type");
    return build_categorical_law(categorical_params_from(Reader(rest, source)));
  }
  if (type == "random") {
    std::uint64_t seed = 0;
    std::size_t du = 2, dz = 2, dw = 2, dx = 0;
    r.require("seed", seed);
    r.get("d_u", du);
    r.get("d_z", dz);
    r.get("d_w", dw);
    r.get("d_x", dx);
    r.finish();
    return build_categorical_law(random_law_params(seed, du, dz, dw, dx));
  }
  r.error("type", "'" + type + "' is not one of binary, categorical, random");
}

}  // namespace io
}  // namespace proxcausal
