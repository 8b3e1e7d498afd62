#pragma once

// Command-line front end. Each command builds its artifacts in memory from
// library calls, then writes them with temp-file + rename next to a manifest
// that is enough to rerun the command and get the same bytes.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>

#include "proxcausal/bridge_solvers.hpp"
#include "proxcausal/csv.hpp"
#include "proxcausal/inference.hpp"
#include "proxcausal/longitudinal_estimators.hpp"
#include "proxcausal/point_estimators.hpp"
#include "proxcausal/proxy_allocation.hpp"
#include "proxcausal/serialization.hpp"
#include "proxcausal/synthetic_dgp.hpp"

namespace proxcausal::cli {

enum class Command { simulate, allocate, fit, bootstrap, replicate, bridge, report };

inline constexpr std::pair<const char*, Command> kCommands[] = {
    {"simulate", Command::simulate}, {"allocate", Command::allocate},   {"fit", Command::fit},
    {"bootstrap", Command::bootstrap}, {"replicate", Command::replicate}, {"bridge", Command::bridge},
    {"report", Command::report}};

inline std::string command_name(Command c) {
  for (const auto& [n, v] : kCommands)
    if (v == c) return n;
  return "?";
}

struct RunConfig {
  Command command = Command::fit;
  std::optional<std::uint64_t> seed;
  std::string out;

  // inputs
  std::string data, roles, spec, maps, allocation, fit_config, input, law;

  // simulate / replicate
  std::string kind = "point";
  std::size_t n = 1000;

  // fit
  std::string method = "p2sls";
  std::string bridge = "linear";
  std::string regimes;  // "0,0;0,1;1,0;1,1"
  std::vector<double> grid{0.0, 1.0};

  // allocate
  std::vector<std::string> candidates;
  std::string tie_policy = "prioritize_w";
  std::string scale = "wald";

  // bootstrap / replicate
  int B = 500;
  double alpha = 0.05;
  int jobs = 1;
  bool force = false;
  int reps = 200;
  std::vector<std::string> estimators;
  int bootstrap_B = 0;

  // bridge
  std::string solver = "categorical";
};

inline json to_json(const RunConfig& c) {
  return json{{"command", command_name(c.command)},
              {"seed", c.seed ? json(*c.seed) : json(nullptr)},
              {"out", c.out},
              {"data", c.data},
              {"roles", c.roles},
              {"spec", c.spec},
              {"maps", c.maps},
              {"allocation", c.allocation},
              {"fit_config", c.fit_config},
              {"input", c.input},
              {"law", c.law},
              {"kind", c.kind},
              {"n", c.n},
              {"method", c.method},
              {"bridge", c.bridge},
              {"regimes", c.regimes},
              {"grid", c.grid},
              {"candidates", c.candidates},
              {"tie_policy", c.tie_policy},
              {"scale", c.scale},
              {"B", c.B},
              {"alpha", c.alpha},
              {"jobs", c.jobs},
              {"force", c.force},
              {"reps", c.reps},
              {"estimators", c.estimators},
              {"bootstrap_B", c.bootstrap_B},
              {"solver", c.solver}};
}

inline RunConfig config_from(const json& j, const std::string& source) {
  io::Reader r(j, source);
  RunConfig c;
  std::string cmd;
  r.require("command", cmd);
  bool found = false;
  for (const auto& [nm, v] : kCommands)
    if (cmd == nm) {
      c.command = v;
      found = true;
    }
  if (!found) r.error("command", "unknown command '" + cmd + "'");
  r.get("seed", c.seed);
  r.get("out", c.out);
  r.get("data", c.data);
  r.get("roles", c.roles);
  r.get("spec", c.spec);
  r.get("maps", c.maps);
  r.get("allocation", c.allocation);
  r.get("fit_config", c.fit_config);
  r.get("input", c.input);
  r.get("law", c.law);
  r.get("kind", c.kind);
  r.get("n", c.n);
  r.get("method", c.method);
  r.get("bridge", c.bridge);
  r.get("regimes", c.regimes);
  r.get("grid", c.grid);
  r.get("candidates", c.candidates);
  r.get("tie_policy", c.tie_policy);
  r.get("scale", c.scale);
  r.get("B", c.B);
  r.get("alpha", c.alpha);
  r.get("jobs", c.jobs);
  r.get("force", c.force);
  r.get("reps", c.reps);
  r.get("estimators", c.estimators);
  r.get("bootstrap_B", c.bootstrap_B);
  r.get("solver", c.solver);
  r.finish();
  return c;
}

// ---------------------------------------------------------------------------
// hashing, provenance, atomic output

inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

/// Hash of everything that can change the numbers; output paths are left
/// out so a relocated rerun carries the same hash.
inline std::string config_hash(const RunConfig& c) {
  json j = to_json(c);
  j.erase("out");
  return hex64(fnv1a(j.dump()));
}

inline json provenance(const RunConfig& c) {
  return json{{"config_hash", config_hash(c)},
              {"seed", c.seed ? json(*c.seed) : json(nullptr)},
              {"library_version", kLibraryVersion},
              {"format_version", kFormatVersion}};
}

struct Artifact {
  std::string path;
  std::string content;
};

struct Outcome {
  std::vector<Artifact> artifacts;
  std::vector<std::string> inputs;  // files read
  std::string summary;              // human text for stdout
};

/// Writes every artifact to a sibling temp file first; only when all writes
/// succeeded are they renamed into place.
inline void commit(const std::vector<Artifact>& artifacts) {
  namespace fs = std::filesystem;
  std::vector<std::string> temps;
  auto cleanup = [&] {
    std::error_code ec;
    for (const auto& t : temps) fs::remove(t, ec);
  };
  for (const auto& a : artifacts) {
    const fs::path p(a.path);
    std::error_code ec;
    if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
    const std::string tmp = a.path + ".tmp." + std::to_string(::getpid());
    temps.push_back(tmp);
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    f.write(a.content.data(), static_cast<std::streamsize>(a.content.size()));
    f.close();
    if (!f) {
      cleanup();
      fail(ErrorCode::IoError, "cannot write '" + a.path + "'");
    }
  }
  for (std::size_t k = 0; k < artifacts.size(); ++k) {
    std::error_code ec;
    fs::rename(temps[k], artifacts[k].path, ec);
    if (ec) {
      cleanup();
      fail(ErrorCode::IoError, "cannot move '" + temps[k] + "' into place: " + ec.message());
    }
  }
}

inline std::string sibling(const std::string& path, const std::string& suffix) {
  std::filesystem::path p(path);
  p.replace_extension();
  return p.string() + suffix;
}

inline std::string manifest_path(const std::string& out) { return out + ".manifest.json"; }

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// shared input handling

[[noreturn]] inline void schema_error(const std::string& what) { fail(ErrorCode::ConfigSchemaError, what); }

inline void need(const std::string& value, const char* flag, const RunConfig& c) {
  if (value.empty()) schema_error(command_name(c.command) + ": " + flag + " is required");
}

inline std::uint64_t need_seed(const RunConfig& c) {
  if (!c.seed) schema_error(command_name(c.command) + ": --seed is required");
  return *c.seed;
}

inline std::vector<std::vector<double>> parse_regimes(const std::string& s) {
  std::vector<std::vector<double>> out;
  if (s.empty()) return out;
  std::stringstream rows(s);
  std::string row;
  while (std::getline(rows, row, ';')) {
    std::vector<double> r;
    std::stringstream cells(row);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      double v = 0.0;
      if (!detail::parse_double(cell, v)) schema_error("--regimes: '" + cell + "' is not a number");
      r.push_back(v);
    }
    if (r.empty()) schema_error("--regimes: empty regime in '" + s + "'");
    if (!out.empty() && r.size() != out.front().size()) schema_error("--regimes: regimes differ in length");
    out.push_back(r);
  }
  return out;
}

inline StageMaps stage_maps_from(io::Reader& r, StageMaps base) {
  auto pick = [&](const char* key, FeatureMap& m) {
    std::string name;
    r.get(key, name);
    if (name.empty()) return;
    m = io::enum_from<FeatureMap>(r, key, name,
                                  {{"cum", FeatureMap::cum()},
                                   {"last", FeatureMap::last()},
                                   {"concat", FeatureMap::concat()},
                                   {"full_with_interaction", FeatureMap::full_with_interaction()}});
  };
  pick("a", base.a);
  pick("w", base.w);
  pick("x", base.x);
  pick("z", base.z);
  return base;
}

/// {"a": "cum", "w": "concat", "x": "concat", "z": "concat",
///  "per_stage": [null, {"a": "last"}]}
inline RecursiveOptions maps_from(const json& j, const std::string& source) {
  RecursiveOptions o;
  json top = j;
  json per = json::array();
  if (top.contains("per_stage")) {
    per = top["per_stage"];
    top.erase("per_stage");
    if (!per.is_array()) schema_error(source + ": /per_stage: expected an array");
  }
  io::Reader r(top, source);
  o.maps = stage_maps_from(r, o.maps);
  r.finish();
  for (std::size_t k = 0; k < per.size(); ++k) {
    if (per[k].is_null()) {
      o.per_stage.emplace_back();
      continue;
    }
    io::Reader s(per[k], source, "/per_stage/" + std::to_string(k));
    o.per_stage.emplace_back(stage_maps_from(s, o.maps));
    s.finish();
  }
  return o;
}

inline json maps_to_json(const RecursiveOptions& o) {
  auto one = [](const StageMaps& m) { return json{{"a", m.a.name()}, {"w", m.w.name()}, {"x", m.x.name()}, {"z", m.z.name()}}; };
  json j = one(o.maps);
  json per = json::array();
  for (const auto& s : o.per_stage) per.push_back(s ? one(*s) : json(nullptr));
  j["per_stage"] = per;
  return j;
}

inline Dataset load_dataset(const RunConfig& c, Outcome& o) {
  need(c.data, "--data", c);
  need(c.roles, "--roles", c);
  const auto csv = read_csv_file(c.data);
  const auto rf = io::role_file_from(io::read_json_file(c.roles), c.roles);
  o.inputs.push_back(c.data);
  o.inputs.push_back(c.roles);
  auto [raw, roles] = to_numeric(csv, rf.roles);
  Dataset d = validate_dataset(raw, roles, rf.layout);
  if (!c.allocation.empty()) {
    const auto a = io::allocation_from(io::read_json_file(c.allocation), c.allocation);
    o.inputs.push_back(c.allocation);
    d = validate_dataset(apply_allocation(d, a));
  }
  return d;
}

inline bool is_panel_method(const std::string& m) { return m == "recursive" || m == "lgcomp" || m == "ipw"; }

inline void check_method(const RunConfig& c) {
  static const char* known[] = {"ols", "gformula", "p2sls", "pgcomp", "recursive", "lgcomp", "ipw"};
  for (const char* k : known)
    if (c.method == k) {
      if (c.bridge != "linear" && c.bridge != "probit") schema_error("--bridge must be linear or probit");
      if (c.bridge == "probit" && c.method != "pgcomp") schema_error("--bridge probit applies to --method pgcomp only");
      return;
    }
  schema_error("--method '" + c.method + "' is not one of ols, gformula, p2sls, pgcomp, recursive, lgcomp, ipw");
}

struct FitResult {
  EffectEstimate estimate;
  std::optional<RecursiveFit> recursive;
};

/// The single place where a fit configuration is turned into a library call.
inline std::function<FitResult(const Dataset&)> fitter(const RunConfig& c, Outcome& o) {
  check_method(c);
  const auto regimes = parse_regimes(c.regimes);
  RecursiveOptions ro;
  if (!c.maps.empty()) {
    ro = maps_from(io::read_json_file(c.maps), c.maps);
    o.inputs.push_back(c.maps);
  }
  ro.regimes = regimes;
  if (is_panel_method(c.method)) {
    if (!c.grid.empty() && c.grid != std::vector<double>{0.0, 1.0})
      schema_error("--grid applies to point methods; use --regimes for " + c.method);
  } else if (!regimes.empty()) {
    schema_error("--regimes applies to longitudinal methods; use --grid for " + c.method);
  }
  const auto grid = c.grid.empty() ? std::vector<double>{0.0, 1.0} : c.grid;
  const std::string m = c.method;
  const std::uint64_t seed = c.seed.value_or(0);
  const bool probit = c.bridge == "probit";
  return [=](const Dataset& d) -> FitResult {
    if (m == "ols") return {fit_ols_baseline(d, OlsOptions{{}, grid}), {}};
    if (m == "gformula") {
      GFormulaOptions g;
      g.grid = grid;
      return {fit_standard_g_formula(d, g), {}};
    }
    if (m == "p2sls") return {fit_p2sls(d, P2slsOptions{grid}), {}};
    if (m == "pgcomp") {
      PgcompOptions g;
      g.grid = grid;
      g.seed = seed;
      if (probit) g.bridge = BridgeForm::probit;
      return {fit_proximal_g_computation(d, g), {}};
    }
    if (m == "recursive") {
      auto f = fit_recursive_ls(d, ro);
      return {f.estimate, f};
    }
    if (m == "lgcomp") {
      LgcompOptions g;
      g.maps = ro.maps;
      g.regimes = regimes;
      return {fit_longitudinal_g_computation(d, g), {}};
    }
    IpwOptions g;
    g.regimes = regimes;
    return {fit_ipw_msm(d, g), {}};
  };
}

inline std::vector<std::string> parameter_names(const EffectEstimate& e) {
  std::vector<std::string> out{"contrast"};
  for (const auto& r : e.regimes) out.push_back(regime_label(r));
  for (const auto& n : e.eta_w_names) out.push_back("eta_w:" + n);
  return out;
}

inline std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

inline std::string estimate_summary(const EffectEstimate& e) {
  std::ostringstream s;
  s << to_string(e.method) << "\n";
  if (e.contrast) s << "  contrast " << fmt(e.contrast->value) << " (se " << fmt(e.contrast->se) << ")\n";
  for (std::size_t k = 0; k < e.beta.size(); ++k)
    s << "  " << regime_label(e.regimes[k]) << " " << fmt(e.beta[k].value) << " (se " << fmt(e.beta[k].se) << ")\n";
  for (const auto& w : e.diagnostics.warnings) s << "  warning: " << w << "\n";
  return s.str();
}

// ---------------------------------------------------------------------------
// commands

inline Outcome run_simulate(const RunConfig& c) {
  need(c.out, "--out", c);
  const auto seed = need_seed(c);
  if (c.n < 1) schema_error("simulate: --n must be >= 1");
  Outcome o;
  io::SpecFile sf;
  if (!c.spec.empty()) {
    sf = io::spec_file_from(io::read_json_file(c.spec), c.spec);
    o.inputs.push_back(c.spec);
  } else {
    sf.longitudinal = io::enum_from<bool>(io::Reader(json::object(), "--kind"), "kind", c.kind,
                                          {{"point", false}, {"longitudinal", true}});
  }
  Dataset d;
  GroundTruth truth;
  std::vector<std::vector<double>> grid;
  if (sf.longitudinal) {
    sf.panel.seed = seed;
    auto sim = generate_longitudinal(sf.panel, c.n);
    d = std::move(sim.data);
    truth = sim.truth;
    grid = binary_regimes(sf.panel.J);
  } else {
    sf.point.seed = seed;
    auto sim = generate_point(sf.point, c.n);
    d = std::move(sim.data);
    truth = sim.truth;
    grid = {{0.0}, {1.0}};
  }
  std::ostringstream csv;
  write_csv(csv, d);
  json betas = json::array();
  for (const auto& r : grid) betas.push_back({{"regime", r}, {"value", io::number(truth.beta(r))}});
  const json sidecar{{"truth", io::to_json(truth)},
                     {"beta", betas},
                     {"spec", io::to_json(sf)},
                     {"rows", d.n_rows},
                     {"subjects", d.n_subjects()},
                     {"provenance", provenance(c)}};
  o.artifacts = {{c.out, csv.str()},
                 {sibling(c.out, ".truth.json"), dump(sidecar)},
                 {sibling(c.out, ".roles.json"), dump(io::to_json(io::role_file_of(d)))}};
  o.summary = "simulated " + std::to_string(d.n_rows) + " rows (" + std::to_string(d.n_subjects()) + " subjects) -> " + c.out + "\n";
  return o;
}

inline Outcome run_fit(const RunConfig& c) {
  need(c.out, "--out", c);
  Outcome o;
  const auto fit = fitter(c, o);
  const Dataset d = load_dataset(c, o);
  const auto r = fit(d);
  json j{{"estimate", io::to_json(r.estimate)},
         {"data", {{"rows", d.n_rows}, {"subjects", d.n_subjects()}}},
         {"provenance", provenance(c)}};
  if (r.recursive) {
    json stages = json::array();
    for (const auto& s : r.recursive->stages) stages.push_back(io::to_json(s));
    j["stages"] = stages;
  }
  o.artifacts = {{c.out, dump(j)}};
  o.summary = estimate_summary(r.estimate);
  return o;
}

inline Outcome run_allocate(const RunConfig& c) {
  need(c.out, "--out", c);
  if (c.candidates.empty()) schema_error("allocate: --candidates is required");
  Outcome o;
  AllocationOptions opt;
  if (c.tie_policy == "prioritize_w")
    opt.tie_policy = TiePolicy::prioritize_w();
  else if (c.tie_policy == "prioritize_z")
    opt.tie_policy = TiePolicy::prioritize_z();
  else if (c.tie_policy == "randomize")
    opt.tie_policy = TiePolicy::randomize(need_seed(c));
  else
    schema_error("--tie-policy must be prioritize_w, prioritize_z or randomize");
  if (c.scale == "wald")
    opt.scale = AssociationScale::wald;
  else if (c.scale == "coefficient")
    opt.scale = AssociationScale::coefficient;
  else
    schema_error("--scale must be wald or coefficient");
  const Dataset d = load_dataset(c, o);
  const auto a = allocate_proxies(d, c.candidates, opt);
  json j = io::to_json(a);
  j["provenance"] = provenance(c);
  o.artifacts = {{c.out, dump(j)}};
  std::ostringstream s;
  s << "Z:";
  for (const auto& z : a.z_set) s << " " << z;
  s << "\nW:";
  for (const auto& w : a.w_set) s << " " << w;
  s << "\n";
  for (const auto& t : a.tie_events) s << "  tie: " << t << "\n";
  o.summary = s.str();
  return o;
}

inline Outcome run_bootstrap(const RunConfig& c) {
  need(c.out, "--out", c);
  need(c.fit_config, "--fit-config", c);
  const auto seed = need_seed(c);
  Outcome o;
  json fj = io::read_json_file(c.fit_config);
  o.inputs.push_back(c.fit_config);
  // a fit manifest or a bare fit config
  if (fj.is_object() && fj.contains("config") && fj.contains("manifest_version")) fj = fj["config"];
  RunConfig fc = config_from(fj, c.fit_config);
  if (fc.command != Command::fit) schema_error(c.fit_config + ": /command: expected a fit configuration");
  const auto fit = fitter(fc, o);
  const Dataset d = load_dataset(fc, o);
  BootstrapOptions bo;
  bo.B = c.B;
  bo.alpha = c.alpha;
  bo.seed = seed;
  bo.jobs = c.jobs;
  bo.force = c.force;
  auto est = fit(d).estimate;
  const auto b = bootstrap_estimate(d, [&](const Dataset& x) { return fit(x).estimate; }, bo);
  attach_bootstrap(est, b);
  const auto names = parameter_names(est);
  const Eigen::VectorXd point = est.parameters();
  json table = json::array();
  std::string csv = "parameter,estimate,se,ci_lower,ci_upper\n";
  for (Eigen::Index k = 0; k < b.se.size(); ++k) {
    const std::string nm = static_cast<std::size_t>(k) < names.size() ? names[static_cast<std::size_t>(k)] : "p" + std::to_string(k);
    table.push_back({{"parameter", nm},
                     {"estimate", io::number(point(k))},
                     {"se", io::number(b.se(k))},
                     {"ci_lower", io::number(b.ci_lower(k))},
                     {"ci_upper", io::number(b.ci_upper(k))}});
    csv += csv_escape(nm) + "," + format_double(point(k)) + "," + format_double(b.se(k)) + "," + format_double(b.ci_lower(k)) +
           "," + format_double(b.ci_upper(k)) + "\n";
  }
  const json j{{"estimate", io::to_json(est)},
               {"bootstrap",
                {{"B", b.B}, {"alpha", b.alpha}, {"seed", b.seed}, {"n_failed", b.n_failed}, {"unreliable", b.unreliable},
                 {"failures", b.failures}, {"table", table}}},
               {"fit_config", to_json(fc)},
               {"provenance", provenance(c)}};
  o.artifacts = {{c.out, dump(j)}, {sibling(c.out, ".csv"), csv}};
  o.summary = estimate_summary(est) + "  bootstrap B=" + std::to_string(b.B) + ", failed " + std::to_string(b.n_failed) + "\n";
  return o;
}

inline std::string summary_table(const ReplicationSummary& s) {
  std::ostringstream t;
  t << std::left << std::setw(14) << "estimator" << std::setw(14) << "target" << std::right << std::setw(11) << "truth"
    << std::setw(11) << "bias" << std::setw(11) << "mc_se" << std::setw(10) << "coverage" << "\n";
  for (const auto& r : s.rows)
    t << std::left << std::setw(14) << r.estimator << std::setw(14) << r.target << std::right << std::setw(11) << fmt(r.truth)
      << std::setw(11) << fmt(r.bias) << std::setw(11) << fmt(r.mc_se) << std::setw(10) << fmt(r.coverage) << "\n";
  return t.str();
}

inline Outcome run_replicate(const RunConfig& c) {
  need(c.out, "--out", c);
  Outcome o;
  ReplicationOptions ro;
  ro.seed = need_seed(c);
  ro.n = c.n;
  ro.reps = c.reps;
  ro.jobs = c.jobs;
  ro.bootstrap_B = c.bootstrap_B;
  ro.alpha = c.alpha;
  ro.estimators = c.estimators;
  io::SpecFile sf;
  if (!c.spec.empty()) {
    sf = io::spec_file_from(io::read_json_file(c.spec), c.spec);
    o.inputs.push_back(c.spec);
  } else {
    sf.longitudinal = io::enum_from<bool>(io::Reader(json::object(), "--kind"), "kind", c.kind,
                                          {{"point", false}, {"longitudinal", true}});
  }
  if (ro.estimators.empty())
    ro.estimators = sf.longitudinal ? std::vector<std::string>{"recursive", "ipw"} : std::vector<std::string>{"ols", "p2sls"};
  const auto& registry_has = [&](const std::string& e) {
    return sf.longitudinal ? panel_estimators().count(e) > 0 : point_estimators().count(e) > 0;
  };
  for (const auto& e : ro.estimators)
    if (!registry_has(e)) schema_error("replicate: unknown estimator '" + e + "'");
  const auto sum = sf.longitudinal ? run_replication_study(sf.panel, ro) : run_replication_study(sf.point, ro);
  json j = io::to_json(sum);
  j["options"] = {{"n", ro.n}, {"reps", ro.reps}, {"estimators", ro.estimators}, {"bootstrap_B", ro.bootstrap_B},
                  {"alpha", ro.alpha}, {"spec", io::to_json(sf)}};
  j["provenance"] = provenance(c);
  o.artifacts = {{c.out, dump(j)}, {sibling(c.out, ".csv"), summary_csv(sum)}};
  o.summary = summary_table(sum);
  return o;
}

inline Outcome run_report(const RunConfig& c) {
  need(c.out, "--out", c);
  need(c.input, "--input", c);
  Outcome o;
  const auto sum = io::summary_from(io::read_json_file(c.input), c.input);
  o.inputs.push_back(c.input);
  o.artifacts = {{c.out, summary_csv(sum)}};
  o.summary = summary_table(sum);
  return o;
}

inline Outcome run_bridge(const RunConfig& c) {
  need(c.out, "--out", c);
  need(c.law, "--law", c);
  Outcome o;
  const auto lw = io::law_from(io::read_json_file(c.law), c.law);
  o.inputs.push_back(c.law);
  DiscreteSolver solver = DiscreteSolver::categorical;
  if (c.solver == "binary")
    solver = DiscreteSolver::binary;
  else if (c.solver == "g_formula")
    solver = DiscreteSolver::g_formula;
  else if (c.solver != "categorical")
    schema_error("--solver must be binary, categorical or g_formula");
  const auto dx = lw.law.cardinality("X");
  const std::size_t nx = dx == 0 ? 1 : dx;
  json tables = json::array(), betas = json::array();
  std::ostringstream s;
  for (std::size_t a = 0; a < 2; ++a) {
    std::vector<Eigen::VectorXd> hs;
    for (std::size_t x = 0; x < nx; ++x) {
      const auto b = solve_bridge(lw.law, a, dx == 0 ? std::nullopt : std::optional<std::size_t>(x), solver);
      hs.push_back(b.h);
      json t{{"a", a}, {"h", io::vec(b.h)}, {"residual", io::number(b.residual)}, {"rank_deficient", b.rank_deficient}};
      t["x"] = dx == 0 ? json(nullptr) : json(x);
      tables.push_back(t);
      s << "h(a=" << a << (dx == 0 ? "" : ", x=" + std::to_string(x)) << ", w) =";
      for (Eigen::Index w = 0; w < b.h.size(); ++w) s << " " << fmt(b.h(w));
      s << "   residual " << fmt(b.residual) << (b.rank_deficient ? "  (rank deficient)" : "") << "\n";
    }
    const double beta = proximal_g_formula(lw.law, hs);
    betas.push_back({{"a", a}, {"value", io::number(beta)}, {"truth", io::number(lw.beta[a])}});
    s << "beta(" << a << ") = " << fmt(beta) << "   truth " << fmt(lw.beta[a]) << "\n";
  }
  const json j{{"solver", c.solver}, {"tables", tables}, {"beta", betas}, {"provenance", provenance(c)}};
  o.artifacts = {{c.out, dump(j)}};
  o.summary = s.str();
  return o;
}

inline Outcome execute(const RunConfig& c) {
  if (c.jobs < 1) schema_error("--jobs must be >= 1");
  switch (c.command) {
    case Command::simulate: return run_simulate(c);
    case Command::fit: return run_fit(c);
    case Command::allocate: return run_allocate(c);
    case Command::bootstrap: return run_bootstrap(c);
    case Command::replicate: return run_replicate(c);
    case Command::report: return run_report(c);
    case Command::bridge: return run_bridge(c);
  }
  schema_error("unknown command");
}

inline json manifest_json(const RunConfig& c, const Outcome& o) {
  json inputs = json::array(), arts = json::array();
  for (const auto& p : o.inputs) inputs.push_back({{"path", p}, {"fnv1a", hex64(fnv1a(io::read_text_file(p)))}});
  for (const auto& a : o.artifacts)
    arts.push_back({{"path", a.path}, {"fnv1a", hex64(fnv1a(a.content))}, {"bytes", a.content.size()}});
  return json{{"manifest_version", kFormatVersion},
              {"library_version", kLibraryVersion},
              {"command", command_name(c.command)},
              {"config", to_json(c)},
              {"config_hash", config_hash(c)},
              {"seed", c.seed ? json(*c.seed) : json(nullptr)},
              {"inputs", inputs},
              {"artifacts", arts}};
}

/// Executes a configuration and writes its artifacts plus manifest.
inline Outcome run(const RunConfig& c) {
  Outcome o = execute(c);
  o.artifacts.push_back({manifest_path(c.out), dump(manifest_json(c, o))});
  commit(o.artifacts);
  return o;
}

struct RerunReport {
  Outcome outcome;
  std::vector<std::string> mismatches;  // artifacts whose bytes differ from the manifest record
};

/// Re-executes a manifest. With `out_dir` set, outputs go there under their
/// original file names. Inputs must still hash to the recorded values.
inline RerunReport rerun_manifest(const std::string& path, const std::optional<std::string>& out_dir = std::nullopt) {
  const json m = io::read_json_file(path);
  io::Reader r(m, path);
  int version = 0;
  r.require("manifest_version", version);
  if (version != kFormatVersion) r.error("manifest_version", "unsupported version " + std::to_string(version));
  for (const char* k : {"library_version", "command", "config_hash", "seed", "inputs", "artifacts"})
    if (r.has(k)) (void)r.raw(k);
  if (!r.has("config")) r.error("config", "missing required key");
  RunConfig c = config_from(r.raw("config"), path);
  r.finish();
  for (const auto& in : m.at("inputs")) {
    const auto p = in.at("path").get<std::string>();
    if (hex64(fnv1a(io::read_text_file(p))) != in.at("fnv1a").get<std::string>())
      fail(ErrorCode::IoError, "input '" + p + "' changed since the manifest was written");
  }
  std::vector<std::pair<std::string, std::string>> recorded;  // file name, hash
  for (const auto& a : m.at("artifacts"))
    recorded.emplace_back(std::filesystem::path(a.at("path").get<std::string>()).filename().string(), a.at("fnv1a").get<std::string>());
  if (out_dir) c.out = (std::filesystem::path(*out_dir) / std::filesystem::path(c.out).filename()).string();
  RerunReport rep;
  rep.outcome = run(c);
  for (const auto& a : rep.outcome.artifacts) {
    const auto fname = std::filesystem::path(a.path).filename().string();
    if (fname == std::filesystem::path(manifest_path(c.out)).filename().string()) continue;
    bool ok = false;
    for (const auto& [f, h] : recorded) ok = ok || (f == fname && h == hex64(fnv1a(a.content)));
    if (!ok) rep.mismatches.push_back(a.path);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// entry point

inline bool is_config_error(const Error& e) {
  if (dynamic_cast<const ValidationError*>(&e)) return true;
  switch (e.code()) {
    case ErrorCode::ConfigSchemaError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidSpec:
    case ErrorCode::InvalidLayout:
    case ErrorCode::MissingColumn:
    case ErrorCode::RoleConflict:
    case ErrorCode::EmptyCandidates:
      return true;
    default:
      return false;
  }
}

inline void report_error(std::ostream& err, const std::string& code, const std::string& message, int exit_code,
                         const json& violations = json::array()) {
  err << json{{"error", {{"code", code}, {"message", message}, {"exit_code", exit_code}, {"violations", violations}}}}.dump() << "\n";
}

inline void add_output(CLI::App* s, RunConfig& c) { s->add_option("--out", c.out, "primary output file")->required(); }

inline void add_seed(CLI::App* s, RunConfig& c) { s->add_option("--seed", c.seed, "seed for all randomness"); }

inline void add_fit_options(CLI::App* s, RunConfig& c) {
  s->add_option("--method", c.method, "ols|gformula|p2sls|pgcomp|recursive|lgcomp|ipw")->required();
  s->add_option("--data", c.data, "CSV file")->required();
  s->add_option("--roles", c.roles, "JSON column roles and layout")->required();
  s->add_option("--allocation", c.allocation, "allocation result whose Z/W sets are applied");
  s->add_option("--bridge", c.bridge, "linear|probit (pgcomp)");
  s->add_option("--regimes", c.regimes, "longitudinal regimes, e.g. \"0,0;1,1\"");
  s->add_option("--maps", c.maps, "JSON feature maps for longitudinal fits");
  s->add_option("--grid", c.grid, "treatment values for point fits")->delimiter(',');
}

/// Parses argv, runs, writes artifacts. Returns 0 on success, 1 on runtime
/// failure, 2 on configuration errors.
inline int main_entry(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Proximal causal inference estimators"};
  app.require_subcommand(1);
  RunConfig c;
  std::string manifest, out_dir;

  auto* sim = app.add_subcommand("simulate", "draw a synthetic dataset with ground truth");
  add_output(sim, c);
  add_seed(sim, c);
  sim->add_option("--spec", c.spec, "JSON DGP spec {kind, spec}");
  sim->add_option("--kind", c.kind, "point|longitudinal default spec when --spec is absent");
  sim->add_option("--n", c.n, "subjects");

  auto* fit = app.add_subcommand("fit", "fit an estimator");
  add_output(fit, c);
  add_seed(fit, c);
  add_fit_options(fit, c);

  auto* alloc = app.add_subcommand("allocate", "split candidate proxies into Z and W");
  add_output(alloc, c);
  add_seed(alloc, c);
  alloc->add_option("--data", c.data, "CSV file")->required();
  alloc->add_option("--roles", c.roles, "JSON column roles")->required();
  alloc->add_option("--candidates", c.candidates, "comma separated columns")->delimiter(',')->required();
  alloc->add_option("--tie-policy", c.tie_policy, "prioritize_w|prioritize_z|randomize");
  alloc->add_option("--scale", c.scale, "wald|coefficient");

  auto* boot = app.add_subcommand("bootstrap", "nonparametric bootstrap of a fit configuration");
  add_output(boot, c);
  add_seed(boot, c);
  boot->add_option("--fit-config", c.fit_config, "fit manifest or fit config JSON")->required();
  boot->add_option("--B", c.B, "replicates");
  boot->add_option("--alpha", c.alpha, "1 - interval level");
  boot->add_option("--jobs", c.jobs, "worker threads");
  boot->add_flag("--force", c.force, "continue past the failed-replicate limit");

  auto* rep = app.add_subcommand("replicate", "Monte-Carlo replication study");
  add_output(rep, c);
  add_seed(rep, c);
  rep->add_option("--spec", c.spec, "JSON DGP spec {kind, spec}");
  rep->add_option("--kind", c.kind, "point|longitudinal default spec when --spec is absent");
  rep->add_option("--n", c.n, "subjects per replicate");
  rep->add_option("--reps", c.reps, "replicates");
  rep->add_option("--estimators", c.estimators, "comma separated estimator names")->delimiter(',');
  rep->add_option("--bootstrap-B", c.bootstrap_B, "bootstrap intervals per replicate (0: Wald)");
  rep->add_option("--alpha", c.alpha, "1 - interval level");
  rep->add_option("--jobs", c.jobs, "worker threads");

  auto* br = app.add_subcommand("bridge", "solve discrete bridge equations and print h tables");
  add_output(br, c);
  br->add_option("--law", c.law, "JSON discrete law")->required();
  br->add_option("--solver", c.solver, "binary|categorical|g_formula");

  auto* rpt = app.add_subcommand("report", "bias/coverage table from a replication result");
  add_output(rpt, c);
  rpt->add_option("--input", c.input, "replicate output JSON")->required();

  auto* rr = app.add_subcommand("run", "re-execute a manifest");
  rr->add_option("--manifest", manifest, "manifest JSON")->required();
  rr->add_option("--out-dir", out_dir, "write outputs here instead of the recorded paths");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    report_error(err, "UsageError", e.what(), 2);
    return 2;
  }
  for (const auto& [nm, cmd] : kCommands)
    if (app.got_subcommand(nm)) c.command = cmd;

  try {
    if (app.got_subcommand("run")) {
      const auto r = rerun_manifest(manifest, out_dir.empty() ? std::nullopt : std::optional<std::string>(out_dir));
      out << r.outcome.summary;
      if (!r.mismatches.empty()) {
        std::string list;
        for (const auto& m : r.mismatches) list += (list.empty() ? "" : ", ") + m;
        report_error(err, "IoError", "artifacts differ from the manifest record: " + list, 1);
        return 1;
      }
      out << "reproduced " << r.outcome.artifacts.size() - 1 << " artifact(s)\n";
      return 0;
    }
    const auto o = run(c);
    out << o.summary;
    return 0;
  } catch (const ValidationError& e) {
    json vs = json::array();
    for (const auto& v : e.violations())
      vs.push_back({{"code", std::string(to_string(v.code))}, {"column", v.column}, {"row", v.row}, {"detail", v.detail}});
    report_error(err, std::string(to_string(e.code())), e.what(), 2, vs);
    return 2;
  } catch (const Error& e) {
    const int code = is_config_error(e) ? 2 : 1;
    report_error(err, std::string(to_string(e.code())), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    report_error(err, "RuntimeError", e.what(), 1);
    return 1;
  }
}

}  // namespace proxcausal::cli
