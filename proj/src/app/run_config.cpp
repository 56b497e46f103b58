#include "shj/app/run_config.hpp"

#include "shj/catalog.hpp"
#include "shj/errors.hpp"
#include "shj/noise.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace shj::app {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) { throw ConfigError(path + ": " + msg); }

std::string child(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void allow_keys(const json& obj, const std::string& path, const std::set<std::string>& keys) {
  if (!obj.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!keys.count(key)) fail(child(path, key), "unknown key");
  }
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

double positive(const json& v, const std::string& path) {
  const double x = number(v, path);
  if (!(x > 0.0)) fail(path, "must be positive");
  return x;
}

long long integer(const json& v, const std::string& path, long long lo) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  const long long x = v.get<long long>();
  if (x < lo) fail(path, "must be at least " + std::to_string(lo));
  return x;
}

std::string text(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

std::vector<double> numbers(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], index(path, i)));
  return out;
}

Eigen::VectorXd point(const json& v, const std::string& path, int dim) {
  if (v.is_number() && dim == 1) return Eigen::VectorXd::Constant(1, v.get<double>());
  const std::vector<double> xs = numbers(v, path);
  if (static_cast<int>(xs.size()) != dim) fail(path, "expected " + std::to_string(dim) + " coordinates");
  return Eigen::Map<const Eigen::VectorXd>(xs.data(), dim);
}

std::pair<double, double> box(const json& v, const std::string& path) {
  const std::vector<double> b = numbers(v, path);
  if (b.size() != 2 || !(b[0] < b[1])) fail(path, "expected [lo, hi] with lo < hi");
  return {b[0], b[1]};
}

TimeGrid grid(const json& v, const std::string& path) {
  allow_keys(v, path, {"t_end", "steps"});
  if (!v.contains("t_end") || !v.contains("steps")) fail(path, "requires t_end and steps");
  return TimeGrid(positive(v["t_end"], child(path, "t_end")),
                  static_cast<int>(integer(v["steps"], child(path, "steps"), 1)));
}

bool in_catalog(const std::string& name, CatalogKind kind) {
  return std::any_of(catalog().begin(), catalog().end(),
                     [&](const CatalogEntry& e) { return e.kind == kind && e.name == name; });
}

void compile_check(const std::string& source, int n, VariableSpace space, const std::string& path, bool q_only) {
  ScalarField f;
  try {
    f = make_field(source, n, space);
  } catch (const Error& e) {
    fail(path, std::string("'") + source + "': " + e.what());
  }
  if (q_only && (f.arity().uses_second || f.arity().uses_t)) fail(path, "'" + source + "' may only use q1..qn");
}

/// A catalog name, {"catalog": name, "parameter": c}, or a DSL string.
std::string expression(const json& v, const std::string& path, CatalogKind kind, int n, VariableSpace space,
                       bool q_only) {
  std::string source;
  if (v.is_string() && in_catalog(v.get<std::string>(), kind)) {
    source = catalog_expressions(v.get<std::string>(), kind, n).front();
  } else if (v.is_string()) {
    source = v.get<std::string>();
  } else if (v.is_object()) {
    allow_keys(v, path, {"catalog", "parameter"});
    if (!v.contains("catalog")) fail(path, "requires catalog");
    const std::string name = text(v["catalog"], child(path, "catalog"));
    if (!in_catalog(name, kind)) fail(child(path, "catalog"), "unknown entry '" + name + "'");
    source = v.contains("parameter")
                 ? catalog_expressions(name, kind, n, number(v["parameter"], child(path, "parameter"))).front()
                 : catalog_expressions(name, kind, n).front();
  } else {
    fail(path, "expected a catalog name, a catalog object or a DSL string");
  }
  compile_check(source, n, space, path, q_only);
  return source;
}

SystemSpec system_spec(const json& v, const std::string& path) {
  SystemSpec spec;
  if (v.is_string()) {
    const std::string name = v.get<std::string>();
    if (!in_catalog(name, CatalogKind::system)) fail(path, "unknown system '" + name + "'");
    spec.h = catalog_expressions(name, CatalogKind::system, 1);
    return spec;
  }
  allow_keys(v, path, {"catalog", "parameter", "n", "h"});
  if (v.contains("n")) spec.n = static_cast<int>(integer(v["n"], child(path, "n"), 1));
  if (v.contains("catalog") == v.contains("h")) fail(path, "requires exactly one of catalog and h");
  if (v.contains("catalog")) {
    const std::string name = text(v["catalog"], child(path, "catalog"));
    if (!in_catalog(name, CatalogKind::system)) fail(child(path, "catalog"), "unknown system '" + name + "'");
    spec.h = v.contains("parameter")
                 ? catalog_expressions(name, CatalogKind::system, spec.n, number(v["parameter"], child(path, "parameter")))
                 : catalog_expressions(name, CatalogKind::system, spec.n);
    return spec;
  }
  const json& h = v["h"];
  if (!h.is_array() || h.empty()) fail(child(path, "h"), "expected a non-empty array of DSL strings");
  for (std::size_t i = 0; i < h.size(); ++i) {
    spec.h.push_back(text(h[i], index(child(path, "h"), i)));
    compile_check(spec.h.back(), spec.n, VariableSpace::phase, index(child(path, "h"), i), false);
  }
  return spec;
}

std::vector<Eigen::VectorXd> point_list(const json& v, const std::string& path, int dim) {
  if (!v.is_array() || v.empty()) fail(path, "expected a non-empty array of points");
  std::vector<Eigen::VectorXd> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(point(v[i], index(path, i), dim));
  return out;
}

PointSource initial_source(const json& v, const std::string& path, int dim) {
  allow_keys(v, path, {"point", "box"});
  if (v.contains("point") == v.contains("box")) fail(path, "requires exactly one of point and box");
  PointSource src;
  if (v.contains("point")) {
    src.fixed.push_back(point(v["point"], child(path, "point"), dim));
  } else {
    src.random = true;
    std::tie(src.lo, src.hi) = box(v["box"], child(path, "box"));
  }
  return src;
}

const std::map<ExperimentKind, std::set<std::string>>& case_keys() {
  static const std::map<ExperimentKind, std::set<std::string>> keys = {
      {ExperimentKind::simulate, {"system", "initial"}},
      {ExperimentKind::action_check, {"system", "initial", "nodes", "h_fd"}},
      {ExperimentKind::hj, {"system", "section", "points", "box", "oracle", "h_fd"}},
      {ExperimentKind::feynman_kac, {"n", "potential", "section", "points", "times", "reference", "budget", "pde"}},
      {ExperimentKind::convergence, {"system", "section", "points", "box", "levels"}},
      {ExperimentKind::transform,
       {"generating", "system", "checks", "initial", "probe", "q1_ref", "expect", "expect_defect"}},
  };
  return keys;
}

const std::map<ExperimentKind, std::set<std::string>>& tolerance_keys() {
  static const std::map<ExperimentKind, std::set<std::string>> keys = {
      {ExperimentKind::simulate, {"step_defect", "accumulated_defect_per_step"}},
      {ExperimentKind::action_check, {"relative", "hat_r"}},
      {ExperimentKind::hj, {"shooting", "oracle", "residual", "derivative"}},
      {ExperimentKind::feynman_kac, {}},
      {ExperimentKind::convergence, {"residual", "slope"}},
      {ExperimentKind::transform, {"q_drift", "discrepancy", "bracket"}},
  };
  return keys;
}

std::string sanitize_label(const std::string& label, const std::string& path) {
  if (label.empty()) fail(path, "must not be empty");
  for (char c : label) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') {
      fail(path, "labels may use letters, digits, '_' and '-' only");
    }
  }
  return label;
}

CaseConfig parse_case(const json& v, const std::string& path, ExperimentKind kind, const TimeGrid& top_grid) {
  std::set<std::string> allowed = case_keys().at(kind);
  allowed.insert({"label", "grid", "tolerances"});
  allow_keys(v, path, allowed);
  CaseConfig c;
  if (v.contains("label")) c.label = sanitize_label(text(v["label"], child(path, "label")), child(path, "label"));
  if (v.contains("grid")) c.grid = grid(v["grid"], child(path, "grid"));
  const TimeGrid g = c.grid.value_or(top_grid);

  const bool needs_system = kind != ExperimentKind::feynman_kac;
  if (needs_system) {
    if (!v.contains("system")) fail(path, "requires system");
    c.system = system_spec(v["system"], child(path, "system"));
  }
  const int n = kind == ExperimentKind::feynman_kac && v.contains("n")
                    ? static_cast<int>(integer(v["n"], child(path, "n"), 1))
                    : c.system.n;
  c.system.n = n;

  auto require = [&](const char* key) {
    if (!v.contains(key)) fail(path, std::string("requires ") + key);
    return v[key];
  };

  switch (kind) {
    case ExperimentKind::simulate:
    case ExperimentKind::action_check:
      c.initial = initial_source(require("initial"), child(path, "initial"), 2 * n);
      if (v.contains("nodes")) {
        const json& nodes = v["nodes"];
        if (!nodes.is_array() || nodes.empty()) fail(child(path, "nodes"), "expected a non-empty array");
        for (std::size_t i = 0; i < nodes.size(); ++i) {
          const long long k = integer(nodes[i], index(child(path, "nodes"), i), 1);
          if (k > g.steps) fail(index(child(path, "nodes"), i), "exceeds the grid steps");
          c.nodes.push_back(static_cast<int>(k));
        }
      }
      if (v.contains("h_fd")) c.h_fd = positive(v["h_fd"], child(path, "h_fd"));
      break;
    case ExperimentKind::hj:
    case ExperimentKind::convergence:
      c.section = expression(require("section"), child(path, "section"), CatalogKind::section, n,
                             VariableSpace::phase, true);
      if (v.contains("points") == v.contains("box")) fail(path, "requires exactly one of points and box");
      if (v.contains("points")) {
        c.points.fixed = point_list(v["points"], child(path, "points"), n);
      } else {
        c.points.random = true;
        std::tie(c.points.lo, c.points.hi) = box(v["box"], child(path, "box"));
      }
      if (v.contains("oracle")) {
        c.oracle = text(v["oracle"], child(path, "oracle"));
        if (c.oracle != "translation" && c.oracle != "free_particle") {
          fail(child(path, "oracle"), "expected 'translation' or 'free_particle'");
        }
      }
      if (v.contains("h_fd")) c.h_fd = positive(v["h_fd"], child(path, "h_fd"));
      if (v.contains("levels")) c.levels = static_cast<int>(integer(v["levels"], child(path, "levels"), 1));
      break;
    case ExperimentKind::feynman_kac: {
      c.potential = expression(require("potential"), child(path, "potential"), CatalogKind::potential, n,
                               VariableSpace::phase, true);
      c.section = expression(require("section"), child(path, "section"), CatalogKind::section, n,
                             VariableSpace::phase, true);
      c.points.fixed = point_list(require("points"), child(path, "points"), n);
      if (v.contains("times")) {
        c.times = numbers(v["times"], child(path, "times"));
        for (double t : c.times) {
          if (!(t > 0.0) || t > g.t_end) fail(child(path, "times"), "times must lie in (0, t_end]");
        }
      }
      if (v.contains("reference")) {
        c.reference = text(v["reference"], child(path, "reference"));
        if (c.reference == "pde") {
          if (n != 1) fail(child(path, "reference"), "the pde reference needs n = 1");
        } else {
          compile_check(c.reference, n, VariableSpace::phase, child(path, "reference"), false);
          if (make_field(c.reference, n).arity().uses_second) {
            fail(child(path, "reference"), "a reference may only use q1..qn and t");
          }
        }
      }
      if (v.contains("budget")) {
        c.budget = number(v["budget"], child(path, "budget"));
        if (c.budget < 0.0) fail(child(path, "budget"), "must be non-negative");
      }
      if (v.contains("pde")) {
        const json& p = v["pde"];
        const std::string pp = child(path, "pde");
        allow_keys(p, pp, {"dx", "steps", "buffer"});
        if (p.contains("dx")) c.pde.dx = positive(p["dx"], child(pp, "dx"));
        if (p.contains("steps")) c.pde.steps = static_cast<int>(integer(p["steps"], child(pp, "steps"), 1));
        if (p.contains("buffer")) c.pde.buffer = positive(p["buffer"], child(pp, "buffer"));
      }
      break;
    }
    case ExperimentKind::transform: {
      c.generating = expression(require("generating"), child(path, "generating"), CatalogKind::generating, n,
                                VariableSpace::generating, false);
      const json& checks = require("checks");
      if (!checks.is_array() || checks.empty()) fail(child(path, "checks"), "expected a non-empty array");
      for (std::size_t i = 0; i < checks.size(); ++i) {
        const std::string name = text(checks[i], index(child(path, "checks"), i));
        if (name != "equilibrium" && name != "brackets") {
          fail(index(child(path, "checks"), i), "expected 'equilibrium' or 'brackets'");
        }
        c.checks.push_back(name);
      }
      const bool equilibrium = std::count(c.checks.begin(), c.checks.end(), "equilibrium") > 0;
      if (equilibrium) c.initial = initial_source(require("initial"), child(path, "initial"), 2 * n);
      if (v.contains("probe")) {
        const json& p = v["probe"];
        const std::string pp = child(path, "probe");
        allow_keys(p, pp, {"box", "points", "times"});
        if (p.contains("box")) std::tie(c.probe.lo, c.probe.hi) = box(p["box"], child(pp, "box"));
        if (p.contains("points")) c.probe.points = static_cast<int>(integer(p["points"], child(pp, "points"), 1));
        if (p.contains("times")) c.probe.times = numbers(p["times"], child(pp, "times"));
      }
      if (v.contains("q1_ref")) c.q1_ref = number(v["q1_ref"], child(path, "q1_ref"));
      if (v.contains("expect")) {
        const std::string e = text(v["expect"], child(path, "expect"));
        if (e != "pass" && e != "fail") fail(child(path, "expect"), "expected 'pass' or 'fail'");
        c.expect_pass = e == "pass";
      }
      if (v.contains("expect_defect")) c.expect_defect = number(v["expect_defect"], child(path, "expect_defect"));
      break;
    }
  }

  if (v.contains("tolerances")) {
    const std::string tp = child(path, "tolerances");
    allow_keys(v["tolerances"], tp, tolerance_keys().at(kind));
    for (const auto& [key, val] : v["tolerances"].items()) {
      c.tolerances[key] = key == "slope" ? number(val, child(tp, key)) : positive(val, child(tp, key));
    }
  }
  return c;
}

}  // namespace

std::string_view experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::simulate: return "simulate";
    case ExperimentKind::action_check: return "action-check";
    case ExperimentKind::hj: return "hj";
    case ExperimentKind::feynman_kac: return "feynman-kac";
    case ExperimentKind::transform: return "transform";
    case ExperimentKind::convergence: return "convergence";
  }
  return "";
}

ExperimentKind parse_experiment(std::string_view name) {
  for (auto kind : {ExperimentKind::simulate, ExperimentKind::action_check, ExperimentKind::hj,
                    ExperimentKind::feynman_kac, ExperimentKind::transform, ExperimentKind::convergence}) {
    if (experiment_name(kind) == name) return kind;
  }
  throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

std::vector<Eigen::VectorXd> PointSource::at(std::uint64_t seed, std::uint64_t draw, int dim,
                                             std::uint32_t slot_base) const {
  if (!random) return fixed;
  Eigen::VectorXd x(dim);
  for (int i = 0; i < dim; ++i) x(i) = lo + (hi - lo) * uniform_at(seed, draw, slot_base + static_cast<std::uint32_t>(i));
  return {x};
}

std::optional<double> CaseConfig::tolerance(const std::string& key) const {
  const auto it = tolerances.find(key);
  if (it == tolerances.end()) return std::nullopt;
  return it->second;
}

RunConfig parse_config(std::string_view json_text, std::optional<ExperimentKind> expected) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(e.what());
  }
  allow_keys(doc, "", {"experiment", "name", "grid", "noise", "threads", "output", "scheme", "cases"});
  RunConfig cfg;
  if (doc.contains("experiment")) {
    try {
      cfg.experiment = parse_experiment(text(doc["experiment"], "experiment"));
    } catch (const ConfigError& e) {
      fail("experiment", e.what());
    }
    if (expected && *expected != cfg.experiment) {
      fail("experiment", "config is '" + std::string(experiment_name(cfg.experiment)) + "' but the subcommand is '" +
                             std::string(experiment_name(*expected)) + "'");
    }
  } else if (expected) {
    cfg.experiment = *expected;
  } else {
    fail("experiment", "missing; pass it in the config or use an experiment subcommand");
  }
  cfg.name = doc.contains("name") ? sanitize_label(text(doc["name"], "name"), "name")
                                  : std::string(experiment_name(cfg.experiment));
  if (!doc.contains("grid")) fail("grid", "missing");
  cfg.grid = grid(doc["grid"], "grid");
  if (doc.contains("noise")) {
    const json& nz = doc["noise"];
    allow_keys(nz, "noise", {"seed", "paths"});
    if (nz.contains("seed")) cfg.seed = static_cast<std::uint64_t>(integer(nz["seed"], "noise.seed", 0));
    if (nz.contains("paths")) cfg.paths = static_cast<int>(integer(nz["paths"], "noise.paths", 1));
  }
  if (doc.contains("threads")) cfg.threads = static_cast<int>(integer(doc["threads"], "threads", 0));
  if (doc.contains("output")) cfg.output = text(doc["output"], "output");
  if (doc.contains("scheme")) {
    const json& s = doc["scheme"];
    allow_keys(s, "scheme", {"tolerance", "max_iterations", "defect_tolerance"});
    if (s.contains("tolerance")) cfg.scheme.tolerance = positive(s["tolerance"], "scheme.tolerance");
    if (s.contains("max_iterations")) {
      cfg.scheme.max_iterations = static_cast<int>(integer(s["max_iterations"], "scheme.max_iterations", 1));
    }
    if (s.contains("defect_tolerance")) {
      cfg.scheme.defect_tolerance = positive(s["defect_tolerance"], "scheme.defect_tolerance");
    }
  }
  if (!doc.contains("cases") || !doc["cases"].is_array() || doc["cases"].empty()) {
    fail("cases", "expected a non-empty array");
  }
  std::set<std::string> labels;
  for (std::size_t i = 0; i < doc["cases"].size(); ++i) {
    const std::string path = index("cases", i);
    CaseConfig c = parse_case(doc["cases"][i], path, cfg.experiment, cfg.grid);
    if (c.label.empty()) c.label = "case" + std::to_string(i);
    if (!labels.insert(c.label).second) fail(child(path, "label"), "duplicate label '" + c.label + "'");
    cfg.cases.push_back(std::move(c));
  }
  cfg.source = doc.dump(2);
  return cfg;
}

RunConfig load_config(const std::string& path, std::optional<ExperimentKind> expected) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), expected);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void apply_overrides(RunConfig& cfg, const Overrides& o) {
  if (o.seed) cfg.seed = *o.seed;
  if (o.paths) {
    if (*o.paths < 1) throw ConfigError("--paths: must be at least 1");
    cfg.paths = *o.paths;
  }
  if (o.steps) {
    if (*o.steps < 1) throw ConfigError("--steps: must be at least 1");
    cfg.grid.steps = *o.steps;
    for (auto& c : cfg.cases) {
      if (c.grid) c.grid->steps = *o.steps;
    }
  }
  if (o.threads) {
    if (*o.threads < 0) throw ConfigError("--threads: must be non-negative");
    cfg.threads = *o.threads;
  }
  if (o.output) cfg.output = *o.output;
}

}  // namespace shj::app
