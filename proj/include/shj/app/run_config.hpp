#pragma once

#include "shj/integrator.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace shj::app {

enum class ExperimentKind { simulate, action_check, hj, feynman_kac, transform, convergence };

std::string_view experiment_name(ExperimentKind kind);
/// Throws ConfigError for unknown names.
ExperimentKind parse_experiment(std::string_view name);

/// h_0..h_r as DSL strings on T*R^n.
struct SystemSpec {
  int n = 1;
  std::vector<std::string> h;
};

/// Fixed points, or one uniform draw per draw index from [lo, hi]^dim.
struct PointSource {
  std::vector<Eigen::VectorXd> fixed;
  bool random = false;
  double lo = -1.0;
  double hi = 1.0;

  /// Points used by draw `draw`; `slot_base` separates independent draws of one case.
  std::vector<Eigen::VectorXd> at(std::uint64_t seed, std::uint64_t draw, int dim, std::uint32_t slot_base = 0) const;
};

/// Tensor grid of phase points in [lo, hi]^(2n) with `points` per axis, at each of `times`.
struct ProbeSpec {
  double lo = -1.0;
  double hi = 1.0;
  int points = 3;
  std::vector<double> times{0.25, 0.75};
};

struct PdeSpec {
  double dx = 0.01;
  int steps = 0;  // 0: same as the Monte-Carlo grid
  double buffer = 6.0;
};

/// One case of an experiment. Fields that an experiment does not accept stay at their defaults.
struct CaseConfig {
  std::string label;
  std::optional<TimeGrid> grid;
  SystemSpec system;
  std::string section;     // q-only DSL
  std::string potential;   // q-only DSL
  std::string generating;  // DSL over a, b, t
  PointSource initial;     // phase points (q, p)
  PointSource points;      // configuration points
  std::vector<int> nodes;
  std::vector<double> times;
  std::string oracle;
  std::string reference;
  double budget = 0.0;
  PdeSpec pde;
  int levels = 1;
  std::vector<std::string> checks;
  ProbeSpec probe;
  double q1_ref = 0.0;
  bool expect_pass = true;
  std::optional<double> expect_defect;
  double h_fd = 1e-4;
  std::map<std::string, double> tolerances;

  std::optional<double> tolerance(const std::string& key) const;
};

struct RunConfig {
  ExperimentKind experiment = ExperimentKind::simulate;
  std::string name;
  TimeGrid grid;
  std::uint64_t seed = 0;
  int paths = 1;
  int threads = 1;
  std::string output;
  SchemeConfig scheme;
  std::vector<CaseConfig> cases;
  std::string source;  // the validated JSON document
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> paths;
  std::optional<int> steps;
  std::optional<int> threads;
  std::optional<std::string> output;
};

/// Validates a JSON document and resolves catalog names to DSL strings. Every expression is
/// compiled once here, so DSL errors surface as ConfigError with the field path. `expected`
/// supplies the experiment when the document omits it and must match it otherwise.
RunConfig parse_config(std::string_view json_text, std::optional<ExperimentKind> expected = std::nullopt);

/// Reads and parses a file; ConfigError messages carry the file name and line or field path.
RunConfig load_config(const std::string& path, std::optional<ExperimentKind> expected = std::nullopt);

void apply_overrides(RunConfig& cfg, const Overrides& overrides);

}  // namespace shj::app
