#pragma once

#include "shj/app/run_config.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace shj::app {

inline constexpr const char* kVersion = "0.1.0";

/// One PASS/FAIL line of a report.
struct Check {
  std::string case_label;
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  std::string relation;  // "<=", ">=" or "==" (verdict checks)
  bool pass = false;
  std::string note;
};

struct Artifact {
  std::string file;
  std::string content;
};

struct ExperimentResult {
  std::vector<Check> checks;
  std::string results_csv;
  std::vector<Artifact> extras;  // per-case CSVs
  std::string plot_script;
  std::vector<std::string> warnings;

  bool all_pass() const;
};

/// Runs every case. Output depends only on the config and seed, not on the thread count.
ExperimentResult run_experiment(const RunConfig& cfg);

/// "PASS <case> <check>: measured <rel> threshold" lines plus a summary.
std::string format_report(const RunConfig& cfg, const ExperimentResult& result);

/// Provenance: config echo, seed, paths, threads, version, wall time.
std::string format_meta(const RunConfig& cfg, const ExperimentResult& result, double wall_seconds);

/// Writes results.csv, report.txt, meta.json, plot.gp and the per-case CSVs into `dir`.
void write_artifacts(const std::string& dir, const RunConfig& cfg, const ExperimentResult& result,
                     double wall_seconds);

/// Exit codes of a run.
enum ExitCode : int { kAllPass = 0, kSomeFail = 1, kConfigError = 2, kNumericalError = 3 };

/// Load, override, run, write. Diagnostics go to `err`, the report to `out`.
int run_config_file(const std::string& path, const Overrides& overrides, std::optional<ExperimentKind> expected,
                    std::ostream& out, std::ostream& err, ExperimentResult* result = nullptr);

}  // namespace shj::app
