#include "shj/app/experiments.hpp"
#include "shj/catalog.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

struct Flags {
  std::string config;
  shj::app::Overrides overrides;
};

CLI::App* add_run(CLI::App& app, const std::string& name, const std::string& help, Flags& flags) {
  CLI::App* sub = app.add_subcommand(name, help);
  sub->add_option("--config", flags.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", flags.overrides.seed, "Noise seed");
  sub->add_option("--paths", flags.overrides.paths, "Number of paths or draws");
  sub->add_option("--steps", flags.overrides.steps, "Grid steps K");
  sub->add_option("--out", flags.overrides.output, "Output directory");
  sub->add_option("--threads", flags.overrides.threads, "Worker threads (0: all cores)");
  return sub;
}

}  // namespace

int main(int argc, char** argv) {
  using shj::app::ExperimentKind;
  CLI::App app{"Stochastic Hamiltonian and Hamilton-Jacobi verification runs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", shj::app::kVersion);

  Flags flags;
  std::vector<std::pair<CLI::App*, std::optional<ExperimentKind>>> runs;
  runs.emplace_back(add_run(app, "run", "Run the experiment named in the config", flags), std::nullopt);
  for (auto kind : {ExperimentKind::simulate, ExperimentKind::action_check, ExperimentKind::hj,
                    ExperimentKind::feynman_kac, ExperimentKind::transform, ExperimentKind::convergence}) {
    const std::string name(shj::app::experiment_name(kind));
    runs.emplace_back(add_run(app, name, "Run a config of kind " + name, flags), kind);
  }
  CLI::App* catalog = app.add_subcommand("catalog", "List built-in systems, sections, potentials and generating functions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : shj::app::kConfigError;
  }

  if (catalog->parsed()) {
    std::cout << shj::list_catalog();
    return 0;
  }
  for (const auto& [sub, kind] : runs) {
    if (sub->parsed()) return shj::app::run_config_file(flags.config, flags.overrides, kind, std::cout, std::cerr);
  }
  return shj::app::kConfigError;
}
