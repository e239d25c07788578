// Command-line front end: estimate, compare, optimize.

#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "visyield/config.hpp"
#include "visyield/errors.hpp"
#include "visyield/experiment.hpp"

namespace {

struct Flags {
  std::string config;
  std::string output;
  std::string seeds;
  int threads = 0;
  bool quiet = false;
};

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--output", f.output, "Output directory (overrides config)");
  cmd->add_option("--seeds", f.seeds, "Comma-separated seed list (overrides config)");
  cmd->add_option("--threads", f.threads, "Worker threads (fallback: VIS_YIELD_THREADS, then config)")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--quiet", f.quiet, "Suppress progress output");
}

int dispatch(const std::string& name, const Flags& f) {
  const vis::ExperimentConfig cfg = vis::load_config(f.config);
  vis::RunOptions options;
  if (!f.output.empty()) options.output_dir = f.output;
  if (!f.seeds.empty()) options.seeds = vis::parse_seed_list(f.seeds);
  if (f.threads > 0) options.threads = f.threads;
  options.quiet = f.quiet;
  options.log = &std::cerr;
  if (name == "estimate") return vis::cmd_estimate(cfg, options);
  if (name == "compare") return vis::cmd_compare(cfg, options);
  return vis::cmd_optimize(cfg, options);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rare-event failure probability estimation and yield optimization"};
  app.require_subcommand(1);
  Flags flags;
  std::string chosen;
  for (const char* name : {"estimate", "compare", "optimize"}) {
    CLI::App* cmd = app.add_subcommand(name);
    add_flags(cmd, flags);
    cmd->callback([&chosen, name] { chosen = name; });
  }
  app.get_subcommand("estimate")->description("Run one method over a seed list");
  app.get_subcommand("compare")->description("Run several methods on the same seeds and tabulate them");
  app.get_subcommand("optimize")->description("Yield optimization on a parameterized quadratic family");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : vis::kExitConfigError;
  }

  try {
    return dispatch(chosen, flags);
  } catch (const vis::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return vis::kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return vis::kExitConfigError;
  }
}
