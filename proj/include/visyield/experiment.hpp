#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "visyield/config.hpp"
#include "visyield/sampling.hpp"

namespace vis {

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitNotConverged = 2;

/// Command-line overrides applied on top of the config file.
struct RunOptions {
  std::optional<std::string> output_dir;
  std::optional<std::vector<std::uint64_t>> seeds;
  std::optional<int> threads;
  bool quiet = false;
  std::ostream* log = nullptr;  // progress lines; nullptr or quiet disables
};

/// Runs one estimator for one seed.
RunReport run_method(const Testbench& bench, const MethodSpec& method, const ExperimentConfig& cfg, std::uint64_t seed,
                     int threads);

/// Subcommands. Each writes its outputs below the output directory and
/// returns kExitOk or kExitNotConverged; configuration problems throw
/// ConfigError.
int cmd_estimate(const ExperimentConfig& cfg, const RunOptions& options);
int cmd_compare(const ExperimentConfig& cfg, const RunOptions& options);
int cmd_optimize(const ExperimentConfig& cfg, const RunOptions& options);

/// Resolves the thread count: explicit value, else VIS_YIELD_THREADS, else
/// `fallback`. Throws ConfigError on a malformed environment value.
int resolve_threads(std::optional<int> explicit_threads, int fallback);

}  // namespace vis
