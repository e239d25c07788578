#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "visyield/optimize.hpp"
#include "visyield/sampling.hpp"
#include "visyield/testbench.hpp"

namespace vis {

inline constexpr int kConfigVersion = 1;

/// One estimator to run: "mc", "mnis" or "beyond" with a proposal tier.
struct MethodSpec {
  enum class Kind { MonteCarlo, Mnis, Beyond };
  Kind kind = Kind::Beyond;
  FitTier tier = FitTier::MixtureSkewNormal;

  /// "mc", "mnis", "beyond:<Tier>"; also used as the output subdirectory.
  std::string label() const;
};

/// Parses "mc", "mnis", "beyond" (tier from `default_tier`) or "beyond:<Tier>".
std::optional<MethodSpec> parse_method(const std::string& text, FitTier default_tier);

struct FamilySpec {
  Vector a;
  double c0 = 0.0;
  Vector c1;
  Matrix c2;
  Vector lower;
  Vector upper;

  QuadraticFamily build() const;
};

struct OptimizeSection {
  FamilySpec family;
  OptimizeConfig settings;  // seed and threads are filled per run
  std::vector<OmsvMode> modes{OmsvMode::TrueOMSV};
};

struct ExperimentConfig {
  int version = kConfigVersion;
  std::optional<BenchSpec> bench;  // required unless only optimizing
  std::vector<MethodSpec> methods;
  std::vector<std::uint64_t> seeds{1};
  double fom_target = 0.1;
  int confirm_iters = 3;
  std::string output_dir = "vis_yield_out";
  int threads = 1;
  BeyondConfig beyond;
  McConfig mc;
  std::optional<OptimizeSection> optimize;
};

/// Parses and validates a JSON document. Unknown fields, wrong types and
/// out-of-range values raise ConfigError naming the field path (e.g.
/// `bench.children[1].a`).
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

/// Parses a comma-separated seed list such as "1,2,3".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace vis
