#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "visyield/distributions.hpp"
#include "visyield/sampling.hpp"
#include "visyield/testbench.hpp"

namespace vis {

enum class OmsvMode { MinNorm, TrueOMSV };

std::string to_string(OmsvMode mode);
std::optional<OmsvMode> parse_omsv_mode(const std::string& name);

struct OptimizeConfig {
  Vector z0;
  /// Optional box narrowing the family's own bounds; empty vectors mean none.
  Vector lower;
  Vector upper;
  double step = 0.02;
  int max_outer_iters = 30;
  OmsvMode omsv_mode = OmsvMode::TrueOMSV;
  std::size_t failures_per_eval = 20;
  double fd_step = 0.1;
  double grad_tol = 1e-4;
  /// Converged once the gradient stays below grad_tol on this many consecutive
  /// iterations. Probes share one stream, so a single zero difference often
  /// means no draw fell between the probe boundaries, not stationarity.
  int confirm_iters = 3;
  /// Onion settings for every OMSV evaluation; min_failures is replaced by
  /// failures_per_eval.
  OnionConfig onion;
  std::uint64_t seed = 1;
  int threads = 1;

  void validate(const QuadraticFamily& family) const;
};

struct OmsvEvaluation {
  Vector mu;             // zero when no failure was found
  double norm = 0.0;     // |mu|, or the onion radius when no failure was found
  std::size_t sims = 0;
  bool sentinel = false;
};

/// OMSV of the bench at design z from one onion pass driven by `rng`. With no
/// failure inside the onion radius the design counts as failure-free up to
/// that radius and norm = onion max_radius.
OmsvEvaluation omsv_of_design(const QuadraticFamily& family, const Vector& z, OmsvMode mode,
                              const OnionConfig& onion, RandomStream rng);

struct OptimizeStep {
  int iteration = 0;
  Vector z;
  double objective = 0.0;  // |mu(z)|^2
  double oracle_pf = 0.0;  // evaluation only, never fed back
  std::size_t sims = 0;    // cumulative, probes included
  double grad_norm = 0.0;  // NaN on the last iterate when no gradient was taken
  bool sentinel = false;
};

struct OptimizeTrace {
  std::string mode;
  std::uint64_t seed = 0;
  std::vector<OptimizeStep> steps;
  std::size_t total_sims = 0;
  bool converged = false;  // gradient norm fell below grad_tol
  std::string status;      // "converged", "max_iters", "aborted"
  std::string error;
  double wall_time = 0.0;

  const OptimizeStep& final_step() const { return steps.back(); }
  /// Cumulative sims at the first iterate with oracle_pf <= target.
  std::optional<std::size_t> sims_to_reach(double target_pf) const;
};

/// Projected gradient ascent on |mu(z)|^2 with central finite differences;
/// all probes of one iteration share a random stream (common random numbers).
OptimizeTrace run_variational_asais(const QuadraticFamily& family, const OptimizeConfig& cfg);

}  // namespace vis
