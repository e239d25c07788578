#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "visyield/distributions.hpp"
#include "visyield/testbench.hpp"
#include "visyield/visfit.hpp"

namespace vis {

/// Neumaier-compensated running sum in extended precision.
class CompensatedSum {
 public:
  void add(long double v) noexcept;
  long double value() const noexcept { return sum_ + compensation_; }

 private:
  long double sum_ = 0.0L;
  long double compensation_ = 0.0L;
};

struct EstimatorState {
  EstimatorState(int dim, std::size_t draws_per_iter);

  int iteration = 0;
  std::size_t draws_per_iter;
  CompensatedSum sum_weights;     // sum of I(x) w(x) over pooled draws
  CompensatedSum sum_sq_weights;  // sum of (I(x) w(x))^2 over pooled draws
  std::size_t total_draws = 0;    // every IS draw, t * K
  std::size_t pooled_draws = 0;   // draws entering the estimate (all but burn-in)
  FailureSet archive;
  std::vector<double> fom_history;  // NaN where the FoM is undefined
  std::vector<double> pf_history;

  double estimate() const;
};

/// Figure of merit std(P_hat) / P_hat from pooled per-draw weight moments.
/// nullopt while the estimate is zero or fewer than two draws are pooled.
std::optional<double> fom(const EstimatorState& state);

/// Monte Carlo figure of merit sqrt((1 - P) / (N P)).
std::optional<double> mc_fom(double pf, std::size_t n);

struct OnionConfig {
  double shell_width = 1.0;
  double max_radius = 10.0;
  std::size_t samples_per_shell = 0;  // 0 selects 10 * D
  std::size_t min_failures = 20;

  std::size_t shell_samples(int dim) const;
  void validate() const;
};

struct OnionResult {
  FailureSet failures;
  std::size_t evaluations = 0;
  double radius_reached = 0.0;
  double shell_width = 1.0;
  std::size_t per_shell = 0;

  /// ln of (draws per shell) * (uniform shell density at x): the onion's
  /// contribution to the draw-count-weighted generating density. -inf outside
  /// the explored radius.
  double log_generator_mass(const Vector& x) const;
};

/// Radius of a uniform draw in the D-dimensional annulus [r0, r1].
double annulus_radius(double r0, double r1, int dim, double u);

/// Draws uniformly from shells [j w, (j + 1) w] until `min_failures` failures
/// have been seen (or the maximum radius is reached). Throws
/// InitializationError when no failure was found at all. When
/// `reweight_by_density` is set, failures are weighted by p(x) / g(x) with g
/// the shell's uniform density.
OnionResult onion_init(const Testbench& bench, const OnionConfig& cfg, RandomStream& rng,
                       bool reweight_by_density = false);

/// Minimum-norm archived failure point; ties go to the earliest sample.
Vector mn_omsv(const FailureSet& fs);

/// Fitting weight given to archived failures.
///   Density:  p(x), every failure counted as if drawn uniformly.
///   Proposal: p(x) / g(x), g the density that generated the point.
///   Balance:  p(x) / g_bar(x), g_bar the draw-count-weighted mixture of every
///             generating density used so far (recomputed each iteration).
enum class ArchiveWeighting { Density, Proposal, Balance };

std::string to_string(ArchiveWeighting w);
std::optional<ArchiveWeighting> parse_archive_weighting(const std::string& name);

struct StepOptions {
  int threads = 1;
  bool reweight_archive = false;  // archive weight p/q instead of p
  bool pooled = true;             // false for burn-in iterations
};

struct StepResult {
  std::size_t failures = 0;
  double sum_weights = 0.0;
};

/// One importance-sampling iteration: K draws from `proposal`, weights
/// I(x) p(x) / q(x) accumulated into `state`, failures appended to the archive.
StepResult is_step(const Testbench& bench, const Proposal& proposal, std::size_t k, EstimatorState& state,
                   RandomStream& rng, const StepOptions& options = {});

struct IterationRecord {
  int iteration = 0;
  double pf = 0.0;
  double fom = 0.0;  // NaN when undefined
  std::size_t sims = 0;
  std::size_t components = 1;
  bool pooled = true;
};

struct RunReport {
  std::string method;
  std::string bench;
  double pf = 0.0;
  double fom = 0.0;  // NaN when undefined
  std::size_t n_simulations = 0;
  std::size_t n_failures = 0;
  std::size_t init_simulations = 0;
  std::size_t pooled_draws = 0;
  std::uint64_t seed = 0;
  double wall_time = 0.0;
  bool converged = false;
  std::string status;  // "converged", "max_iters", "max_draws", "aborted"
  std::string error;
  std::optional<Oracle> oracle;
  std::vector<IterationRecord> per_iteration;

  std::optional<double> relative_error() const;
};

struct BeyondConfig {
  FitConfig fit;
  std::size_t k = 500;
  OnionConfig onion;
  double fom_target = 0.1;
  /// A run converges once the FoM stays below target on this many consecutive
  /// iterations; a single crossing is biased toward underestimated FoMs.
  int confirm_iters = 3;
  int max_iters = 200;
  int burn_in = 0;
  /// Iterations are pooled into the estimate only once the proposal was fitted
  /// from an archive whose effective sample size reaches this value; negative
  /// selects D + 2, zero pools every iteration after `burn_in`.
  double warmup_ess = -1.0;
  ArchiveWeighting archive_weighting = ArchiveWeighting::Balance;
  std::uint64_t seed = 1;
  int threads = 1;

  void validate() const;
};

RunReport run_beyond(const Testbench& bench, const BeyondConfig& cfg);

/// Mean-shift IS with N(mn_omsv(archive), I), the shift recomputed each
/// iteration from the growing archive. `cfg.fit` is ignored.
RunReport run_mnis(const Testbench& bench, const BeyondConfig& cfg);

struct McConfig {
  std::size_t batch = 10'000;
  double fom_target = 0.1;
  int confirm_iters = 3;  // consecutive batches below target
  std::size_t max_draws = 10'000'000;
  std::uint64_t seed = 1;
  int threads = 1;

  void validate() const;
};

RunReport run_mc(const Testbench& bench, const McConfig& cfg);

}  // namespace vis
