#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "visyield/clustering.hpp"
#include "visyield/distributions.hpp"

namespace vis {

/// A variation-space point known to fail, with the log of its fitting weight.
/// By default the weight is the process density p(x).
struct FailureSample {
  Vector point;
  double log_weight = 0.0;
};

/// Deduplicated collection of failure samples sharing one dimension.
class FailureSet {
 public:
  static constexpr double kDuplicateDistance = 1e-12;

  explicit FailureSet(int dim);

  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  const std::vector<FailureSample>& samples() const noexcept { return samples_; }
  const FailureSample& operator[](std::size_t i) const { return samples_[i]; }

  /// Adds a point weighted by ln p(x). Returns false if it duplicates an
  /// existing point within kDuplicateDistance.
  bool add(const Vector& point);
  bool add(const Vector& point, double log_weight);

  void set_log_weight(std::size_t i, double log_weight) { samples_.at(i).log_weight = log_weight; }

  Points points() const;
  FailureSet subset(const std::vector<std::size_t>& indices) const;

 private:
  int dim_;
  std::vector<FailureSample> samples_;
  std::multimap<double, std::size_t> by_first_coord_;
};

enum class FitTier { MeanShiftOnly, FullCovariance, ScalarSSS, SkewNormal, MixtureSkewNormal };

std::string to_string(FitTier tier);
std::optional<FitTier> parse_tier(const std::string& name);

struct FitConfig {
  FitTier tier = FitTier::MixtureSkewNormal;
  double alpha_step = 0.05;
  int alpha_max_iters = 500;
  double alpha_tol = 1e-6;
  /// Proposal-side covariance guard. Eigenvalues of a fitted scatter S with
  /// effective sample size n become max((n l + c) / (n + c), floor), shrinking
  /// toward the process covariance I with pseudo-count c (negative selects 4 D).
  /// Zero pseudo-count and floor reproduce the raw fit.
  double shrinkage_pseudocount = -1.0;
  double eigenvalue_floor = 0.5;
  ClusterConfig clustering;

  void validate() const;
};

/// Self-normalized weights exp(lw_i - max) / sum_j exp(lw_j - max).
std::vector<double> normalized_weights(const FailureSet& fs);

/// Kish effective sample size 1 / sum w_i^2 of the normalized weights.
double effective_sample_size(const std::vector<double>& weights);

/// Weighted mean of the failure points (optimal mean shift).
Vector true_omsv(const FailureSet& fs);

/// Weighted scatter about `mu`, before regularization.
Matrix weighted_scatter(const FailureSet& fs, const Vector& mu);

/// Weighted scatter about `mu`, regularized so the Cholesky factorization succeeds.
Matrix full_sss_covariance(const FailureSet& fs, const Vector& mu);

/// sum w_i |x_i - mu|^2 / D, floored at 1e-8.
double scalar_sss_variance(const FailureSet& fs, const Vector& mu);

/// Applies the FitConfig covariance guard to `sigma` fitted from `n_eff` samples.
Matrix guard_covariance(const Matrix& sigma, double n_eff, const FitConfig& cfg);

/// J(alpha) = sum_i w_i ln SN(x_i | mu, Sigma, alpha).
double alpha_objective(const FailureSet& fs, const Vector& mu, const Matrix& sigma, const Vector& alpha);
Vector alpha_gradient(const FailureSet& fs, const Vector& mu, const Matrix& sigma, const Vector& alpha);

struct AlphaFit {
  Vector alpha;
  double objective = 0.0;
  double objective_at_zero = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Monotone gradient ascent on J from alpha = 0, halving the step whenever a
/// trial step would decrease the objective. Returns the best iterate.
AlphaFit fit_alpha_detailed(const FailureSet& fs, const Vector& mu, const Matrix& sigma, const FitConfig& cfg);
Vector fit_alpha(const FailureSet& fs, const Vector& mu, const Matrix& sigma, const FitConfig& cfg = {});

using Clusterer = std::function<ClusteringResult(const Points&)>;

/// One skew-normal component per cluster (a single cluster unless the tier is
/// MixtureSkewNormal), weighted by cluster size.
MixtureProposal fit_mixture(const FailureSet& fs, const FitConfig& cfg, const Clusterer& clusterer);

/// Tier-specific proposal for the estimation loop: a plain Gaussian for the
/// Gaussian tiers, a skew normal or a mixture otherwise.
Proposal fit_proposal(const FailureSet& fs, const FitConfig& cfg, const Clusterer& clusterer);

}  // namespace vis
