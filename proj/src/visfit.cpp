#include "visyield/visfit.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <limits>

#include "visyield/errors.hpp"
#include "visyield/normal.hpp"

namespace vis {

namespace {

constexpr double kVarianceFloor = 1e-8;

void require_nonempty(const FailureSet& fs, const char* who) {
  if (fs.empty()) throw ContractViolation(std::string(who) + ": failure set is empty");
}

void require_dim(const Vector& v, int dim, const char* who) {
  if (v.size() != dim) throw ContractViolation(std::string(who) + ": dimension mismatch");
}

}  // namespace

// -- FailureSet --------------------------------------------------------------

FailureSet::FailureSet(int dim) : dim_(dim) {
  if (dim < 1) throw ContractViolation("FailureSet: dimension must be >= 1");
}

bool FailureSet::add(const Vector& point) { return add(point, log_density_standard_normal(point)); }

bool FailureSet::add(const Vector& point, double log_weight) {
  if (point.size() != dim_) throw ContractViolation("FailureSet::add: dimension mismatch");
  const double key = point[0];
  const auto lo = by_first_coord_.lower_bound(key - kDuplicateDistance);
  const auto hi = by_first_coord_.upper_bound(key + kDuplicateDistance);
  for (auto it = lo; it != hi; ++it) {
    if ((samples_[it->second].point - point).norm() <= kDuplicateDistance) return false;
  }
  by_first_coord_.emplace(key, samples_.size());
  samples_.push_back({point, log_weight});
  return true;
}

Points FailureSet::points() const {
  Points out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.push_back(s.point);
  return out;
}

FailureSet FailureSet::subset(const std::vector<std::size_t>& indices) const {
  FailureSet out(dim_);
  for (auto i : indices) out.add(samples_.at(i).point, samples_.at(i).log_weight);
  return out;
}

// -- Tiers -------------------------------------------------------------------

std::string to_string(FitTier tier) {
  switch (tier) {
    case FitTier::MeanShiftOnly:
      return "MeanShiftOnly";
    case FitTier::FullCovariance:
      return "FullCovariance";
    case FitTier::ScalarSSS:
      return "ScalarSSS";
    case FitTier::SkewNormal:
      return "SkewNormal";
    case FitTier::MixtureSkewNormal:
      return "MixtureSkewNormal";
  }
  return "unknown";
}

std::optional<FitTier> parse_tier(const std::string& name) {
  for (auto t : {FitTier::MeanShiftOnly, FitTier::FullCovariance, FitTier::ScalarSSS, FitTier::SkewNormal,
                 FitTier::MixtureSkewNormal}) {
    if (to_string(t) == name) return t;
  }
  return std::nullopt;
}

void FitConfig::validate() const {
  if (!(alpha_step > 0.0)) throw ContractViolation("FitConfig: alpha_step must be positive");
  if (alpha_max_iters < 1) throw ContractViolation("FitConfig: alpha_max_iters must be >= 1");
  if (!(alpha_tol > 0.0)) throw ContractViolation("FitConfig: alpha_tol must be positive");
  if (clustering.k_max < 1) throw ContractViolation("FitConfig: k_max must be >= 1");
  if (std::isnan(shrinkage_pseudocount)) throw ContractViolation("FitConfig: shrinkage_pseudocount must be a number");
  if (!(eigenvalue_floor >= 0.0)) throw ContractViolation("FitConfig: eigenvalue_floor must be >= 0");
}

// -- Closed-form fits ----------------------------------------------------------

std::vector<double> normalized_weights(const FailureSet& fs) {
  require_nonempty(fs, "normalized_weights");
  double peak = -std::numeric_limits<double>::infinity();
  for (const auto& s : fs.samples()) peak = std::max(peak, s.log_weight);
  if (!std::isfinite(peak)) throw FittingError("normalized_weights: no finite log-weight");
  std::vector<double> w(fs.size());
  double total = 0.0;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    w[i] = std::exp(fs[i].log_weight - peak);
    total += w[i];
  }
  for (auto& v : w) v /= total;
  return w;
}

double effective_sample_size(const std::vector<double>& weights) {
  double sq = 0.0;
  for (double w : weights) sq += w * w;
  return sq > 0.0 ? 1.0 / sq : 0.0;
}

Vector true_omsv(const FailureSet& fs) {
  const auto w = normalized_weights(fs);
  Vector mu = Vector::Zero(fs.dim());
  for (std::size_t i = 0; i < fs.size(); ++i) mu += w[i] * fs[i].point;
  return mu;
}

Matrix weighted_scatter(const FailureSet& fs, const Vector& mu) {
  require_nonempty(fs, "weighted_scatter");
  require_dim(mu, fs.dim(), "weighted_scatter");
  const auto w = normalized_weights(fs);
  Matrix sigma = Matrix::Zero(fs.dim(), fs.dim());
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const Vector r = fs[i].point - mu;
    sigma.selfadjointView<Eigen::Lower>().rankUpdate(r, w[i]);
  }
  sigma.triangularView<Eigen::StrictlyUpper>() = sigma.transpose();
  return sigma;
}

Matrix full_sss_covariance(const FailureSet& fs, const Vector& mu) { return regularize_covariance(weighted_scatter(fs, mu)); }

double scalar_sss_variance(const FailureSet& fs, const Vector& mu) {
  require_nonempty(fs, "scalar_sss_variance");
  require_dim(mu, fs.dim(), "scalar_sss_variance");
  const auto w = normalized_weights(fs);
  double acc = 0.0;
  for (std::size_t i = 0; i < fs.size(); ++i) acc += w[i] * (fs[i].point - mu).squaredNorm();
  return std::max(acc / static_cast<double>(fs.dim()), kVarianceFloor);
}

Matrix guard_covariance(const Matrix& sigma, double n_eff, const FitConfig& cfg) {
  const double c = cfg.shrinkage_pseudocount < 0.0 ? 4.0 * static_cast<double>(sigma.rows()) : cfg.shrinkage_pseudocount;
  if (c == 0.0 && cfg.eigenvalue_floor == 0.0) return sigma;
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma);
  if (eig.info() != Eigen::Success) throw FittingError("guard_covariance: eigendecomposition failed");
  Vector l = eig.eigenvalues();
  for (Eigen::Index i = 0; i < l.size(); ++i) {
    const double shrunk = n_eff + c > 0.0 ? (n_eff * l[i] + c) / (n_eff + c) : l[i];
    l[i] = std::max(shrunk, cfg.eigenvalue_floor);
  }
  Matrix out = eig.eigenvectors() * l.asDiagonal() * eig.eigenvectors().transpose();
  out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
  return out;
}

// -- Skew shape ------------------------------------------------------------------

namespace {

// Pieces of J that do not depend on alpha, cached across ascent iterations.
struct AlphaProblem {
  std::vector<double> weights;
  std::vector<Vector> residuals;
  double gaussian_part = 0.0;  // sum_i w_i (ln 2 + ln phi(x_i; mu, Sigma))

  AlphaProblem(const FailureSet& fs, const Vector& mu, const Matrix& sigma) : weights(normalized_weights(fs)) {
    require_dim(mu, fs.dim(), "fit_alpha");
    const GaussianProposal base(mu, sigma);
    residuals.reserve(fs.size());
    for (std::size_t i = 0; i < fs.size(); ++i) {
      residuals.push_back(fs[i].point - mu);
      gaussian_part += weights[i] * (kLn2 + base.log_density(fs[i].point));
    }
  }

  double objective(const Vector& alpha) const {
    double acc = gaussian_part;
    for (std::size_t i = 0; i < residuals.size(); ++i) acc += weights[i] * std_normal_log_cdf(alpha.dot(residuals[i]));
    return acc;
  }

  Vector gradient(const Vector& alpha) const {
    Vector g = Vector::Zero(alpha.size());
    for (std::size_t i = 0; i < residuals.size(); ++i) {
      g += weights[i] * inverse_mills_ratio(alpha.dot(residuals[i])) * residuals[i];
    }
    return g;
  }
};

}  // namespace

double alpha_objective(const FailureSet& fs, const Vector& mu, const Matrix& sigma, const Vector& alpha) {
  require_dim(alpha, fs.dim(), "alpha_objective");
  return AlphaProblem(fs, mu, sigma).objective(alpha);
}

Vector alpha_gradient(const FailureSet& fs, const Vector& mu, const Matrix& sigma, const Vector& alpha) {
  require_dim(alpha, fs.dim(), "alpha_gradient");
  return AlphaProblem(fs, mu, sigma).gradient(alpha);
}

AlphaFit fit_alpha_detailed(const FailureSet& fs, const Vector& mu, const Matrix& sigma, const FitConfig& cfg) {
  cfg.validate();
  require_nonempty(fs, "fit_alpha");
  const AlphaProblem problem(fs, mu, sigma);

  AlphaFit fit;
  fit.alpha = Vector::Zero(fs.dim());
  fit.objective = problem.objective(fit.alpha);
  fit.objective_at_zero = fit.objective;
  if (!std::isfinite(fit.objective)) throw FittingError("fit_alpha: objective is not finite at alpha = 0");

  double step = cfg.alpha_step;
  Vector grad = problem.gradient(fit.alpha);
  for (int it = 0; it < cfg.alpha_max_iters; ++it) {
    fit.iterations = it + 1;
    if (grad.lpNorm<Eigen::Infinity>() < cfg.alpha_tol) {
      fit.converged = true;
      break;
    }
    const Vector trial = fit.alpha + step * grad;
    const double value = problem.objective(trial);
    if (std::isfinite(value) && value >= fit.objective) {
      fit.alpha = trial;
      fit.objective = value;
      grad = problem.gradient(fit.alpha);
    } else {
      step *= 0.5;
      if (step < 1e-12) break;
    }
  }
  return fit;
}

Vector fit_alpha(const FailureSet& fs, const Vector& mu, const Matrix& sigma, const FitConfig& cfg) {
  return fit_alpha_detailed(fs, mu, sigma, cfg).alpha;
}

// -- Proposal assembly -----------------------------------------------------------

namespace {

// Covariance for one cluster under the tier's model, with the small-cluster
// fallbacks: fewer than D + 2 samples -> sigma^2 I, fewer than 2 -> I.
Matrix cluster_covariance(const FailureSet& cluster, const Vector& mu, const FitConfig& cfg) {
  const int dim = cluster.dim();
  const double n = std::min(static_cast<double>(cluster.size()), effective_sample_size(normalized_weights(cluster)));
  if (cfg.tier == FitTier::MeanShiftOnly || n < 2.0) return Matrix::Identity(dim, dim);
  if (cfg.tier == FitTier::ScalarSSS || n < dim + 2.0) {
    return guard_covariance(scalar_sss_variance(cluster, mu) * Matrix::Identity(dim, dim), n, cfg);
  }
  return guard_covariance(full_sss_covariance(cluster, mu), n, cfg);
}

SkewNormalProposal fit_component(const FailureSet& cluster, const FitConfig& cfg) {
  const Vector mu = true_omsv(cluster);
  Matrix sigma = cluster_covariance(cluster, mu, cfg);
  GaussianProposal base(mu, sigma);
  const bool skewed = cfg.tier == FitTier::SkewNormal || cfg.tier == FitTier::MixtureSkewNormal;
  if (!skewed) return SkewNormalProposal(std::move(base));
  Vector alpha = fit_alpha(cluster, mu, base.covariance(), cfg);
  return SkewNormalProposal(std::move(base), std::move(alpha));
}

}  // namespace

MixtureProposal fit_mixture(const FailureSet& fs, const FitConfig& cfg, const Clusterer& clusterer) {
  cfg.validate();
  require_nonempty(fs, "fit_mixture");
  if (cfg.tier != FitTier::MixtureSkewNormal) return MixtureProposal(fit_component(fs, cfg));

  const ClusteringResult clusters = clusterer ? clusterer(fs.points()) : single_cluster(fs.points());
  const std::size_t m_count = clusters.num_clusters();
  std::vector<std::vector<std::size_t>> members(m_count);
  for (std::size_t i = 0; i < clusters.labels.size(); ++i) {
    members.at(static_cast<std::size_t>(clusters.labels[i])).push_back(i);
  }

  std::vector<SkewNormalProposal> components;
  std::vector<double> weights;
  for (const auto& idx : members) {
    if (idx.empty()) continue;
    components.push_back(fit_component(fs.subset(idx), cfg));
    weights.push_back(static_cast<double>(idx.size()));
  }
  double sum = 0.0;
  for (double w : weights) sum += w;
  for (auto& w : weights) w /= sum;
  return MixtureProposal(std::move(components), std::move(weights));
}

Proposal fit_proposal(const FailureSet& fs, const FitConfig& cfg, const Clusterer& clusterer) {
  switch (cfg.tier) {
    case FitTier::MeanShiftOnly:
    case FitTier::FullCovariance:
    case FitTier::ScalarSSS:
      return fit_component(fs, cfg).base();
    case FitTier::SkewNormal:
      return fit_component(fs, cfg);
    case FitTier::MixtureSkewNormal:
      break;
  }
  MixtureProposal mixture = fit_mixture(fs, cfg, clusterer);
  return mixture;
}

}  // namespace vis
