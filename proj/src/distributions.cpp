#include "visyield/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "visyield/errors.hpp"
#include "visyield/normal.hpp"

namespace vis {

namespace {

constexpr double kSymmetryTol = 1e-10;
constexpr double kWeightSumTol = 1e-12;

void require_dim(const Vector& x, Eigen::Index dim, const char* who) {
  if (x.size() != dim) {
    throw ContractViolation(std::string(who) + ": expected dimension " + std::to_string(dim) + ", got " +
                            std::to_string(x.size()));
  }
}

bool try_cholesky(const Matrix& sigma, Matrix& lower) {
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) return false;
  lower = llt.matrixL();
  for (Eigen::Index i = 0; i < lower.rows(); ++i) {
    const double d = lower(i, i);
    if (!(d > 0.0) || !std::isfinite(d)) return false;
  }
  return true;
}

}  // namespace

StandardNormalSpace::StandardNormalSpace(int dim) : dim_(dim) {
  if (dim < 1) throw ContractViolation("StandardNormalSpace: dimension must be >= 1");
}

double StandardNormalSpace::log_density(const Vector& x) const {
  require_dim(x, dim_, "StandardNormalSpace::log_density");
  return log_density_standard_normal(x);
}

Points StandardNormalSpace::sample(std::size_t n, RandomStream& rng) const {
  Points out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(rng.normal_vector(dim_));
  return out;
}

double log_density_standard_normal(const Vector& x) {
  if (x.size() < 1) throw ContractViolation("log_density_standard_normal: empty vector");
  return -static_cast<double>(x.size()) * kLogSqrt2Pi - 0.5 * x.squaredNorm();
}

Matrix regularize_covariance(const Matrix& sigma) {
  const auto dim = sigma.rows();
  if (dim == 0 || sigma.cols() != dim) throw ContractViolation("regularize_covariance: matrix must be square");
  if (!sigma.allFinite()) throw FittingError("regularize_covariance: covariance has non-finite entries");
  double scale = sigma.trace() / static_cast<double>(dim);
  if (!(scale > 0.0)) scale = 1.0;
  Matrix lower;
  for (double eps = 1e-6; eps <= 1e-2 * (1.0 + 1e-9); eps *= 10.0) {
    Matrix candidate = sigma;
    candidate.diagonal().array() += eps * scale;
    if (try_cholesky(candidate, lower)) return candidate;
  }
  throw FittingError("regularize_covariance: covariance is not positive definite even after 1e-2 ridge");
}

// -- Gaussian ----------------------------------------------------------------

GaussianProposal::GaussianProposal(Vector mean, Matrix covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
  const auto dim = mean_.size();
  if (dim < 1) throw ContractViolation("GaussianProposal: empty mean");
  if (covariance_.rows() != dim || covariance_.cols() != dim) {
    throw ContractViolation("GaussianProposal: covariance shape does not match mean");
  }
  if (!mean_.allFinite()) throw FittingError("GaussianProposal: non-finite mean");
  if ((covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol) {
    throw ContractViolation("GaussianProposal: covariance is not symmetric");
  }
  if (!try_cholesky(covariance_, lower_)) {
    throw FittingError("GaussianProposal: covariance is not positive definite");
  }
  log_norm_ = -static_cast<double>(dim) * kLogSqrt2Pi - lower_.diagonal().array().log().sum();
}

GaussianProposal GaussianProposal::standard(int dim) {
  return GaussianProposal(Vector::Zero(dim), Matrix::Identity(dim, dim));
}

GaussianProposal GaussianProposal::isotropic(Vector mean, double variance) {
  const auto dim = mean.size();
  return GaussianProposal(std::move(mean), variance * Matrix::Identity(dim, dim));
}

Vector GaussianProposal::whiten(const Vector& x) const {
  require_dim(x, mean_.size(), "GaussianProposal");
  return lower_.triangularView<Eigen::Lower>().solve(x - mean_);
}

double GaussianProposal::log_density(const Vector& x) const { return log_norm_ - 0.5 * whiten(x).squaredNorm(); }

Vector GaussianProposal::draw(RandomStream& rng) const {
  const Vector z = rng.normal_vector(mean_.size());
  return mean_ + lower_.triangularView<Eigen::Lower>() * z;
}

Points GaussianProposal::sample(std::size_t n, RandomStream& rng) const {
  Points out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(draw(rng));
  return out;
}

// -- Skew normal -------------------------------------------------------------

SkewNormalProposal::SkewNormalProposal(Vector location, Matrix scale, Vector shape)
    : SkewNormalProposal(GaussianProposal(std::move(location), std::move(scale)), std::move(shape)) {}

SkewNormalProposal::SkewNormalProposal(GaussianProposal base)
    : base_(std::move(base)), shape_(Vector::Zero(base_.dim())) {}

SkewNormalProposal::SkewNormalProposal(GaussianProposal base, Vector shape)
    : base_(std::move(base)), shape_(std::move(shape)) {
  require_dim(shape_, base_.dim(), "SkewNormalProposal shape");
  if (!shape_.allFinite()) throw FittingError("SkewNormalProposal: non-finite shape");
}

double SkewNormalProposal::log_density(const Vector& x) const {
  const double gaussian = base_.log_density(x);
  const double s = shape_.dot(x - base_.mean());
  return kLn2 + gaussian + std_normal_log_cdf(s);
}

Vector SkewNormalProposal::draw(RandomStream& rng) const {
  // x = mu + z if u < alpha^T z else mu - z, z ~ N(0, Sigma), u ~ N(0, 1).
  const Vector z = base_.cholesky_factor().triangularView<Eigen::Lower>() * rng.normal_vector(dim());
  const double u = rng.normal();
  return u < shape_.dot(z) ? Vector(base_.mean() + z) : Vector(base_.mean() - z);
}

Points SkewNormalProposal::sample(std::size_t n, RandomStream& rng) const {
  Points out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(draw(rng));
  return out;
}

// -- Mixture -----------------------------------------------------------------

MixtureProposal::MixtureProposal(std::vector<SkewNormalProposal> components, std::vector<double> weights)
    : components_(std::move(components)), weights_(std::move(weights)) {
  if (components_.empty()) throw ContractViolation("MixtureProposal: needs at least one component");
  if (weights_.size() != components_.size()) {
    throw ContractViolation("MixtureProposal: weight count does not match component count");
  }
  const int dim = components_.front().dim();
  double total = 0.0;
  for (std::size_t m = 0; m < weights_.size(); ++m) {
    if (components_[m].dim() != dim) throw ContractViolation("MixtureProposal: components differ in dimension");
    if (!(weights_[m] >= 0.0)) throw ContractViolation("MixtureProposal: negative weight");
    total += weights_[m];
  }
  if (std::abs(total - 1.0) > kWeightSumTol) {
    throw ContractViolation("MixtureProposal: weights sum to " + std::to_string(total) + ", expected 1");
  }
  cumulative_.resize(weights_.size());
  log_weights_.resize(weights_.size());
  double running = 0.0;
  for (std::size_t m = 0; m < weights_.size(); ++m) {
    running += weights_[m];
    cumulative_[m] = running;
    log_weights_[m] = std::log(weights_[m]);
  }
  cumulative_.back() = 1.0;
}

MixtureProposal::MixtureProposal(SkewNormalProposal single)
    : MixtureProposal(std::vector<SkewNormalProposal>{std::move(single)}, std::vector<double>{1.0}) {}

double MixtureProposal::log_density(const Vector& x) const {
  if (components_.size() == 1) return components_.front().log_density(x);
  std::vector<double> terms(components_.size());
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < components_.size(); ++m) {
    terms[m] = weights_[m] > 0.0 ? log_weights_[m] + components_[m].log_density(x)
                                 : -std::numeric_limits<double>::infinity();
    peak = std::max(peak, terms[m]);
  }
  if (!std::isfinite(peak)) return peak;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - peak);
  return peak + std::log(acc);
}

std::size_t MixtureProposal::pick_component(double u) const {
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), components_.size() - 1);
}

Vector MixtureProposal::draw(RandomStream& rng) const {
  const std::size_t m = pick_component(rng.uniform());
  return components_[m].draw(rng);
}

Points MixtureProposal::sample(std::size_t n, RandomStream& rng) const {
  Points out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(draw(rng));
  return out;
}

// -- Variant helpers ---------------------------------------------------------

int proposal_dim(const Proposal& q) {
  return std::visit([](const auto& p) { return p.dim(); }, q);
}

double log_density(const Proposal& q, const Vector& x) {
  return std::visit([&](const auto& p) { return p.log_density(x); }, q);
}

Points sample(const Proposal& q, std::size_t n, RandomStream& rng) {
  return std::visit([&](const auto& p) { return p.sample(n, rng); }, q);
}

const char* proposal_kind(const Proposal& q) {
  switch (q.index()) {
    case 0:
      return "gaussian";
    case 1:
      return "skew-normal";
    default:
      return "mixture";
  }
}

}  // namespace vis
