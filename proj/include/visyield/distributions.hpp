#pragma once

#include <cstddef>
#include <variant>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "visyield/rng.hpp"

namespace vis {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Points = std::vector<Vector>;

/// The process-variation distribution p(x) = N(0, I_D).
class StandardNormalSpace {
 public:
  explicit StandardNormalSpace(int dim);

  int dim() const noexcept { return dim_; }
  double log_density(const Vector& x) const;
  Points sample(std::size_t n, RandomStream& rng) const;

 private:
  int dim_;
};

/// -(D/2) ln(2 pi) - |x|^2 / 2 for a vector of any length D >= 1.
double log_density_standard_normal(const Vector& x);

/// Covariance regularization applied after fitting: Sigma + eps * (tr(Sigma)/D) * I,
/// starting at eps = 1e-6 and escalating by 10x up to 1e-2 until the Cholesky
/// factorization succeeds. Throws FittingError if it never does.
Matrix regularize_covariance(const Matrix& sigma);

class GaussianProposal {
 public:
  /// Throws ContractViolation on shape/symmetry problems and FittingError when
  /// the covariance is not positive definite.
  GaussianProposal(Vector mean, Matrix covariance);

  static GaussianProposal standard(int dim);
  static GaussianProposal isotropic(Vector mean, double variance = 1.0);

  int dim() const noexcept { return static_cast<int>(mean_.size()); }
  const Vector& mean() const noexcept { return mean_; }
  const Matrix& covariance() const noexcept { return covariance_; }
  const Matrix& cholesky_factor() const noexcept { return lower_; }

  double log_density(const Vector& x) const;
  Vector draw(RandomStream& rng) const;
  Points sample(std::size_t n, RandomStream& rng) const;

  /// L^{-1} (x - mean), the whitened residual.
  Vector whiten(const Vector& x) const;
  double log_normalizer() const noexcept { return log_norm_; }

 private:
  Vector mean_;
  Matrix covariance_;
  Matrix lower_;
  double log_norm_ = 0.0;
};

/// Multivariate skew normal in the centered form
///   SN(x | mu, Sigma, alpha) = 2 phi(x; mu, Sigma) Phi(alpha^T (x - mu)).
class SkewNormalProposal {
 public:
  SkewNormalProposal(Vector location, Matrix scale, Vector shape);
  explicit SkewNormalProposal(GaussianProposal base);
  SkewNormalProposal(GaussianProposal base, Vector shape);

  int dim() const noexcept { return base_.dim(); }
  const Vector& location() const noexcept { return base_.mean(); }
  const Matrix& scale() const noexcept { return base_.covariance(); }
  const Vector& shape() const noexcept { return shape_; }
  const GaussianProposal& base() const noexcept { return base_; }

  double log_density(const Vector& x) const;
  Vector draw(RandomStream& rng) const;
  Points sample(std::size_t n, RandomStream& rng) const;

 private:
  GaussianProposal base_;
  Vector shape_;
};

class MixtureProposal {
 public:
  /// Weights must be nonnegative and sum to 1 within 1e-12.
  MixtureProposal(std::vector<SkewNormalProposal> components, std::vector<double> weights);
  explicit MixtureProposal(SkewNormalProposal single);

  int dim() const noexcept { return components_.front().dim(); }
  std::size_t size() const noexcept { return components_.size(); }
  const std::vector<SkewNormalProposal>& components() const noexcept { return components_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  double log_density(const Vector& x) const;
  /// Index of the component chosen for a single uniform draw.
  std::size_t pick_component(double u) const;
  Vector draw(RandomStream& rng) const;
  Points sample(std::size_t n, RandomStream& rng) const;

 private:
  std::vector<SkewNormalProposal> components_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
  std::vector<double> log_weights_;
};

using Proposal = std::variant<GaussianProposal, SkewNormalProposal, MixtureProposal>;

int proposal_dim(const Proposal& q);
double log_density(const Proposal& q, const Vector& x);
Points sample(const Proposal& q, std::size_t n, RandomStream& rng);
/// Short human-readable description ("gaussian", "skew-normal", "mixture[3]").
const char* proposal_kind(const Proposal& q);

}  // namespace vis
