#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "visyield/errors.hpp"
#include "visyield/normal.hpp"
#include "visyield/sampling.hpp"
#include "visyield/testbench.hpp"
#include "visyield/visfit.hpp"

using doctest::Approx;
using vis::FailureSet;
using vis::Matrix;
using vis::Vector;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

FailureSet set_of(std::initializer_list<Vector> pts) {
  FailureSet fs(static_cast<int>(pts.begin()->size()));
  for (const auto& p : pts) fs.add(p);
  return fs;
}

FailureSet blob(int dim, const Vector& center, double spread, std::size_t n, vis::RandomStream& rng) {
  FailureSet fs(dim);
  for (std::size_t i = 0; i < n; ++i) fs.add(center + spread * rng.normal_vector(dim));
  return fs;
}

vis::Clusterer clusterer_with(const vis::ClusterConfig& cfg, std::uint64_t seed) {
  return [cfg, seed](const vis::Points& pts) {
    vis::RandomStream rng(seed);
    return vis::select_clusters(pts, cfg, rng);
  };
}

// Independent weighted objective sum_i w_i ln N(x_i | mu, s2) for D = 1.
double weighted_gaussian_loglik(const FailureSet& fs, double mu, double s2) {
  double total = 0.0;
  for (const auto& s : fs.samples()) {
    const double w = std::exp(-0.5 * s.point[0] * s.point[0]);
    const double r = s.point[0] - mu;
    total += w * (-0.5 * std::log(2.0 * M_PI * s2) - 0.5 * r * r / s2);
  }
  return total;
}

}  // namespace

TEST_CASE("failure set deduplicates") {
  FailureSet fs(2);
  CHECK(fs.add(vec({1.0, 2.0})));
  CHECK_FALSE(fs.add(vec({1.0, 2.0 + 1e-14})));
  CHECK(fs.add(vec({1.0, 2.1})));
  CHECK(fs.size() == 2);
  CHECK_THROWS_AS(fs.add(vec({1.0})), vis::ContractViolation);
  CHECK(fs[0].log_weight == Approx(vis::log_density_standard_normal(vec({1.0, 2.0}))));
}

TEST_CASE("normalized weights") {
  const auto eq = vis::normalized_weights(set_of({vec({3.0, 0.0}), vec({0.0, -3.0})}));
  CHECK(eq[0] == Approx(0.5));
  CHECK(eq[1] == Approx(0.5));

  const auto w = vis::normalized_weights(set_of({vec({3.0}), vec({4.0})}));
  const double phi3 = 4.43184841193801e-3;
  const double phi4 = 1.33830225764885e-4;
  CHECK(w[0] == Approx(phi3 / (phi3 + phi4)).epsilon(1e-12));
  CHECK(w[0] == Approx(0.9707).epsilon(1e-4));
  CHECK(w[1] == Approx(0.0293).epsilon(1e-3));

  CHECK(vis::normalized_weights(set_of({vec({5.0})}))[0] == 1.0);
  CHECK_THROWS_AS(vis::normalized_weights(FailureSet(1)), vis::ContractViolation);
}

TEST_CASE("true OMSV") {
  CHECK(vis::true_omsv(set_of({vec({3.0, 0.0}), vec({-3.0, 0.0})})).norm() < 1e-15);
  CHECK(vis::true_omsv(set_of({vec({3.0}), vec({4.0})}))[0] == Approx(3.0293).epsilon(1e-4));
  const Vector x1 = vec({2.5, -1.0});
  const auto one = set_of({x1});
  CHECK(vis::true_omsv(one) == x1);
  CHECK(vis::mn_omsv(one) == x1);
  CHECK_THROWS_AS(vis::true_omsv(FailureSet(2)), vis::ContractViolation);
}

TEST_CASE("full SSS covariance") {
  const Vector x1 = vec({1.0, 2.0});
  const auto one = set_of({x1});
  CHECK(vis::weighted_scatter(one, x1).norm() == 0.0);
  const Matrix reg = vis::full_sss_covariance(one, x1);
  CHECK(reg.isDiagonal(1e-15));
  CHECK(reg(0, 0) > 0.0);
  CHECK(reg(0, 0) <= 1e-2);

  const auto pair = set_of({vec({3.0}), vec({4.0})});
  const Vector mu = vis::true_omsv(pair);
  CHECK(vis::full_sss_covariance(pair, mu)(0, 0) == Approx(0.02845).epsilon(1e-3));

  const auto sym = set_of({vec({2.0, 1.0}), vec({4.0, 1.0})});
  const Matrix s = vis::full_sss_covariance(sym, vec({3.0, 1.0}));
  CHECK(std::fabs(s(0, 1)) < 1e-12);
  CHECK(std::fabs(s(1, 0)) < 1e-12);
}

TEST_CASE("scalar SSS variance") {
  CHECK(vis::scalar_sss_variance(set_of({vec({3.0, 0.0}), vec({-3.0, 0.0})}), vec({0.0, 0.0})) == Approx(4.5));
  const Vector x1 = vec({1.0, 1.0});
  CHECK(vis::scalar_sss_variance(set_of({x1}), x1) == 1e-8);
  const auto pair = set_of({vec({3.0}), vec({4.0})});
  const Vector mu = vis::true_omsv(pair);
  CHECK(vis::scalar_sss_variance(pair, mu) == Approx(vis::weighted_scatter(pair, mu)(0, 0)).epsilon(1e-12));
  CHECK(vis::scalar_sss_variance(pair, mu) == Approx(0.02845).epsilon(1e-3));
}

TEST_CASE("alpha fit") {
  const Matrix one = Matrix::Identity(1, 1);
  const auto sym = set_of({vec({-1.0}), vec({1.0}), vec({-2.0}), vec({2.0})});
  CHECK(vis::fit_alpha(sym, vec({0.0}), one).norm() < 1e-12);

  const auto skew = set_of({vec({0.5}), vec({1.0}), vec({1.5}), vec({2.5})});
  const auto fit = vis::fit_alpha_detailed(skew, vec({0.0}), one, {});
  CHECK(fit.alpha[0] > 0.0);
  CHECK(vis::alpha_objective(skew, vec({0.0}), one, fit.alpha) >
        vis::alpha_objective(skew, vec({0.0}), one, vec({0.0})));

  // Centered at the weighted mean the gradient at zero vanishes.
  const Vector mu = vis::true_omsv(skew);
  CHECK(vis::alpha_gradient(skew, mu, one, vec({0.0})).norm() < 1e-12);
}

TEST_CASE("alpha gradient matches finite differences") {
  vis::RandomStream rng(31);
  const double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 1 + trial % 5;
    FailureSet fs(d);
    for (int i = 0; i < 12; ++i) fs.add(1.5 * rng.normal_vector(d));
    const Vector mu = 0.3 * rng.normal_vector(d);
    Matrix a = Matrix::Random(d, d);
    const Matrix sigma = a * a.transpose() + 0.5 * Matrix::Identity(d, d);
    const Vector alpha = rng.normal_vector(d);
    const Vector g = vis::alpha_gradient(fs, mu, sigma, alpha);
    Vector fd(d);
    for (int j = 0; j < d; ++j) {
      Vector ap = alpha;
      Vector am = alpha;
      ap[j] += h;
      am[j] -= h;
      fd[j] = (vis::alpha_objective(fs, mu, sigma, ap) - vis::alpha_objective(fs, mu, sigma, am)) / (2.0 * h);
    }
    REQUIRE((g - fd).norm() / std::max(1.0, fd.norm()) < 1e-5);
  }
}

TEST_CASE("true OMSV and full SSS maximize the weighted likelihood") {
  vis::RandomStream rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    FailureSet fs(1);
    const int n = 1 + trial % 5;
    for (int i = 0; i < n; ++i) fs.add(vec({2.0 + 2.0 * rng.uniform()}));
    const double mu = vis::true_omsv(fs)[0];

    double best_mu = -10.0;
    double best = -INFINITY;
    for (int i = 0; i <= 20000; ++i) {
      const double m = -10.0 + 1e-3 * i;
      const double v = weighted_gaussian_loglik(fs, m, 1.0);
      if (v > best) {
        best = v;
        best_mu = m;
      }
    }
    REQUIRE(std::fabs(best_mu - mu) < 2e-3);

    if (fs.size() < 2) continue;
    const double s2 = vis::full_sss_covariance(fs, vec({mu}))(0, 0);
    double best_s2 = 0.0;
    best = -INFINITY;
    for (int i = 1; i <= 25000; ++i) {
      const double s = 1e-3 * i;
      const double v = weighted_gaussian_loglik(fs, mu, s);
      if (v > best) {
        best = v;
        best_s2 = s;
      }
    }
    REQUIRE(std::fabs(best_s2 - s2) < 2e-3);
  }
}

TEST_CASE("fits are invariant to a common log-weight shift") {
  vis::RandomStream rng(21);
  FailureSet fs(3);
  for (int i = 0; i < 30; ++i) fs.add(vec({4.0, 0.0, 0.0}) + rng.normal_vector(3));
  FailureSet shifted = fs;
  for (std::size_t i = 0; i < shifted.size(); ++i) shifted.set_log_weight(i, fs[i].log_weight + 123.4);
  const Vector mu = vis::true_omsv(fs);
  CHECK((vis::true_omsv(shifted) - mu).norm() < 1e-12);
  CHECK((vis::full_sss_covariance(shifted, mu) - vis::full_sss_covariance(fs, mu)).norm() < 1e-12);
  CHECK(vis::scalar_sss_variance(shifted, mu) == Approx(vis::scalar_sss_variance(fs, mu)).epsilon(1e-12));
  const Matrix sigma = vis::full_sss_covariance(fs, mu);
  const Vector off = mu + vec({-0.4, 0.1, 0.0});
  CHECK((vis::fit_alpha(shifted, off, sigma) - vis::fit_alpha(fs, off, sigma)).norm() < 1e-9);
}

TEST_CASE("OMSV of a convex region lies inside it") {
  vis::OnionConfig onion;
  onion.min_failures = 40;
  vis::RandomStream rng(3);
  const auto lin = vis::linear_bench(vec({1.0, 1.0, 0.0}), 4.0);
  const auto fs = vis::onion_init(lin, onion, rng).failures;
  CHECK(lin.fails(vis::true_omsv(fs)));

  const auto sph = vis::sphere_bench(vec({3.5, 0.0}), 1.0, 0);
  const auto fs2 = vis::onion_init(sph, onion, rng).failures;
  CHECK(sph.fails(vis::true_omsv(fs2)));
}

TEST_CASE("mixture fit") {
  vis::RandomStream rng(44);
  vis::FitConfig cfg;

  Vector center = Vector::Zero(18);
  center[0] = 4.0;
  const auto tight = blob(18, center, 0.2, 200, rng);
  const auto m1 = vis::fit_mixture(tight, cfg, clusterer_with(cfg.clustering, 1));
  CHECK(m1.size() == 1);

  FailureSet two(2);
  for (int i = 0; i < 60; ++i) two.add(vec({5.0, 0.0}) + 0.3 * rng.normal_vector(2));
  for (int i = 0; i < 40; ++i) two.add(vec({-5.0, 0.0}) + 0.3 * rng.normal_vector(2));
  const auto m2 = vis::fit_mixture(two, cfg, clusterer_with(cfg.clustering, 2));
  REQUIRE(m2.size() == 2);
  const double w0 = m2.components()[0].location()[0] > 0 ? m2.weights()[0] : m2.weights()[1];
  CHECK(w0 == 0.6);
  CHECK(m2.weights()[0] + m2.weights()[1] == Approx(1.0).epsilon(1e-15));
  for (const auto& c : m2.components()) {
    Eigen::LLT<Matrix> llt(c.scale());
    CHECK(llt.info() == Eigen::Success);
  }

  vis::FitConfig ms = cfg;
  ms.tier = vis::FitTier::MeanShiftOnly;
  const auto m3 = vis::fit_mixture(two, ms, clusterer_with(cfg.clustering, 3));
  REQUIRE(m3.size() == 1);
  CHECK(m3.components()[0].scale().isIdentity(0.0));
  CHECK(m3.components()[0].shape().norm() == 0.0);
}

TEST_CASE("covariance guard") {
  vis::FitConfig cfg;
  const Matrix tiny = 0.01 * Matrix::Identity(3, 3);
  const Matrix guarded = vis::guard_covariance(tiny, 5.0, cfg);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(guarded);
  CHECK(eig.eigenvalues().minCoeff() >= 0.5 - 1e-12);

  vis::FitConfig raw = cfg;
  raw.shrinkage_pseudocount = 0.0;
  raw.eigenvalue_floor = 0.0;
  const Matrix s = (Matrix(2, 2) << 2.0, 0.3, 0.3, 0.7).finished();
  CHECK((vis::guard_covariance(s, 10.0, raw) - s).norm() < 1e-12);

  // Shrinkage pulls toward I with weight c / (n + c).
  vis::FitConfig shrink = raw;
  shrink.shrinkage_pseudocount = 10.0;
  const Matrix d = (Matrix(1, 1) << 3.0).finished();
  CHECK(vis::guard_covariance(d, 10.0, shrink)(0, 0) == Approx(2.0).epsilon(1e-12));

  vis::FitConfig bad = cfg;
  bad.eigenvalue_floor = -1.0;
  CHECK_THROWS_AS(bad.validate(), vis::ContractViolation);
}

TEST_CASE("tier names round-trip") {
  for (auto t : {vis::FitTier::MeanShiftOnly, vis::FitTier::FullCovariance, vis::FitTier::ScalarSSS,
                 vis::FitTier::SkewNormal, vis::FitTier::MixtureSkewNormal}) {
    CHECK(vis::parse_tier(vis::to_string(t)) == t);
  }
  CHECK_FALSE(vis::parse_tier("Bogus").has_value());
}
