#include "visyield/testbench.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "visyield/errors.hpp"
#include "visyield/normal.hpp"
#include "visyield/rng.hpp"

namespace vis {

Testbench::Testbench(std::string name, int dim, Indicator indicator, std::optional<Oracle> oracle,
                     bool concurrency_safe)
    : name_(std::move(name)),
      dim_(dim),
      indicator_(std::move(indicator)),
      oracle_(oracle),
      concurrency_safe_(concurrency_safe) {
  if (dim < 1) throw ContractViolation("Testbench: dimension must be >= 1");
  if (!indicator_) throw ContractViolation("Testbench: missing indicator");
}

bool Testbench::fails(const Vector& x) const {
  if (x.size() != dim_) {
    throw ContractViolation("Testbench " + name_ + ": expected dimension " + std::to_string(dim_) + ", got " +
                            std::to_string(x.size()));
  }
  return indicator_(x);
}

Testbench linear_bench(const Vector& a, double b) {
  const double norm = a.norm();
  if (a.size() < 1 || !(norm > 0.0)) throw ContractViolation("linear_bench: normal vector must be nonzero");
  std::ostringstream name;
  name << "linear(D=" << a.size() << ", b/|a|=" << b / norm << ")";
  Oracle oracle{std_normal_cdf(-b / norm), 0.0, true};
  Testbench bench(name.str(), static_cast<int>(a.size()), [a, b](const Vector& x) { return a.dot(x) >= b; }, oracle,
                  true);
  bench.set_linear_form({a, b});
  return bench;
}

Testbench axis_bench(int dim, int axis, double threshold) {
  if (axis < 0 || axis >= dim) throw ContractViolation("axis_bench: axis out of range");
  Vector a = Vector::Zero(dim);
  a[axis] = 1.0;
  return linear_bench(a, threshold);
}

Oracle monte_carlo_oracle(const Testbench& bench, std::size_t draws, std::uint64_t seed) {
  if (draws == 0) throw ContractViolation("monte_carlo_oracle: needs at least one draw");
  RandomStream rng(seed);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < draws; ++i) {
    if (bench.fails(rng.normal_vector(bench.dim()))) ++hits;
  }
  const double n = static_cast<double>(draws);
  const double pf = static_cast<double>(hits) / n;
  return {pf, std::sqrt(pf * (1.0 - pf) / n), false};
}

Testbench sphere_bench(const Vector& center, double radius, std::size_t oracle_draws, std::uint64_t oracle_seed) {
  if (center.size() < 1) throw ContractViolation("sphere_bench: empty center");
  if (!(radius > 0.0)) throw ContractViolation("sphere_bench: radius must be positive");
  std::ostringstream name;
  name << "sphere(D=" << center.size() << ", |c|=" << center.norm() << ", r=" << radius << ")";
  const double r2 = radius * radius;
  Testbench bench(name.str(), static_cast<int>(center.size()),
                  [center, r2](const Vector& x) { return (x - center).squaredNorm() <= r2; }, std::nullopt, true);
  if (oracle_draws == 0) return bench;
  const Oracle oracle = monte_carlo_oracle(bench, oracle_draws, oracle_seed);
  return Testbench(bench.name(), bench.dim(), [center, r2](const Vector& x) { return (x - center).squaredNorm() <= r2; },
                   oracle, true);
}

namespace {

constexpr double kGeomTol = 1e-12;
constexpr std::size_t kCompositeOracleDraws = 1'000'000;

struct Halfspace {
  Vector n;  // unit normal
  double d;  // signed distance b / |a|
};

Halfspace normalized(const LinearSpec& s) {
  const double norm = s.a.norm();
  return {s.a / norm, s.b / norm};
}

bool same(const Halfspace& x, const Halfspace& y) {
  return (x.n - y.n).norm() < kGeomTol && std::abs(x.d - y.d) < kGeomTol;
}

// Exact probability for composites of half-spaces that are identical,
// mutually orthogonal, or pairwise disjoint; nullopt otherwise.
std::optional<double> exact_composite(const std::vector<Testbench>& children, bool is_union) {
  std::vector<Halfspace> hs;
  for (const auto& c : children) {
    if (!c.linear_form()) return std::nullopt;
    const Halfspace h = normalized(*c.linear_form());
    if (std::none_of(hs.begin(), hs.end(), [&](const Halfspace& o) { return same(o, h); })) hs.push_back(h);
  }
  if (hs.size() == 1) return std_normal_cdf(-hs.front().d);

  bool orthogonal = true;
  bool disjoint = true;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    for (std::size_t j = i + 1; j < hs.size(); ++j) {
      const double cosine = hs[i].n.dot(hs[j].n);
      if (std::abs(cosine) > kGeomTol) orthogonal = false;
      // Opposite normals: {n.x >= d1} and {-n.x >= d2} are disjoint iff d1 + d2 >= 0.
      if (!(cosine < -1.0 + kGeomTol && hs[i].d + hs[j].d >= 0.0)) disjoint = false;
    }
  }
  if (orthogonal) {
    double all = 1.0;
    double none = 1.0;
    for (const auto& h : hs) {
      const double p = std_normal_cdf(-h.d);
      all *= p;
      none *= 1.0 - p;
    }
    return is_union ? 1.0 - none : all;
  }
  if (disjoint) {
    if (!is_union) return 0.0;
    double total = 0.0;
    for (const auto& h : hs) total += std_normal_cdf(-h.d);
    return total;
  }
  return std::nullopt;
}

Testbench composite(const std::vector<Testbench>& children, bool is_union) {
  if (children.empty()) throw ContractViolation("composite bench: needs at least one child");
  const int dim = children.front().dim();
  bool safe = true;
  std::ostringstream name;
  name << (is_union ? "union{" : "intersection{");
  for (std::size_t i = 0; i < children.size(); ++i) {
    if (children[i].dim() != dim) throw ContractViolation("composite bench: children differ in dimension");
    safe = safe && children[i].concurrency_safe();
    name << (i ? ", " : "") << children[i].name();
  }
  name << "}";
  auto indicator = [children, is_union](const Vector& x) {
    for (const auto& c : children) {
      if (c.fails(x) == is_union) return is_union;
    }
    return !is_union;
  };

  std::optional<Oracle> oracle;
  if (auto exact = exact_composite(children, is_union)) {
    oracle = Oracle{*exact, 0.0, true};
  } else if (safe && std::all_of(children.begin(), children.end(), [](const auto& c) { return c.oracle().has_value(); })) {
    Testbench probe(name.str(), dim, indicator, std::nullopt, true);
    oracle = monte_carlo_oracle(probe, kCompositeOracleDraws, 0xc0ffee);
  }
  return Testbench(name.str(), dim, indicator, oracle, safe);
}

}  // namespace

Testbench union_bench(const std::vector<Testbench>& children) { return composite(children, true); }
Testbench intersection_bench(const std::vector<Testbench>& children) { return composite(children, false); }

Testbench make_bench(const BenchSpec& spec) {
  switch (spec.kind) {
    case BenchSpec::Kind::Linear:
      if (spec.linear.a.size() != spec.dim) throw ContractViolation("linear bench: a must have length dim");
      return linear_bench(spec.linear.a, spec.linear.b);
    case BenchSpec::Kind::Sphere:
      if (spec.sphere.center.size() != spec.dim) throw ContractViolation("sphere bench: center must have length dim");
      return sphere_bench(spec.sphere.center, spec.sphere.radius);
    case BenchSpec::Kind::Union:
    case BenchSpec::Kind::Intersection: {
      if (spec.children.empty()) throw ContractViolation("composite bench: needs at least one child");
      std::vector<Testbench> children;
      for (const auto& c : spec.children) children.push_back(make_bench(c));
      return spec.kind == BenchSpec::Kind::Union ? union_bench(children) : intersection_bench(children);
    }
    case BenchSpec::Kind::External:
      return external_bench(spec.external);
  }
  throw ContractViolation("make_bench: unknown kind");
}

// -- Quadratic design family ---------------------------------------------------------

QuadraticFamily::QuadraticFamily(Vector a, double c0, Vector c1, Matrix c2, Vector lower, Vector upper)
    : a_(std::move(a)),
      c0_(c0),
      c1_(std::move(c1)),
      c2_(std::move(c2)),
      lower_(std::move(lower)),
      upper_(std::move(upper)) {
  if (a_.size() < 1 || !(a_.norm() > 0.0)) throw ContractViolation("QuadraticFamily: a must be nonzero");
  const auto k = c1_.size();
  if (k < 1) throw ContractViolation("QuadraticFamily: empty design vector");
  if (c2_.rows() != k || c2_.cols() != k) throw ContractViolation("QuadraticFamily: C2 shape mismatch");
  if (lower_.size() != k || upper_.size() != k) throw ContractViolation("QuadraticFamily: box shape mismatch");
  if ((lower_.array() > upper_.array()).any()) throw ContractViolation("QuadraticFamily: lower bound exceeds upper bound");
}

QuadraticFamily QuadraticFamily::with_optimum(Vector a, double c0, const Vector& z_star, Matrix c2, Vector lower,
                                              Vector upper) {
  Vector c1 = c2 * z_star;
  return QuadraticFamily(std::move(a), c0, std::move(c1), std::move(c2), std::move(lower), std::move(upper));
}

bool QuadraticFamily::in_box(const Vector& z) const {
  return z.size() == c1_.size() && (z.array() >= lower_.array()).all() && (z.array() <= upper_.array()).all();
}

Vector QuadraticFamily::project(const Vector& z) const { return z.cwiseMax(lower_).cwiseMin(upper_); }

double QuadraticFamily::threshold(const Vector& z) const { return c0_ + c1_.dot(z) - 0.5 * z.dot(c2_ * z); }

Vector QuadraticFamily::threshold_gradient(const Vector& z) const {
  return c1_ - 0.5 * (c2_ + c2_.transpose()) * z;
}

double QuadraticFamily::oracle_pf(const Vector& z) const { return std_normal_cdf(-threshold(z) / a_.norm()); }

Testbench QuadraticFamily::bench(const Vector& z) const {
  if (!in_box(z)) throw ContractViolation("QuadraticFamily::bench: design vector outside the box");
  return linear_bench(a_, threshold(z));
}

}  // namespace vis
