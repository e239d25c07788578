#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "visyield/distributions.hpp"

namespace vis {

/// Exact or brute-force failure probability. `std_error` is zero for exact values.
struct Oracle {
  double pf = 0.0;
  double std_error = 0.0;
  bool exact = true;
};

struct LinearSpec {
  Vector a;
  double b = 0.0;
};

struct SphereSpec {
  Vector center;
  double radius = 1.0;
};

struct ExternalSpec {
  std::vector<std::string> command;
  int dim = 1;
  double timeout_seconds = 30.0;
};

/// Serializable description of a testbench; `make_bench` turns it into one.
struct BenchSpec {
  enum class Kind { Linear, Sphere, Union, Intersection, External };
  Kind kind = Kind::Linear;
  int dim = 1;
  LinearSpec linear;
  SphereSpec sphere;
  std::vector<BenchSpec> children;
  ExternalSpec external;
};

/// Indicator over D-dimensional variation space.
class Testbench {
 public:
  using Indicator = std::function<bool(const Vector&)>;

  Testbench(std::string name, int dim, Indicator indicator, std::optional<Oracle> oracle, bool concurrency_safe);

  const std::string& name() const noexcept { return name_; }
  int dim() const noexcept { return dim_; }
  const std::optional<Oracle>& oracle() const noexcept { return oracle_; }
  bool concurrency_safe() const noexcept { return concurrency_safe_; }

  /// Evaluates I(x). Throws ContractViolation on a dimension mismatch and
  /// SimulationError when the underlying simulator fails.
  bool fails(const Vector& x) const;
  bool operator()(const Vector& x) const { return fails(x); }

  /// Linear description when the bench is a single half-space; used for exact
  /// composite oracles.
  const std::optional<LinearSpec>& linear_form() const noexcept { return linear_; }
  void set_linear_form(LinearSpec spec) { linear_ = std::move(spec); }

 private:
  std::string name_;
  int dim_;
  Indicator indicator_;
  std::optional<Oracle> oracle_;
  bool concurrency_safe_;
  std::optional<LinearSpec> linear_;
};

/// I(x) = [a^T x >= b], P_f = Phi(-b / |a|).
Testbench linear_bench(const Vector& a, double b);

/// `a = e_axis` in D dimensions.
Testbench axis_bench(int dim, int axis, double threshold);

/// I(x) = [|x - c| <= r]. The oracle is a brute-force Monte Carlo estimate with
/// `oracle_draws` standard-normal draws (0 skips the oracle).
Testbench sphere_bench(const Vector& center, double radius, std::size_t oracle_draws = 1'000'000,
                       std::uint64_t oracle_seed = 0x5eed);

Testbench union_bench(const std::vector<Testbench>& children);
Testbench intersection_bench(const std::vector<Testbench>& children);

/// Child process speaking the EVAL/PASS/FAIL line protocol. Serial only.
Testbench external_bench(const ExternalSpec& spec);

/// Brute-force Monte Carlo failure probability with its binomial standard error.
Oracle monte_carlo_oracle(const Testbench& bench, std::size_t draws, std::uint64_t seed);

/// Builds a bench from a spec. Throws ContractViolation on invalid specs.
Testbench make_bench(const BenchSpec& spec);

/// Design-parameterized linear family
///   I_z(x) = [a^T x >= b(z)],  b(z) = c0 + c1^T z - z^T C2 z / 2.
class QuadraticFamily {
 public:
  QuadraticFamily(Vector a, double c0, Vector c1, Matrix c2, Vector lower, Vector upper);

  /// Family with interior optimum z* in the box: c1 = C2 z*.
  static QuadraticFamily with_optimum(Vector a, double c0, const Vector& z_star, Matrix c2, Vector lower, Vector upper);

  int variation_dim() const noexcept { return static_cast<int>(a_.size()); }
  int design_dim() const noexcept { return static_cast<int>(c1_.size()); }
  const Vector& lower() const noexcept { return lower_; }
  const Vector& upper() const noexcept { return upper_; }
  const Vector& a() const noexcept { return a_; }
  double c0() const noexcept { return c0_; }
  const Vector& c1() const noexcept { return c1_; }
  const Matrix& c2() const noexcept { return c2_; }

  bool in_box(const Vector& z) const;
  Vector project(const Vector& z) const;

  double threshold(const Vector& z) const;
  Vector threshold_gradient(const Vector& z) const;
  double oracle_pf(const Vector& z) const;

  /// Throws ContractViolation when z is outside the box.
  Testbench bench(const Vector& z) const;

 private:
  Vector a_;
  double c0_;
  Vector c1_;
  Matrix c2_;
  Vector lower_;
  Vector upper_;
};

}  // namespace vis
