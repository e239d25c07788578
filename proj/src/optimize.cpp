#include "visyield/optimize.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "parallel.hpp"
#include "visyield/errors.hpp"

namespace vis {

namespace {

constexpr std::uint64_t kOptimizeStream = 4;

}  // namespace

std::string to_string(OmsvMode mode) { return mode == OmsvMode::MinNorm ? "MinNorm" : "TrueOMSV"; }

std::optional<OmsvMode> parse_omsv_mode(const std::string& name) {
  if (name == "MinNorm") return OmsvMode::MinNorm;
  if (name == "TrueOMSV") return OmsvMode::TrueOMSV;
  return std::nullopt;
}

void OptimizeConfig::validate(const QuadraticFamily& family) const {
  const auto k = static_cast<Eigen::Index>(family.design_dim());
  if (z0.size() != k) throw ContractViolation("OptimizeConfig: z0 has the wrong dimension");
  if (lower.size() != upper.size()) throw ContractViolation("OptimizeConfig: box bounds differ in size");
  if (lower.size() != 0) {
    if (lower.size() != k) throw ContractViolation("OptimizeConfig: box has the wrong dimension");
    if ((lower.array() > upper.array()).any()) throw ContractViolation("OptimizeConfig: box lower bound exceeds upper bound");
    if ((z0.array() < lower.array()).any() || (z0.array() > upper.array()).any()) {
      throw ContractViolation("OptimizeConfig: z0 lies outside the box");
    }
  }
  if (!family.in_box(z0)) throw ContractViolation("OptimizeConfig: z0 lies outside the family's box");
  if (!(step > 0.0)) throw ContractViolation("OptimizeConfig: step must be positive");
  if (!(fd_step > 0.0)) throw ContractViolation("OptimizeConfig: fd_step must be positive");
  if (!(grad_tol >= 0.0)) throw ContractViolation("OptimizeConfig: grad_tol must be >= 0");
  if (confirm_iters < 1) throw ContractViolation("OptimizeConfig: confirm_iters must be >= 1");
  if (max_outer_iters < 0) throw ContractViolation("OptimizeConfig: max_outer_iters must be >= 0");
  if (failures_per_eval < 1) throw ContractViolation("OptimizeConfig: failures_per_eval must be >= 1");
  onion.validate();
}

OmsvEvaluation omsv_of_design(const QuadraticFamily& family, const Vector& z, OmsvMode mode, const OnionConfig& onion,
                              RandomStream rng) {
  const Testbench bench = family.bench(z);
  OmsvEvaluation out;
  try {
    const OnionResult init = onion_init(bench, onion, rng);
    out.sims = init.evaluations;
    out.mu = mode == OmsvMode::MinNorm ? mn_omsv(init.failures) : true_omsv(init.failures);
    out.norm = out.mu.norm();
  } catch (const InitializationError&) {
    // Every shell was evaluated without a failure.
    const auto shells = static_cast<std::size_t>(std::ceil(onion.max_radius / onion.shell_width - 1e-12));
    out.sims = shells * onion.shell_samples(bench.dim());
    out.mu = Vector::Zero(bench.dim());
    out.norm = onion.max_radius;
    out.sentinel = true;
  }
  return out;
}

std::optional<std::size_t> OptimizeTrace::sims_to_reach(double target_pf) const {
  for (const auto& s : steps) {
    if (s.oracle_pf <= target_pf) return s.sims;
  }
  return std::nullopt;
}

OptimizeTrace run_variational_asais(const QuadraticFamily& family, const OptimizeConfig& cfg) {
  cfg.validate(family);
  const auto start = std::chrono::steady_clock::now();
  const auto k = static_cast<std::size_t>(family.design_dim());

  Vector lo = family.lower();
  Vector hi = family.upper();
  if (cfg.lower.size() != 0) {
    lo = lo.cwiseMax(cfg.lower);
    hi = hi.cwiseMin(cfg.upper);
  }
  const auto project = [&](const Vector& z) -> Vector { return z.cwiseMax(lo).cwiseMin(hi); };

  OnionConfig onion = cfg.onion;
  onion.min_failures = cfg.failures_per_eval;

  OptimizeTrace trace;
  trace.mode = to_string(cfg.omsv_mode);
  trace.seed = cfg.seed;
  trace.status = "max_iters";

  Vector z = cfg.z0;
  int flat = 0;
  try {
    for (int it = 0;; ++it) {
      const RandomStream rng = RandomStream::substream(cfg.seed, {kOptimizeStream, static_cast<std::uint64_t>(it)});
      const OmsvEvaluation centre = omsv_of_design(family, z, cfg.omsv_mode, onion, rng);
      trace.total_sims += centre.sims;

      OptimizeStep step;
      step.iteration = it;
      step.z = z;
      step.objective = centre.norm * centre.norm;
      step.oracle_pf = family.oracle_pf(z);
      step.sentinel = centre.sentinel;
      step.grad_norm = std::numeric_limits<double>::quiet_NaN();

      if (it == cfg.max_outer_iters) {
        step.sims = trace.total_sims;
        trace.steps.push_back(std::move(step));
        break;
      }

      // Central differences; probes at the box edge fall back to one-sided.
      std::vector<OmsvEvaluation> probes(2 * k);
      std::vector<Vector> points(2 * k);
      for (std::size_t j = 0; j < k; ++j) {
        Vector up = z;
        Vector down = z;
        up[static_cast<Eigen::Index>(j)] += cfg.fd_step;
        down[static_cast<Eigen::Index>(j)] -= cfg.fd_step;
        points[2 * j] = project(up);
        points[2 * j + 1] = project(down);
      }
      detail::parallel_for(2 * k, cfg.threads, [&](std::size_t i) {
        probes[i] = omsv_of_design(family, points[i], cfg.omsv_mode, onion, rng);
      });
      Vector grad(static_cast<Eigen::Index>(k));
      for (std::size_t j = 0; j < k; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const double h = points[2 * j][jj] - points[2 * j + 1][jj];
        const double f_up = probes[2 * j].norm * probes[2 * j].norm;
        const double f_down = probes[2 * j + 1].norm * probes[2 * j + 1].norm;
        grad[jj] = h > 0.0 ? (f_up - f_down) / h : 0.0;
        trace.total_sims += probes[2 * j].sims + probes[2 * j + 1].sims;
      }
      step.grad_norm = grad.norm();
      step.sims = trace.total_sims;
      trace.steps.push_back(std::move(step));

      flat = grad.norm() < cfg.grad_tol ? flat + 1 : 0;
      if (flat >= cfg.confirm_iters) {
        trace.converged = true;
        trace.status = "converged";
        break;
      }
      z = project(z + cfg.step * grad);
    }
  } catch (const SimulationError& e) {
    trace.status = "aborted";
    trace.error = e.what();
  }
  trace.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return trace;
}

}  // namespace vis
