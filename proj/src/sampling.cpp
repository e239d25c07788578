#include "visyield/sampling.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "parallel.hpp"
#include "visyield/errors.hpp"
#include "visyield/normal.hpp"

namespace vis {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int effective_threads(const Testbench& bench, int requested) {
  return bench.concurrency_safe() ? std::max(1, requested) : 1;
}

// ln volume of the D-dimensional annulus r0 <= |x| <= r1.
double log_annulus_volume(double r0, double r1, int dim) {
  const double d = static_cast<double>(dim);
  const double log_unit_ball = 0.5 * d * std::log(std::numbers::pi) - std::lgamma(0.5 * d + 1.0);
  return log_unit_ball + d * std::log(r1) + std::log1p(-std::pow(r0 / r1, d));
}

}  // namespace

void CompensatedSum::add(long double v) noexcept {
  const long double t = sum_ + v;
  if (std::fabs(sum_) >= std::fabs(v)) {
    compensation_ += (sum_ - t) + v;
  } else {
    compensation_ += (v - t) + sum_;
  }
  sum_ = t;
}

EstimatorState::EstimatorState(int dim, std::size_t k) : draws_per_iter(k), archive(dim) {}

double EstimatorState::estimate() const {
  if (pooled_draws == 0) return 0.0;
  return static_cast<double>(sum_weights.value() / static_cast<long double>(pooled_draws));
}

std::optional<double> fom(const EstimatorState& state) {
  const std::size_t n = state.pooled_draws;
  if (n < 2) return std::nullopt;
  const long double nl = static_cast<long double>(n);
  const long double p = state.sum_weights.value() / nl;
  if (!(p > 0.0L)) return std::nullopt;
  long double var = (state.sum_sq_weights.value() / nl - p * p) / (nl - 1.0L);
  if (var < 0.0L) var = 0.0L;
  return static_cast<double>(std::sqrt(var) / p);
}

std::optional<double> mc_fom(double pf, std::size_t n) {
  if (n == 0 || !(pf > 0.0)) return std::nullopt;
  return std::sqrt((1.0 - pf) / (static_cast<double>(n) * pf));
}

// -- Onion initialization ---------------------------------------------------------

std::size_t OnionConfig::shell_samples(int dim) const {
  return samples_per_shell ? samples_per_shell : static_cast<std::size_t>(10 * dim);
}

void OnionConfig::validate() const {
  if (!(shell_width > 0.0) || !(shell_width <= max_radius)) {
    throw ContractViolation("OnionConfig: need 0 < shell_width <= max_radius");
  }
}

double annulus_radius(double r0, double r1, int dim, double u) {
  const double d = static_cast<double>(dim);
  const double lo = std::pow(r0, d);
  return std::pow(lo + u * (std::pow(r1, d) - lo), 1.0 / d);
}

OnionResult onion_init(const Testbench& bench, const OnionConfig& cfg, RandomStream& rng, bool reweight_by_density) {
  cfg.validate();
  const int dim = bench.dim();
  const std::size_t per_shell = cfg.shell_samples(dim);
  OnionResult result{FailureSet(dim), 0, 0.0, cfg.shell_width, per_shell};

  for (int j = 0;; ++j) {
    const double r0 = j * cfg.shell_width;
    if (r0 >= cfg.max_radius) break;
    const double r1 = std::min(r0 + cfg.shell_width, cfg.max_radius);
    const double log_g = -log_annulus_volume(r0, r1, dim);

    Points shell;
    shell.reserve(per_shell);
    for (std::size_t i = 0; i < per_shell; ++i) {
      Vector dir = rng.normal_vector(dim);
      dir.normalize();
      shell.push_back(annulus_radius(r0, r1, dim, rng.uniform()) * dir);
    }
    std::vector<char> failed(shell.size());
    detail::parallel_for(shell.size(), 1, [&](std::size_t i) { failed[i] = bench.fails(shell[i]) ? 1 : 0; });
    result.evaluations += shell.size();
    result.radius_reached = r1;

    for (std::size_t i = 0; i < shell.size(); ++i) {
      if (!failed[i]) continue;
      const double log_p = log_density_standard_normal(shell[i]);
      result.failures.add(shell[i], reweight_by_density ? log_p - log_g : log_p);
    }
    if (result.failures.size() >= cfg.min_failures) break;
  }

  if (result.failures.empty()) {
    std::ostringstream msg;
    msg << "onion initialization found no failures up to radius " << result.radius_reached << " after "
        << result.evaluations << " evaluations";
    throw InitializationError(msg.str(), result.radius_reached);
  }
  return result;
}

double OnionResult::log_generator_mass(const Vector& x) const {
  const double r = x.norm();
  if (!(r < radius_reached) || per_shell == 0) return -std::numeric_limits<double>::infinity();
  const double j = std::floor(r / shell_width);
  const double r0 = j * shell_width;
  const double r1 = std::min(r0 + shell_width, radius_reached);
  return std::log(static_cast<double>(per_shell)) - log_annulus_volume(r0, r1, static_cast<int>(x.size()));
}

std::string to_string(ArchiveWeighting w) {
  switch (w) {
    case ArchiveWeighting::Density:
      return "density";
    case ArchiveWeighting::Proposal:
      return "proposal";
    case ArchiveWeighting::Balance:
      return "balance";
  }
  return "unknown";
}

std::optional<ArchiveWeighting> parse_archive_weighting(const std::string& name) {
  for (auto w : {ArchiveWeighting::Density, ArchiveWeighting::Proposal, ArchiveWeighting::Balance}) {
    if (to_string(w) == name) return w;
  }
  return std::nullopt;
}

Vector mn_omsv(const FailureSet& fs) {
  if (fs.empty()) throw ContractViolation("mn_omsv: failure set is empty");
  std::size_t best = 0;
  double best_norm = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const double n = fs[i].point.squaredNorm();
    if (n < best_norm) {
      best_norm = n;
      best = i;
    }
  }
  return fs[best].point;
}

// -- Importance-sampling step -------------------------------------------------------

StepResult is_step(const Testbench& bench, const Proposal& proposal, std::size_t k, EstimatorState& state,
                   RandomStream& rng, const StepOptions& options) {
  if (proposal_dim(proposal) != bench.dim()) throw ContractViolation("is_step: proposal and bench dimensions differ");
  if (k == 0) throw ContractViolation("is_step: K must be >= 1");

  const Points draws = sample(proposal, k, rng);
  std::vector<char> failed(k, 0);
  std::vector<double> log_p(k, 0.0);
  std::vector<double> log_q(k, 0.0);

  // Simulator calls honour the bench's concurrency declaration; densities are pure.
  detail::parallel_for(k, effective_threads(bench, options.threads),
                       [&](std::size_t i) { failed[i] = bench.fails(draws[i]) ? 1 : 0; });
  detail::parallel_for(k, std::max(1, options.threads), [&](std::size_t i) {
    if (!failed[i]) return;
    log_p[i] = log_density_standard_normal(draws[i]);
    log_q[i] = log_density(proposal, draws[i]);
  });

  StepResult result;
  for (std::size_t i = 0; i < k; ++i) {
    double w = 0.0;
    if (failed[i]) {
      w = std::exp(log_p[i] - log_q[i]);
      if (!std::isfinite(w)) {
        std::ostringstream msg;
        msg << "is_step: non-finite importance weight at iteration " << state.iteration + 1 << ", draw " << i
            << " (ln p = " << log_p[i] << ", ln q = " << log_q[i] << ")";
        throw EstimationError(msg.str());
      }
      ++result.failures;
      state.archive.add(draws[i], options.reweight_archive ? log_p[i] - log_q[i] : log_p[i]);
    }
    if (options.pooled) {
      state.sum_weights.add(w);
      state.sum_sq_weights.add(static_cast<long double>(w) * w);
    }
    result.sum_weights += w;
  }
  if (options.pooled) state.pooled_draws += k;
  state.total_draws += k;
  ++state.iteration;
  return result;
}

std::optional<double> RunReport::relative_error() const {
  if (!oracle || !(oracle->pf > 0.0)) return std::nullopt;
  return (pf - oracle->pf) / oracle->pf;
}

void BeyondConfig::validate() const {
  fit.validate();
  onion.validate();
  if (k == 0) throw ContractViolation("BeyondConfig: K must be >= 1");
  if (!(fom_target > 0.0 && fom_target < 1.0)) throw ContractViolation("BeyondConfig: fom_target must lie in (0, 1)");
  if (confirm_iters < 1) throw ContractViolation("BeyondConfig: confirm_iters must be >= 1");
  if (max_iters < 1) throw ContractViolation("BeyondConfig: max_iters must be >= 1");
  if (burn_in < 0 || burn_in >= max_iters) throw ContractViolation("BeyondConfig: burn_in must lie in [0, max_iters)");
  if (std::isnan(warmup_ess)) throw ContractViolation("BeyondConfig: warmup_ess must be a number");
}

void McConfig::validate() const {
  if (batch == 0) throw ContractViolation("McConfig: batch must be >= 1");
  if (!(fom_target > 0.0 && fom_target < 1.0)) throw ContractViolation("McConfig: fom_target must lie in (0, 1)");
  if (confirm_iters < 1) throw ContractViolation("McConfig: confirm_iters must be >= 1");
  if (max_draws < batch) throw ContractViolation("McConfig: max_draws must be >= batch");
}

// -- Iterative drivers ----------------------------------------------------------------

namespace {

enum class StreamTag : std::uint64_t { Onion = 0, Cluster = 1, Draw = 2, MonteCarlo = 3 };

std::uint64_t tag(StreamTag t) { return static_cast<std::uint64_t>(t); }

double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// Deterministic-mixture archive weights: each failure is weighted by
// p(x) / g_bar(x), g_bar = (sum over generators of draws * density) / draws.
class BalanceWeights {
 public:
  BalanceWeights(const OnionResult& onion, int threads)
      : onion_(onion), threads_(threads), total_draws_(static_cast<double>(onion.evaluations)) {}

  // Folds in K draws from `proposal` and brings every archive weight up to date.
  void update(FailureSet& archive, const Proposal& proposal, std::size_t k) {
    history_.push_back(proposal);
    const double log_k = std::log(static_cast<double>(k));
    total_draws_ += static_cast<double>(k);
    const std::size_t known = log_mass_.size();
    log_mass_.resize(archive.size(), 0.0);
    detail::parallel_for(archive.size(), threads_, [&](std::size_t i) {
      const Vector& x = archive[i].point;
      if (i < known) {
        log_mass_[i] = log_add_exp(log_mass_[i], log_k + log_density(proposal, x));
        return;
      }
      double acc = onion_.log_generator_mass(x);
      for (const auto& q : history_) acc = log_add_exp(acc, log_k + log_density(q, x));
      log_mass_[i] = acc;
    });
    reweight(archive);
  }

  void reweight(FailureSet& archive) {
    if (log_mass_.size() < archive.size()) {
      const std::size_t known = log_mass_.size();
      log_mass_.resize(archive.size());
      for (std::size_t i = known; i < archive.size(); ++i) log_mass_[i] = onion_.log_generator_mass(archive[i].point);
    }
    const double log_total = std::log(total_draws_);
    for (std::size_t i = 0; i < archive.size(); ++i) {
      archive.set_log_weight(i, log_density_standard_normal(archive[i].point) - (log_mass_[i] - log_total));
    }
  }

 private:
  const OnionResult& onion_;
  int threads_;
  double total_draws_;
  std::vector<double> log_mass_;
  std::vector<Proposal> history_;
};

template <typename ProposalFn>
RunReport run_adaptive(const Testbench& bench, const BeyondConfig& cfg, std::string method, ProposalFn&& make_proposal) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.method = std::move(method);
  report.bench = bench.name();
  report.seed = cfg.seed;
  report.oracle = bench.oracle();
  report.fom = kNaN;
  report.status = "max_iters";

  RandomStream onion_rng = RandomStream::substream(cfg.seed, {tag(StreamTag::Onion)});
  OnionResult init = onion_init(bench, cfg.onion, onion_rng, cfg.archive_weighting == ArchiveWeighting::Proposal);
  report.init_simulations = init.evaluations;

  EstimatorState state(bench.dim(), cfg.k);
  state.archive = init.failures;
  const bool balance = cfg.archive_weighting == ArchiveWeighting::Balance;
  BalanceWeights balance_weights(init, std::max(1, cfg.threads));
  if (balance) balance_weights.reweight(state.archive);
  const StepOptions base_options{cfg.threads, cfg.archive_weighting == ArchiveWeighting::Proposal, true};
  const double warmup_ess = cfg.warmup_ess < 0.0 ? bench.dim() + 2.0 : cfg.warmup_ess;
  bool pooling = false;
  int below = 0;

  try {
    for (int t = 1; t <= cfg.max_iters; ++t) {
      if (!pooling && t > cfg.burn_in) {
        pooling = warmup_ess <= 0.0 || effective_sample_size(normalized_weights(state.archive)) >= warmup_ess;
      }
      std::size_t components = 1;
      const Proposal proposal = make_proposal(state, t, components);
      RandomStream draw_rng = RandomStream::substream(cfg.seed, {tag(StreamTag::Draw), static_cast<std::uint64_t>(t)});
      StepOptions options = base_options;
      options.pooled = pooling;
      is_step(bench, proposal, cfg.k, state, draw_rng, options);
      if (balance) balance_weights.update(state.archive, proposal, cfg.k);

      const auto f = fom(state);
      const double pf = state.estimate();
      state.pf_history.push_back(pf);
      state.fom_history.push_back(f.value_or(kNaN));
      report.per_iteration.push_back(
          {t, pf, f.value_or(kNaN), init.evaluations + state.total_draws, components, pooling});
      below = f && *f < cfg.fom_target ? below + 1 : 0;
      if (below >= cfg.confirm_iters) {
        report.converged = true;
        report.status = "converged";
        break;
      }
    }
  } catch (const SimulationError& e) {
    report.status = "aborted";
    report.error = e.what();
  } catch (const FittingError& e) {
    report.status = "aborted";
    report.error = e.what();
  } catch (const EstimationError& e) {
    report.status = "aborted";
    report.error = e.what();
  }

  report.pf = state.estimate();
  report.fom = fom(state).value_or(kNaN);
  report.n_simulations = init.evaluations + state.total_draws;
  report.n_failures = state.archive.size();
  report.pooled_draws = state.pooled_draws;
  report.wall_time = seconds_since(start);
  return report;
}

}  // namespace

RunReport run_beyond(const Testbench& bench, const BeyondConfig& cfg) {
  return run_adaptive(bench, cfg, "beyond:" + to_string(cfg.fit.tier),
                      [&](const EstimatorState& state, int t, std::size_t& components) -> Proposal {
                        Clusterer clusterer = [&](const Points& pts) {
                          RandomStream rng =
                              RandomStream::substream(cfg.seed, {tag(StreamTag::Cluster), static_cast<std::uint64_t>(t)});
                          return select_clusters(pts, cfg.fit.clustering, rng);
                        };
                        Proposal q = fit_proposal(state.archive, cfg.fit, clusterer);
                        if (const auto* mix = std::get_if<MixtureProposal>(&q)) components = mix->size();
                        return q;
                      });
}

RunReport run_mnis(const Testbench& bench, const BeyondConfig& cfg) {
  return run_adaptive(bench, cfg, "mnis", [](const EstimatorState& state, int, std::size_t&) -> Proposal {
    return GaussianProposal::isotropic(mn_omsv(state.archive));
  });
}

RunReport run_mc(const Testbench& bench, const McConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.method = "mc";
  report.bench = bench.name();
  report.seed = cfg.seed;
  report.oracle = bench.oracle();
  report.fom = kNaN;
  report.status = "max_draws";

  const StandardNormalSpace space(bench.dim());
  std::size_t hits = 0;
  std::size_t drawn = 0;
  int below = 0;
  try {
    for (std::uint64_t b = 0; drawn < cfg.max_draws; ++b) {
      const std::size_t n = std::min(cfg.batch, cfg.max_draws - drawn);
      RandomStream rng = RandomStream::substream(cfg.seed, {tag(StreamTag::MonteCarlo), b});
      const Points draws = space.sample(n, rng);
      std::vector<char> failed(n, 0);
      detail::parallel_for(n, effective_threads(bench, cfg.threads),
                           [&](std::size_t i) { failed[i] = bench.fails(draws[i]) ? 1 : 0; });
      for (char f : failed) hits += static_cast<std::size_t>(f);
      drawn += n;

      const double pf = static_cast<double>(hits) / static_cast<double>(drawn);
      const auto f = mc_fom(pf, drawn);
      report.per_iteration.push_back({static_cast<int>(b + 1), pf, f.value_or(kNaN), drawn, 1});
      below = f && *f < cfg.fom_target ? below + 1 : 0;
      if (below >= cfg.confirm_iters) {
        report.converged = true;
        report.status = "converged";
        break;
      }
    }
  } catch (const SimulationError& e) {
    report.status = "aborted";
    report.error = e.what();
  }

  report.pf = drawn ? static_cast<double>(hits) / static_cast<double>(drawn) : 0.0;
  report.fom = mc_fom(report.pf, drawn).value_or(kNaN);
  report.n_simulations = drawn;
  report.n_failures = hits;
  report.wall_time = seconds_since(start);
  return report;
}

}  // namespace vis
