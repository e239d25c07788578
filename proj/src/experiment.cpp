#include "visyield/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <ostream>

#include "visyield/errors.hpp"
#include "visyield/report.hpp"

namespace vis {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Context {
  std::vector<std::uint64_t> seeds;
  fs::path out;
  int threads = 1;
  std::ostream* log = nullptr;

  void note(const std::string& line) const {
    if (log) *log << line << "\n" << std::flush;
  }
};

Context make_context(const ExperimentConfig& cfg, const RunOptions& options) {
  Context ctx;
  ctx.seeds = options.seeds ? *options.seeds : cfg.seeds;
  std::sort(ctx.seeds.begin(), ctx.seeds.end());
  ctx.out = options.output_dir ? *options.output_dir : cfg.output_dir;
  ctx.threads = resolve_threads(options.threads, cfg.threads);
  ctx.log = options.quiet ? nullptr : options.log;
  fs::create_directories(ctx.out);
  return ctx;
}

Testbench build_bench(const ExperimentConfig& cfg) {
  if (!cfg.bench) throw ConfigError("bench", "missing required field");
  try {
    return make_bench(*cfg.bench);
  } catch (const ContractViolation& e) {
    throw ConfigError("bench", e.what());
  } catch (const SimulationError& e) {
    throw ConfigError("bench", std::string("cannot start bench: ") + e.what());
  }
}

std::string directory_name(const std::string& label) {
  std::string out = label;
  for (auto& c : out) {
    if (c == ':') c = '_';
  }
  return out;
}

json oracle_json(const Testbench& bench) {
  if (!bench.oracle()) return nullptr;
  const auto& o = *bench.oracle();
  return {{"pf", o.pf}, {"std_error", o.std_error}, {"exact", o.exact}};
}

std::string run_line(const RunReport& r) {
  std::string line = r.method + " seed " + std::to_string(r.seed) + ": pf " + format_number(r.pf) + " fom " +
                     format_number(r.fom) + " sims " + std::to_string(r.n_simulations) + " " + r.status;
  if (!r.error.empty()) line += " (" + r.error + ")";
  return line;
}

// Writes run_<seed>.json and traj_<seed>.csv for every run.
void write_runs(const fs::path& dir, const std::vector<RunReport>& runs) {
  fs::create_directories(dir);
  for (const auto& r : runs) {
    const std::string seed = std::to_string(r.seed);
    write_file((dir / ("run_" + seed + ".json")).string(), dump(to_json(r)));
    write_file((dir / ("traj_" + seed + ".csv")).string(), trajectory_csv(r));
  }
}

json method_summary(const std::string& label, const std::vector<RunReport>& runs) {
  std::vector<double> pf;
  std::vector<double> sims;
  std::size_t converged = 0;
  json per_run = json::array();
  for (const auto& r : runs) {
    pf.push_back(r.pf);
    sims.push_back(static_cast<double>(r.n_simulations));
    if (r.converged) ++converged;
    json row{{"seed", r.seed},
             {"pf", r.pf},
             {"fom", std::isfinite(r.fom) ? json(r.fom) : json(nullptr)},
             {"n_simulations", r.n_simulations},
             {"converged", r.converged},
             {"status", r.status}};
    if (const auto e = r.relative_error()) row["relative_error"] = *e;
    per_run.push_back(std::move(row));
  }
  const Aggregate apf = aggregate(pf);
  const Aggregate asims = aggregate(sims);
  return {{"method", label},
          {"runs", std::move(per_run)},
          {"aggregate",
           {{"pf_mean", apf.mean},
            {"pf_std", apf.std},
            {"n_simulations_mean", asims.mean},
            {"n_simulations_std", asims.std},
            {"converged_runs", converged},
            {"total_runs", runs.size()}}}};
}

std::string seed_table(const std::vector<RunReport>& runs) {
  std::string out = "seed,pf,fom,sims,relative_error,converged\n";
  for (const auto& r : runs) {
    const auto e = r.relative_error();
    out += std::to_string(r.seed) + "," + format_number(r.pf) + "," + format_number(r.fom) + "," +
           std::to_string(r.n_simulations) + "," + (e ? format_number(*e) : std::string()) + "," +
           (r.converged ? "1" : "0") + "\n";
  }
  return out;
}

bool all_converged(const std::vector<RunReport>& runs) {
  for (const auto& r : runs) {
    if (!r.converged) return false;
  }
  return true;
}

std::vector<RunReport> run_seeds(const Testbench& bench, const MethodSpec& method, const ExperimentConfig& cfg,
                                 const Context& ctx) {
  std::vector<RunReport> runs;
  for (auto seed : ctx.seeds) {
    try {
      runs.push_back(run_method(bench, method, cfg, seed, ctx.threads));
    } catch (const InitializationError& e) {
      RunReport r;
      r.method = method.label();
      r.bench = bench.name();
      r.seed = seed;
      r.fom = std::numeric_limits<double>::quiet_NaN();
      r.status = "init_failed";
      r.error = e.what();
      r.oracle = bench.oracle();
      runs.push_back(std::move(r));
    }
    ctx.note(run_line(runs.back()));
  }
  return runs;
}

}  // namespace

int resolve_threads(std::optional<int> explicit_threads, int fallback) {
  if (explicit_threads) {
    if (*explicit_threads < 1) throw ConfigError("threads", "must be >= 1");
    return *explicit_threads;
  }
  if (const char* env = std::getenv("VIS_YIELD_THREADS"); env && *env) {
    int value = 0;
    const std::string text(env);
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size() || value < 1) {
      throw ConfigError("VIS_YIELD_THREADS", "expected a positive integer, got \"" + text + "\"");
    }
    return value;
  }
  return fallback;
}

RunReport run_method(const Testbench& bench, const MethodSpec& method, const ExperimentConfig& cfg, std::uint64_t seed,
                     int threads) {
  switch (method.kind) {
    case MethodSpec::Kind::MonteCarlo: {
      McConfig mc = cfg.mc;
      mc.seed = seed;
      mc.threads = threads;
      return run_mc(bench, mc);
    }
    case MethodSpec::Kind::Mnis: {
      BeyondConfig b = cfg.beyond;
      b.seed = seed;
      b.threads = threads;
      return run_mnis(bench, b);
    }
    case MethodSpec::Kind::Beyond:
      break;
  }
  BeyondConfig b = cfg.beyond;
  b.fit.tier = method.tier;
  b.seed = seed;
  b.threads = threads;
  return run_beyond(bench, b);
}

int cmd_estimate(const ExperimentConfig& cfg, const RunOptions& options) {
  if (cfg.methods.empty()) throw ConfigError("method", "missing required field");
  if (cfg.methods.size() != 1) throw ConfigError("methods", "estimate runs exactly one method; use compare for several");
  const Testbench bench = build_bench(cfg);
  const Context ctx = make_context(cfg, options);
  const MethodSpec& method = cfg.methods.front();

  const std::vector<RunReport> runs = run_seeds(bench, method, cfg, ctx);
  write_runs(ctx.out, runs);
  write_file((ctx.out / "table.csv").string(), seed_table(runs));

  json summary = method_summary(method.label(), runs);
  summary["command"] = "estimate";
  summary["pf"] = summary["aggregate"]["pf_mean"];
  summary["bench"] = bench.name();
  summary["oracle"] = oracle_json(bench);
  summary["seeds"] = ctx.seeds;
  summary["version"] = kConfigVersion;
  write_file((ctx.out / "summary.json").string(), dump(summary));
  return all_converged(runs) ? kExitOk : kExitNotConverged;
}

int cmd_compare(const ExperimentConfig& cfg, const RunOptions& options) {
  if (cfg.methods.size() < 2) throw ConfigError("methods", "compare needs at least two methods");
  const Testbench bench = build_bench(cfg);
  bool has_mc = false;
  for (const auto& m : cfg.methods) has_mc = has_mc || m.kind == MethodSpec::Kind::MonteCarlo;
  if (!bench.oracle() && !has_mc) {
    throw ConfigError("methods", "bench has no oracle; add \"mc\" to the methods as the reference");
  }
  const Context ctx = make_context(cfg, options);

  std::vector<MethodRuns> all;
  bool converged = true;
  for (const auto& m : cfg.methods) {
    MethodRuns mr{m.label(), run_seeds(bench, m, cfg, ctx)};
    converged = converged && all_converged(mr.runs);
    write_runs(ctx.out / directory_name(mr.label), mr.runs);
    all.push_back(std::move(mr));
  }

  double reference = 0.0;
  std::string reference_source;
  if (bench.oracle()) {
    reference = bench.oracle()->pf;
    reference_source = "oracle";
  } else {
    for (const auto& m : all) {
      if (m.label == "mc") {
        std::vector<double> pf;
        for (const auto& r : m.runs) pf.push_back(r.pf);
        reference = aggregate(pf).mean;
      }
    }
    reference_source = "mc";
  }
  const auto rows = compare_methods(all, reference);
  write_file((ctx.out / "table.csv").string(), comparison_csv(rows));
  write_file((ctx.out / "table.txt").string(), comparison_text(rows));
  if (ctx.log) *ctx.log << comparison_text(rows) << std::flush;

  json summary;
  summary["command"] = "compare";
  summary["version"] = kConfigVersion;
  summary["bench"] = bench.name();
  summary["oracle"] = oracle_json(bench);
  summary["reference"] = {{"pf", reference}, {"source", reference_source}};
  summary["seeds"] = ctx.seeds;
  json table = json::array();
  for (const auto& r : rows) table.push_back(to_json(r));
  summary["table"] = std::move(table);
  json methods = json::array();
  for (const auto& m : all) methods.push_back(method_summary(m.label, m.runs));
  summary["methods"] = std::move(methods);
  write_file((ctx.out / "summary.json").string(), dump(summary));
  return converged ? kExitOk : kExitNotConverged;
}

int cmd_optimize(const ExperimentConfig& cfg, const RunOptions& options) {
  if (!cfg.optimize) throw ConfigError("optimize", "missing required field");
  const OptimizeSection& section = *cfg.optimize;
  const QuadraticFamily family = section.family.build();
  const Context ctx = make_context(cfg, options);

  bool ok = true;
  std::string table = "mode,seed,initial_oracle_pf,final_oracle_pf,reduction,total_sims,status\n";
  json modes = json::array();
  for (const auto mode : section.modes) {
    const std::string name = to_string(mode);
    const fs::path dir = ctx.out / name;
    fs::create_directories(dir);
    json runs = json::array();
    std::vector<double> finals;
    std::vector<double> sims;
    for (auto seed : ctx.seeds) {
      OptimizeConfig oc = section.settings;
      oc.omsv_mode = mode;
      oc.seed = seed;
      oc.threads = ctx.threads;
      const OptimizeTrace trace = run_variational_asais(family, oc);
      ok = ok && trace.status != "aborted";
      const std::string s = std::to_string(seed);
      write_file((dir / ("run_" + s + ".json")).string(), dump(to_json(trace)));
      write_file((dir / ("traj_" + s + ".csv")).string(), optimize_trace_csv(trace));

      const double initial = trace.steps.front().oracle_pf;
      const double final_pf = trace.final_step().oracle_pf;
      finals.push_back(final_pf);
      sims.push_back(static_cast<double>(trace.total_sims));
      table += name + "," + s + "," + format_number(initial) + "," + format_number(final_pf) + "," +
               format_number(initial / final_pf) + "," + std::to_string(trace.total_sims) + "," + trace.status + "\n";
      runs.push_back({{"seed", seed},
                      {"initial_oracle_pf", initial},
                      {"final_oracle_pf", final_pf},
                      {"total_sims", trace.total_sims},
                      {"iterations", trace.steps.size()},
                      {"status", trace.status}});
      ctx.note(name + " seed " + s + ": oracle_pf " + format_number(initial) + " -> " + format_number(final_pf) +
               " in " + std::to_string(trace.total_sims) + " sims (" + trace.status + ")");
    }
    const Aggregate af = aggregate(finals);
    const Aggregate as = aggregate(sims);
    modes.push_back({{"mode", name},
                     {"runs", std::move(runs)},
                     {"aggregate",
                      {{"final_oracle_pf_mean", af.mean},
                       {"final_oracle_pf_std", af.std},
                       {"total_sims_mean", as.mean},
                       {"total_sims_std", as.std}}}});
  }
  write_file((ctx.out / "table.csv").string(), table);
  json summary{{"command", "optimize"}, {"version", kConfigVersion}, {"seeds", ctx.seeds}, {"modes", std::move(modes)}};
  write_file((ctx.out / "summary.json").string(), dump(summary));
  return ok ? kExitOk : kExitNotConverged;
}

}  // namespace vis
