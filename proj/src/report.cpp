#include "visyield/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace vis {

using nlohmann::json;

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number_or_null(v[i]));
  return out;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

json to_json(const RunReport& r) {
  json j;
  j["method"] = r.method;
  j["bench"] = r.bench;
  j["seed"] = r.seed;
  j["pf"] = number_or_null(r.pf);
  j["fom"] = number_or_null(r.fom);
  j["n_simulations"] = r.n_simulations;
  j["init_simulations"] = r.init_simulations;
  j["pooled_draws"] = r.pooled_draws;
  j["n_failures"] = r.n_failures;
  j["converged"] = r.converged;
  j["status"] = r.status;
  if (!r.error.empty()) j["error"] = r.error;
  if (r.oracle) {
    j["oracle"] = {{"pf", r.oracle->pf}, {"std_error", r.oracle->std_error}, {"exact", r.oracle->exact}};
    if (const auto e = r.relative_error()) j["relative_error"] = number_or_null(*e);
  }
  json traj = json::array();
  for (const auto& it : r.per_iteration) {
    traj.push_back({{"iter", it.iteration},
                    {"pf", number_or_null(it.pf)},
                    {"fom", number_or_null(it.fom)},
                    {"sims", it.sims},
                    {"components", it.components},
                    {"pooled", it.pooled}});
  }
  j["per_iteration"] = std::move(traj);
  return j;
}

json to_json(const OptimizeTrace& t) {
  json j;
  j["mode"] = t.mode;
  j["seed"] = t.seed;
  j["total_sims"] = t.total_sims;
  j["converged"] = t.converged;
  j["status"] = t.status;
  if (!t.error.empty()) j["error"] = t.error;
  if (!t.steps.empty()) {
    const auto& last = t.final_step();
    j["final_z"] = vector_json(last.z);
    j["final_oracle_pf"] = number_or_null(last.oracle_pf);
    j["initial_oracle_pf"] = number_or_null(t.steps.front().oracle_pf);
  }
  json steps = json::array();
  for (const auto& s : t.steps) {
    steps.push_back({{"iter", s.iteration},
                     {"z", vector_json(s.z)},
                     {"obj", number_or_null(s.objective)},
                     {"oracle_pf", number_or_null(s.oracle_pf)},
                     {"sims", s.sims},
                     {"grad_norm", number_or_null(s.grad_norm)},
                     {"no_failure_sentinel", s.sentinel}});
  }
  j["steps"] = std::move(steps);
  return j;
}

std::string trajectory_csv(const RunReport& r) {
  std::string out = "iter,pf,fom,sims\n";
  for (const auto& it : r.per_iteration) {
    out += std::to_string(it.iteration) + "," + format_number(it.pf) + "," + format_number(it.fom) + "," +
           std::to_string(it.sims) + "\n";
  }
  return out;
}

std::string optimize_trace_csv(const OptimizeTrace& t) {
  std::string out = "iter,znorm,obj,oracle_pf,sims\n";
  for (const auto& s : t.steps) {
    out += std::to_string(s.iteration) + "," + format_number(s.z.norm()) + "," + format_number(s.objective) + "," +
           format_number(s.oracle_pf) + "," + std::to_string(s.sims) + "\n";
  }
  return out;
}

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  if (values.empty()) return a;
  double sum = 0.0;
  for (double v : values) sum += v;
  a.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - a.mean) * (v - a.mean);
    a.std = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return a;
}

std::vector<ComparisonRow> compare_methods(const std::vector<MethodRuns>& methods, double reference_pf) {
  const MethodRuns* mc = nullptr;
  for (const auto& m : methods) {
    if (m.label == "mc") mc = &m;
  }
  std::vector<ComparisonRow> rows;
  for (const auto& m : methods) {
    ComparisonRow row;
    row.method = m.label;
    row.runs = m.runs.size();
    std::vector<double> pf;
    std::vector<double> sims;
    for (const auto& r : m.runs) {
      pf.push_back(r.pf);
      sims.push_back(static_cast<double>(r.n_simulations));
      if (!(std::fabs(r.pf - reference_pf) <= kIncorrectThreshold * reference_pf)) ++row.incorrect;
    }
    row.mean_pf = aggregate(pf).mean;
    row.mean_sims = aggregate(sims).mean;
    row.relative_error = (row.mean_pf - reference_pf) / reference_pf;
    if (mc) {
      // Matched seeds only.
      double mc_sims = 0.0;
      double own_sims = 0.0;
      for (const auto& r : m.runs) {
        for (const auto& q : mc->runs) {
          if (q.seed == r.seed) {
            mc_sims += static_cast<double>(q.n_simulations);
            own_sims += static_cast<double>(r.n_simulations);
          }
        }
      }
      if (own_sims > 0.0) row.speedup = mc_sims / own_sims;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::string out = "method,mean_pf,relative_error,mean_sims,speedup_vs_mc,incorrect_runs,runs\n";
  for (const auto& r : rows) {
    out += r.method + "," + format_number(r.mean_pf) + "," + format_number(r.relative_error) + "," +
           format_number(r.mean_sims) + "," + (r.speedup ? format_number(*r.speedup) : std::string()) + "," +
           std::to_string(r.incorrect) + "," + std::to_string(r.runs) + "\n";
  }
  return out;
}

std::string comparison_text(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out << std::left << std::setw(26) << "method" << std::right << std::setw(14) << "mean_pf" << std::setw(10) << "rel_err"
      << std::setw(12) << "mean_sims" << std::setw(10) << "speedup" << std::setw(11) << "incorrect" << "\n";
  for (const auto& r : rows) {
    out << std::left << std::setw(26) << r.method << std::right << std::setw(14) << std::setprecision(4)
        << std::scientific << r.mean_pf << std::setw(9) << std::fixed << std::setprecision(1)
        << 100.0 * r.relative_error << "%" << std::setw(12) << std::setprecision(0) << r.mean_sims << std::setw(10);
    if (r.speedup) {
      out << std::setprecision(1) << *r.speedup;
    } else {
      out << "-";
    }
    out << std::setw(8) << r.incorrect << "/" << r.runs << "\n";
  }
  return out.str();
}

json to_json(const ComparisonRow& r) {
  json j{{"method", r.method},
         {"mean_pf", number_or_null(r.mean_pf)},
         {"relative_error", number_or_null(r.relative_error)},
         {"mean_sims", r.mean_sims},
         {"incorrect_runs", r.incorrect},
         {"runs", r.runs}};
  j["speedup_vs_mc"] = r.speedup ? number_or_null(*r.speedup) : json(nullptr);
  return j;
}

std::string dump(const json& value) { return value.dump(2) + "\n"; }

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace vis
