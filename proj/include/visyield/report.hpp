#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "visyield/optimize.hpp"
#include "visyield/sampling.hpp"

namespace vis {

/// Shortest decimal form that parses back to the same double ("nan", "inf",
/// "-inf" for non-finite values). Locale independent.
std::string format_number(double v);

/// Per-seed report. Wall time is left out so that reruns are byte-identical.
nlohmann::json to_json(const RunReport& report);
nlohmann::json to_json(const OptimizeTrace& trace);

/// `iter,pf,fom,sims`, one row per iteration.
std::string trajectory_csv(const RunReport& report);

/// `iter,znorm,obj,oracle_pf,sims` with znorm = |z|.
std::string optimize_trace_csv(const OptimizeTrace& trace);

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
};

Aggregate aggregate(const std::vector<double>& values);

/// Runs of one method over a seed list.
struct MethodRuns {
  std::string label;
  std::vector<RunReport> runs;
};

struct ComparisonRow {
  std::string method;
  double mean_pf = 0.0;
  double relative_error = 0.0;  // (mean pf - reference) / reference
  double mean_sims = 0.0;
  std::optional<double> speedup;  // MC sims / method sims on the same seeds
  std::size_t incorrect = 0;      // runs with |relative error| > 30%
  std::size_t runs = 0;
};

inline constexpr double kIncorrectThreshold = 0.3;

/// Builds the comparison rows against `reference_pf`. The speedup column is
/// filled when a method labelled "mc" is present.
std::vector<ComparisonRow> compare_methods(const std::vector<MethodRuns>& methods, double reference_pf);

std::string comparison_csv(const std::vector<ComparisonRow>& rows);
std::string comparison_text(const std::vector<ComparisonRow>& rows);
nlohmann::json to_json(const ComparisonRow& row);

/// Pretty-printed JSON with a trailing newline.
std::string dump(const nlohmann::json& value);

/// Writes `content` verbatim (binary mode, `\n` line endings preserved).
void write_file(const std::string& path, const std::string& content);

}  // namespace vis
