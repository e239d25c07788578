#include "visyield/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "visyield/errors.hpp"

namespace vis {

using nlohmann::json;

// -- Methods ---------------------------------------------------------------------

std::string MethodSpec::label() const {
  switch (kind) {
    case Kind::MonteCarlo:
      return "mc";
    case Kind::Mnis:
      return "mnis";
    case Kind::Beyond:
      return "beyond:" + to_string(tier);
  }
  return "unknown";
}

std::optional<MethodSpec> parse_method(const std::string& text, FitTier default_tier) {
  if (text == "mc") return MethodSpec{MethodSpec::Kind::MonteCarlo, default_tier};
  if (text == "mnis") return MethodSpec{MethodSpec::Kind::Mnis, default_tier};
  if (text == "beyond") return MethodSpec{MethodSpec::Kind::Beyond, default_tier};
  const std::string prefix = "beyond:";
  if (text.rfind(prefix, 0) == 0) {
    if (const auto tier = parse_tier(text.substr(prefix.size()))) return MethodSpec{MethodSpec::Kind::Beyond, *tier};
  }
  return std::nullopt;
}

QuadraticFamily FamilySpec::build() const { return QuadraticFamily(a, c0, c1, c2, lower, upper); }

// -- Strict reader -------------------------------------------------------------------

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

// Wraps a JSON object; every accessed key is recorded so leftovers can be
// rejected as unknown fields.
class Node {
 public:
  Node(const json& value, std::string path) : value_(value), path_(std::move(path)) {
    if (!value_.is_object()) throw ConfigError(path_, "expected an object");
  }

  bool has(const std::string& key) const { return value_.contains(key); }

  const json& require(const std::string& key) {
    seen_.insert(key);
    if (!value_.contains(key)) throw ConfigError(join(path_, key), "missing required field");
    return value_.at(key);
  }

  const json* optional(const std::string& key) {
    seen_.insert(key);
    return value_.contains(key) ? &value_.at(key) : nullptr;
  }

  std::string path(const std::string& key) const { return join(path_, key); }

  void finish() const {
    for (const auto& [key, _] : value_.items()) {
      if (!seen_.count(key)) throw ConfigError(join(path_, key), "unknown field");
    }
  }

 private:
  const json& value_;
  std::string path_;
  std::set<std::string> seen_;
};

double as_real(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  return v.get<double>();
}

double as_positive(const json& v, const std::string& path) {
  const double x = as_real(v, path);
  if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(path, "must be a positive finite number");
  return x;
}

long long as_integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  return v.get<long long>();
}

std::size_t as_count(const json& v, const std::string& path, long long min = 0) {
  const long long x = as_integer(v, path);
  if (x < min) throw ConfigError(path, "must be >= " + std::to_string(min));
  return static_cast<std::size_t>(x);
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

Vector as_vector(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a nonempty array of numbers");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = as_real(v[i], index(path, i));
  return out;
}

Matrix as_matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a nonempty array of rows");
  const std::size_t rows = v.size();
  Matrix out;
  for (std::size_t i = 0; i < rows; ++i) {
    const Vector row = as_vector(v[i], index(path, i));
    if (i == 0) out.resize(static_cast<Eigen::Index>(rows), row.size());
    if (row.size() != out.cols()) throw ConfigError(index(path, i), "rows differ in length");
    out.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return out;
}

FitTier as_tier(const json& v, const std::string& path) {
  const auto tier = parse_tier(as_string(v, path));
  if (!tier) {
    throw ConfigError(path, "unknown tier (expected MeanShiftOnly, FullCovariance, ScalarSSS, SkewNormal or "
                            "MixtureSkewNormal)");
  }
  return *tier;
}

BenchSpec parse_bench(const json& v, const std::string& path) {
  Node node(v, path);
  const std::string kind = as_string(node.require("kind"), node.path("kind"));
  BenchSpec spec;
  if (kind == "linear") {
    spec.kind = BenchSpec::Kind::Linear;
    spec.linear.a = as_vector(node.require("a"), node.path("a"));
    spec.linear.b = as_real(node.require("b"), node.path("b"));
    if (!(spec.linear.a.norm() > 0.0)) throw ConfigError(node.path("a"), "must be nonzero");
    spec.dim = static_cast<int>(spec.linear.a.size());
  } else if (kind == "axis") {
    spec.kind = BenchSpec::Kind::Linear;
    spec.dim = static_cast<int>(as_count(node.require("dim"), node.path("dim"), 1));
    const auto axis = as_count(node.require("axis"), node.path("axis"));
    if (axis >= static_cast<std::size_t>(spec.dim)) throw ConfigError(node.path("axis"), "must be < dim");
    double sign = 1.0;
    if (const auto* s = node.optional("direction")) {
      const std::string d = as_string(*s, node.path("direction"));
      if (d == "upper") {
        sign = 1.0;
      } else if (d == "lower") {
        sign = -1.0;
      } else {
        throw ConfigError(node.path("direction"), "expected \"upper\" or \"lower\"");
      }
    }
    spec.linear.a = Vector::Zero(spec.dim);
    spec.linear.a[static_cast<Eigen::Index>(axis)] = sign;
    spec.linear.b = sign * as_real(node.require("threshold"), node.path("threshold"));
  } else if (kind == "sphere") {
    spec.kind = BenchSpec::Kind::Sphere;
    spec.sphere.center = as_vector(node.require("center"), node.path("center"));
    spec.sphere.radius = as_positive(node.require("radius"), node.path("radius"));
    spec.dim = static_cast<int>(spec.sphere.center.size());
  } else if (kind == "union" || kind == "intersection") {
    spec.kind = kind == "union" ? BenchSpec::Kind::Union : BenchSpec::Kind::Intersection;
    const json& children = node.require("children");
    const std::string cpath = node.path("children");
    if (!children.is_array() || children.empty()) throw ConfigError(cpath, "expected a nonempty array of benches");
    for (std::size_t i = 0; i < children.size(); ++i) spec.children.push_back(parse_bench(children[i], index(cpath, i)));
    spec.dim = spec.children.front().dim;
    for (std::size_t i = 0; i < spec.children.size(); ++i) {
      if (spec.children[i].dim != spec.dim) throw ConfigError(index(cpath, i), "dimension differs from children[0]");
    }
  } else if (kind == "external") {
    spec.kind = BenchSpec::Kind::External;
    const json& cmd = node.require("command");
    const std::string cpath = node.path("command");
    if (!cmd.is_array() || cmd.empty()) throw ConfigError(cpath, "expected a nonempty array of strings");
    for (std::size_t i = 0; i < cmd.size(); ++i) spec.external.command.push_back(as_string(cmd[i], index(cpath, i)));
    spec.dim = static_cast<int>(as_count(node.require("dim"), node.path("dim"), 1));
    spec.external.dim = spec.dim;
    if (const auto* t = node.optional("timeout_seconds")) {
      spec.external.timeout_seconds = as_positive(*t, node.path("timeout_seconds"));
    }
  } else {
    throw ConfigError(node.path("kind"), "unknown bench kind \"" + kind +
                                             "\" (expected linear, axis, sphere, union, intersection or external)");
  }
  node.finish();
  return spec;
}

OnionConfig parse_onion(const json& v, const std::string& path, OnionConfig cfg) {
  Node node(v, path);
  if (const auto* x = node.optional("shell_width")) cfg.shell_width = as_positive(*x, node.path("shell_width"));
  if (const auto* x = node.optional("max_radius")) cfg.max_radius = as_positive(*x, node.path("max_radius"));
  if (const auto* x = node.optional("samples_per_shell")) {
    cfg.samples_per_shell = as_count(*x, node.path("samples_per_shell"), 1);
  }
  if (const auto* x = node.optional("min_failures")) cfg.min_failures = as_count(*x, node.path("min_failures"), 1);
  node.finish();
  if (!(cfg.shell_width <= cfg.max_radius)) throw ConfigError(path, "shell_width must not exceed max_radius");
  return cfg;
}

ClusterConfig parse_clustering(const json& v, const std::string& path, ClusterConfig cfg) {
  Node node(v, path);
  if (const auto* x = node.optional("k_max")) cfg.k_max = static_cast<int>(as_count(*x, node.path("k_max"), 1));
  if (const auto* x = node.optional("accept_threshold")) cfg.accept_threshold = as_real(*x, node.path("accept_threshold"));
  if (const auto* x = node.optional("max_lloyd_iters")) {
    cfg.max_lloyd_iters = static_cast<int>(as_count(*x, node.path("max_lloyd_iters"), 1));
  }
  node.finish();
  return cfg;
}

FitConfig parse_fit(const json& v, const std::string& path, FitConfig cfg) {
  Node node(v, path);
  if (const auto* x = node.optional("alpha_step")) cfg.alpha_step = as_positive(*x, node.path("alpha_step"));
  if (const auto* x = node.optional("alpha_max_iters")) {
    cfg.alpha_max_iters = static_cast<int>(as_count(*x, node.path("alpha_max_iters"), 1));
  }
  if (const auto* x = node.optional("alpha_tol")) cfg.alpha_tol = as_positive(*x, node.path("alpha_tol"));
  if (const auto* x = node.optional("shrinkage_pseudocount")) {
    cfg.shrinkage_pseudocount = as_real(*x, node.path("shrinkage_pseudocount"));
  }
  if (const auto* x = node.optional("eigenvalue_floor")) {
    cfg.eigenvalue_floor = as_real(*x, node.path("eigenvalue_floor"));
    if (cfg.eigenvalue_floor < 0.0) throw ConfigError(node.path("eigenvalue_floor"), "must be >= 0");
  }
  if (const auto* x = node.optional("clustering")) cfg.clustering = parse_clustering(*x, node.path("clustering"), cfg.clustering);
  node.finish();
  return cfg;
}

BeyondConfig parse_beyond(const json& v, const std::string& path, BeyondConfig cfg) {
  Node node(v, path);
  if (const auto* x = node.optional("k")) cfg.k = as_count(*x, node.path("k"), 1);
  if (const auto* x = node.optional("max_iters")) cfg.max_iters = static_cast<int>(as_count(*x, node.path("max_iters"), 1));
  if (const auto* x = node.optional("burn_in")) cfg.burn_in = static_cast<int>(as_count(*x, node.path("burn_in")));
  if (const auto* x = node.optional("warmup_ess")) cfg.warmup_ess = as_real(*x, node.path("warmup_ess"));
  if (const auto* x = node.optional("archive_weighting")) {
    const auto w = parse_archive_weighting(as_string(*x, node.path("archive_weighting")));
    if (!w) throw ConfigError(node.path("archive_weighting"), "expected \"density\", \"proposal\" or \"balance\"");
    cfg.archive_weighting = *w;
  }
  if (const auto* x = node.optional("onion")) cfg.onion = parse_onion(*x, node.path("onion"), cfg.onion);
  if (const auto* x = node.optional("fit")) cfg.fit = parse_fit(*x, node.path("fit"), cfg.fit);
  node.finish();
  if (cfg.burn_in >= cfg.max_iters) throw ConfigError(node.path("burn_in"), "must be < max_iters");
  return cfg;
}

McConfig parse_mc(const json& v, const std::string& path, McConfig cfg) {
  Node node(v, path);
  if (const auto* x = node.optional("batch")) cfg.batch = as_count(*x, node.path("batch"), 1);
  if (const auto* x = node.optional("max_draws")) cfg.max_draws = as_count(*x, node.path("max_draws"), 1);
  node.finish();
  if (cfg.max_draws < cfg.batch) throw ConfigError(node.path("max_draws"), "must be >= batch");
  return cfg;
}

FamilySpec parse_family(const json& v, const std::string& path) {
  Node node(v, path);
  FamilySpec f;
  f.a = as_vector(node.require("a"), node.path("a"));
  if (!(f.a.norm() > 0.0)) throw ConfigError(node.path("a"), "must be nonzero");
  f.c0 = as_real(node.require("c0"), node.path("c0"));
  f.c2 = as_matrix(node.require("c2"), node.path("c2"));
  if (f.c2.rows() != f.c2.cols()) throw ConfigError(node.path("c2"), "must be square");
  const auto* c1 = node.optional("c1");
  const auto* z_star = node.optional("z_star");
  if ((c1 != nullptr) == (z_star != nullptr)) throw ConfigError(path, "give exactly one of c1 and z_star");
  if (c1) {
    f.c1 = as_vector(*c1, node.path("c1"));
  } else {
    const Vector zs = as_vector(*z_star, node.path("z_star"));
    if (zs.size() != f.c2.rows()) throw ConfigError(node.path("z_star"), "length differs from c2");
    f.c1 = f.c2 * zs;
  }
  if (f.c1.size() != f.c2.rows()) throw ConfigError(node.path("c1"), "length differs from c2");
  f.lower = as_vector(node.require("lower"), node.path("lower"));
  f.upper = as_vector(node.require("upper"), node.path("upper"));
  if (f.lower.size() != f.c1.size()) throw ConfigError(node.path("lower"), "length differs from the design dimension");
  if (f.upper.size() != f.c1.size()) throw ConfigError(node.path("upper"), "length differs from the design dimension");
  if ((f.lower.array() > f.upper.array()).any()) throw ConfigError(node.path("lower"), "exceeds upper");
  node.finish();
  return f;
}

OptimizeSection parse_optimize(const json& v, const std::string& path) {
  Node node(v, path);
  OptimizeSection s;
  s.family = parse_family(node.require("family"), node.path("family"));
  OptimizeConfig& c = s.settings;
  c.z0 = as_vector(node.require("z0"), node.path("z0"));
  if (c.z0.size() != s.family.c1.size()) throw ConfigError(node.path("z0"), "length differs from the design dimension");
  if (const auto* x = node.optional("lower")) c.lower = as_vector(*x, node.path("lower"));
  if (const auto* x = node.optional("upper")) c.upper = as_vector(*x, node.path("upper"));
  if (c.lower.size() != c.upper.size()) throw ConfigError(path, "give both lower and upper, or neither");
  if (c.lower.size() != 0) {
    if (c.lower.size() != c.z0.size()) throw ConfigError(node.path("lower"), "length differs from the design dimension");
    if ((c.lower.array() > c.upper.array()).any()) throw ConfigError(node.path("lower"), "exceeds upper");
  }
  if (const auto* x = node.optional("step")) c.step = as_positive(*x, node.path("step"));
  if (const auto* x = node.optional("max_outer_iters")) {
    c.max_outer_iters = static_cast<int>(as_count(*x, node.path("max_outer_iters")));
  }
  if (const auto* x = node.optional("failures_per_eval")) {
    c.failures_per_eval = as_count(*x, node.path("failures_per_eval"), 1);
  }
  if (const auto* x = node.optional("fd_step")) c.fd_step = as_positive(*x, node.path("fd_step"));
  if (const auto* x = node.optional("confirm_iters")) {
    c.confirm_iters = static_cast<int>(as_count(*x, node.path("confirm_iters"), 1));
  }
  if (const auto* x = node.optional("grad_tol")) {
    c.grad_tol = as_real(*x, node.path("grad_tol"));
    if (c.grad_tol < 0.0) throw ConfigError(node.path("grad_tol"), "must be >= 0");
  }
  if (const auto* x = node.optional("onion")) c.onion = parse_onion(*x, node.path("onion"), c.onion);
  if (const auto* x = node.optional("modes")) {
    const std::string mpath = node.path("modes");
    if (!x->is_array() || x->empty()) throw ConfigError(mpath, "expected a nonempty array of modes");
    s.modes.clear();
    for (std::size_t i = 0; i < x->size(); ++i) {
      const auto m = parse_omsv_mode(as_string((*x)[i], index(mpath, i)));
      if (!m) throw ConfigError(index(mpath, i), "expected \"MinNorm\" or \"TrueOMSV\"");
      if (std::find(s.modes.begin(), s.modes.end(), *m) != s.modes.end()) throw ConfigError(index(mpath, i), "duplicate mode");
      s.modes.push_back(*m);
    }
  }
  node.finish();

  std::optional<QuadraticFamily> family;
  try {
    family.emplace(s.family.build());
  } catch (const ContractViolation& e) {
    throw ConfigError(node.path("family"), e.what());
  }
  if (!family->in_box(c.z0)) throw ConfigError(node.path("z0"), "outside the family box");
  try {
    c.validate(*family);
  } catch (const ContractViolation& e) {
    throw ConfigError(path, e.what());
  }
  return s;
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first == std::string::npos) throw ConfigError("seeds", "empty entry in seed list \"" + text + "\"");
    const std::string token = item.substr(first, last - first + 1);
    std::uint64_t value = 0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
      throw ConfigError("seeds", "\"" + token + "\" is not a nonnegative integer");
    }
    seeds.push_back(value);
  }
  if (seeds.empty()) throw ConfigError("seeds", "seed list is empty");
  std::vector<std::uint64_t> sorted = seeds;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw ConfigError("seeds", "seeds must be distinct");
  return seeds;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  Node root(doc, "");
  ExperimentConfig cfg;

  cfg.version = static_cast<int>(as_integer(root.require("version"), "version"));
  if (cfg.version != kConfigVersion) {
    throw ConfigError("version", "unsupported version " + std::to_string(cfg.version) + " (expected " +
                                     std::to_string(kConfigVersion) + ")");
  }

  FitTier tier = FitTier::MixtureSkewNormal;
  if (const auto* x = root.optional("tier")) tier = as_tier(*x, "tier");

  const auto* method = root.optional("method");
  const auto* methods = root.optional("methods");
  if (method && methods) throw ConfigError("methods", "give either method or methods, not both");
  const auto add_method = [&](const json& v, const std::string& path) {
    const std::string text = as_string(v, path);
    if (text == "optimize") return;
    const auto m = parse_method(text, tier);
    if (!m) throw ConfigError(path, "unknown method \"" + text + "\" (expected mc, mnis, beyond, beyond:<Tier> or optimize)");
    for (const auto& existing : cfg.methods) {
      if (existing.label() == m->label()) throw ConfigError(path, "duplicate method " + m->label());
    }
    cfg.methods.push_back(*m);
  };
  if (method) add_method(*method, "method");
  if (methods) {
    if (!methods->is_array() || methods->empty()) throw ConfigError("methods", "expected a nonempty array of methods");
    for (std::size_t i = 0; i < methods->size(); ++i) add_method((*methods)[i], index("methods", i));
  }

  if (const auto* x = root.optional("bench")) cfg.bench = parse_bench(*x, "bench");
  if (const auto* x = root.optional("seeds")) {
    if (!x->is_array() || x->empty()) throw ConfigError("seeds", "expected a nonempty array of integers");
    cfg.seeds.clear();
    for (std::size_t i = 0; i < x->size(); ++i) cfg.seeds.push_back(as_count((*x)[i], index("seeds", i)));
    std::vector<std::uint64_t> sorted = cfg.seeds;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw ConfigError("seeds", "seeds must be distinct");
  }
  if (const auto* x = root.optional("fom_target")) {
    cfg.fom_target = as_real(*x, "fom_target");
    if (!(cfg.fom_target > 0.0 && cfg.fom_target < 1.0)) throw ConfigError("fom_target", "must lie in (0, 1)");
  }
  if (const auto* x = root.optional("confirm_iters")) {
    cfg.confirm_iters = static_cast<int>(as_count(*x, "confirm_iters", 1));
  }
  if (const auto* x = root.optional("output_dir")) cfg.output_dir = as_string(*x, "output_dir");
  if (const auto* x = root.optional("threads")) cfg.threads = static_cast<int>(as_count(*x, "threads", 1));
  if (const auto* x = root.optional("beyond")) cfg.beyond = parse_beyond(*x, "beyond", cfg.beyond);
  if (const auto* x = root.optional("mc")) cfg.mc = parse_mc(*x, "mc", cfg.mc);
  if (const auto* x = root.optional("optimize")) cfg.optimize = parse_optimize(*x, "optimize");
  root.finish();

  cfg.beyond.fit.tier = tier;
  cfg.beyond.fom_target = cfg.fom_target;
  cfg.mc.fom_target = cfg.fom_target;
  cfg.beyond.confirm_iters = cfg.confirm_iters;
  cfg.mc.confirm_iters = cfg.confirm_iters;
  if (!cfg.bench && !cfg.methods.empty()) throw ConfigError("bench", "missing required field");
  try {
    cfg.beyond.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError("beyond", e.what());
  }
  try {
    cfg.mc.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError("mc", e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot read config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

}  // namespace vis
