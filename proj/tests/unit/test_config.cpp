#include <doctest.h>

#include <string>

#include "visyield/config.hpp"
#include "visyield/errors.hpp"

using vis::ConfigError;

namespace {

const char* kLinear = R"({"kind": "linear", "a": [1, 0, 0], "b": 4})";

std::string with_bench(const std::string& rest) {
  return std::string(R"({"version": 1, "bench": )") + kLinear + (rest.empty() ? "" : ", " + rest) + "}";
}

// Path reported by the ConfigError raised while parsing `text`.
std::string error_path(const std::string& text) {
  try {
    vis::parse_config(text);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<no error>";
}

}  // namespace

TEST_CASE("minimal config uses the defaults") {
  const auto cfg = vis::parse_config(with_bench(R"("method": "beyond")"));
  REQUIRE(cfg.methods.size() == 1);
  CHECK(cfg.methods[0].label() == "beyond:MixtureSkewNormal");
  CHECK(cfg.seeds == std::vector<std::uint64_t>{1});
  CHECK(cfg.fom_target == 0.1);
  CHECK(cfg.beyond.confirm_iters == 3);
  CHECK(cfg.beyond.k == 500);
  CHECK(cfg.beyond.max_iters == 200);
  CHECK(cfg.beyond.onion.min_failures == 20);
  CHECK(cfg.bench->dim == 3);
  CHECK_FALSE(cfg.optimize.has_value());
}

TEST_CASE("overrides reach the module configs") {
  const auto cfg = vis::parse_config(with_bench(R"(
    "methods": ["mc", "mnis", "beyond:FullCovariance"], "tier": "ScalarSSS", "seeds": [3, 1, 2],
    "fom_target": 0.05, "confirm_iters": 2, "output_dir": "out", "threads": 4,
    "beyond": {"k": 250, "max_iters": 50, "burn_in": 1, "warmup_ess": 0, "archive_weighting": "density",
               "onion": {"shell_width": 0.5, "max_radius": 9, "samples_per_shell": 40, "min_failures": 15},
               "fit": {"alpha_step": 0.1, "shrinkage_pseudocount": 0, "eigenvalue_floor": 0,
                       "clustering": {"k_max": 4, "accept_threshold": 0.3, "max_lloyd_iters": 50}}},
    "mc": {"batch": 5000, "max_draws": 100000})"));
  REQUIRE(cfg.methods.size() == 3);
  CHECK(cfg.methods[0].label() == "mc");
  CHECK(cfg.methods[1].label() == "mnis");
  CHECK(cfg.methods[2].label() == "beyond:FullCovariance");
  CHECK(cfg.seeds == std::vector<std::uint64_t>{3, 1, 2});
  CHECK(cfg.fom_target == 0.05);
  CHECK(cfg.beyond.fom_target == 0.05);
  CHECK(cfg.mc.fom_target == 0.05);
  CHECK(cfg.beyond.confirm_iters == 2);
  CHECK(cfg.mc.confirm_iters == 2);
  CHECK(cfg.threads == 4);
  CHECK(cfg.beyond.k == 250);
  CHECK(cfg.beyond.burn_in == 1);
  CHECK(cfg.beyond.warmup_ess == 0.0);
  CHECK(cfg.beyond.archive_weighting == vis::ArchiveWeighting::Density);
  CHECK(cfg.beyond.onion.shell_width == 0.5);
  CHECK(cfg.beyond.onion.samples_per_shell == 40);
  CHECK(cfg.beyond.fit.tier == vis::FitTier::ScalarSSS);
  CHECK(cfg.beyond.fit.clustering.k_max == 4);
  CHECK(cfg.mc.batch == 5000);
}

TEST_CASE("bench kinds") {
  auto bench = [](const std::string& b) {
    return *vis::parse_config(R"({"version": 1, "method": "mc", "bench": )" + b + "}").bench;
  };
  const auto axis = bench(R"({"kind": "axis", "dim": 4, "axis": 1, "threshold": 3, "direction": "lower"})");
  CHECK(axis.linear.a[1] == -1.0);
  CHECK(axis.linear.b == -3.0);
  const auto sph = bench(R"({"kind": "sphere", "center": [4, 0], "radius": 1})");
  CHECK(sph.kind == vis::BenchSpec::Kind::Sphere);
  const auto uni = bench(R"({"kind": "union", "children": [
      {"kind": "axis", "dim": 2, "axis": 0, "threshold": 4},
      {"kind": "axis", "dim": 2, "axis": 0, "threshold": 4, "direction": "lower"}]})");
  CHECK(uni.children.size() == 2);
  const auto ext = bench(R"({"kind": "external", "command": ["sim", "--fast"], "dim": 3, "timeout_seconds": 5})");
  CHECK(ext.external.command.size() == 2);
  CHECK(ext.external.timeout_seconds == 5.0);
}

TEST_CASE("unknown fields are rejected with their path") {
  CHECK(error_path(with_bench(R"("method": "mc", "fom_taget": 0.1)")) == "fom_taget");
  CHECK(error_path(with_bench(R"("method": "beyond", "beyond": {"onion": {"shell_widht": 1}})")) ==
        "beyond.onion.shell_widht");
  CHECK(error_path(R"({"version": 1, "method": "mc", "bench": {"kind": "union", "children": [
      {"kind": "linear", "a": [1, 0], "b": 4}, {"kind": "linear", "a": [0, 1], "b": 4, "c": 2}]}})") ==
        "bench.children[1].c");
}

TEST_CASE("type and range errors name the field") {
  CHECK(error_path(R"({"method": "mc"})") == "version");
  CHECK(error_path(R"({"version": 2})") == "version");
  CHECK(error_path(R"({"version": 1, "method": "mc"})") == "bench");
  CHECK(error_path(R"({"version": 1, "method": "mc", "bench": {"kind": "union", "children": [
      {"kind": "linear", "a": [1, 0], "b": 4}, {"kind": "linear", "a": "x", "b": 4}]}})") ==
        "bench.children[1].a");
  CHECK(error_path(with_bench(R"("method": "mc", "fom_target": 1.5)")) == "fom_target");
  CHECK(error_path(with_bench(R"("method": "mc", "confirm_iters": 0)")) == "confirm_iters");
  CHECK(error_path(with_bench(R"("method": "mc", "seeds": [1, 2, 1])")) == "seeds");
  CHECK(error_path(with_bench(R"("method": "mc", "seeds": [])")) == "seeds");
  CHECK(error_path(with_bench(R"("method": "mc", "seeds": [-1])")) == "seeds[0]");
  CHECK(error_path(with_bench(R"("method": "fast")")) == "method");
  CHECK(error_path(with_bench(R"("methods": ["mc", "mc"])")) == "methods[1]");
  CHECK(error_path(with_bench(R"("method": "beyond:Bogus")")) == "method");
  CHECK(error_path(with_bench(R"("method": "mc", "beyond": {"k": 0})")) == "beyond.k");
  CHECK(error_path(with_bench(R"("method": "mc", "beyond": {"warmup_ess": "auto"})")) == "beyond.warmup_ess");
  CHECK(error_path(with_bench(R"("method": "mc", "mc": {"batch": 100, "max_draws": 10})")) == "mc.max_draws");
  CHECK(error_path(R"({"version": 1, "method": "mc", "bench": {"kind": "cube"}})") == "bench.kind");
  CHECK(error_path(R"({"version": 1, "method": "mc", "bench": {"kind": "linear", "a": [0, 0], "b": 1}})") ==
        "bench.a");
  CHECK(error_path("{not json") == "");
}

TEST_CASE("optimize section") {
  const std::string family =
      R"("family": {"a": [1, 0], "c0": 2, "z_star": [1, 1], "c2": [[2, 0], [0, 2]], "lower": [-1, -1], "upper": [3, 3]})";
  const auto cfg = vis::parse_config(R"({"version": 1, "method": "optimize", "optimize": {)" + family +
                                     R"(, "z0": [0, 0], "modes": ["MinNorm", "TrueOMSV"], "step": 0.05,
                                         "confirm_iters": 2}})");
  REQUIRE(cfg.optimize.has_value());
  CHECK(cfg.methods.empty());
  CHECK(cfg.optimize->modes.size() == 2);
  CHECK(cfg.optimize->settings.step == 0.05);
  CHECK(cfg.optimize->settings.confirm_iters == 2);
  CHECK(cfg.optimize->family.c1[0] == 2.0);
  CHECK(cfg.optimize->family.build().oracle_pf(cfg.optimize->settings.z0) > 0.0);

  CHECK(error_path(R"({"version": 1, "optimize": {)" + family + R"(, "z0": [0, 0], "lower": [1, 0], "upper": [0, 1]}})") ==
        "optimize.lower");
  CHECK(error_path(R"({"version": 1, "optimize": {"family": {"a": [1, 0], "c0": 2, "c1": [0, 0], "c2": [[1, 0], [0, 1]],
        "lower": [1, 1], "upper": [0, 0]}, "z0": [0, 0]}})") == "optimize.family.lower");
  CHECK(error_path(R"({"version": 1, "optimize": {)" + family + R"(, "z0": [9, 0]}})") == "optimize.z0");
  CHECK(error_path(R"({"version": 1, "optimize": {)" + family + R"(, "z0": [0, 0], "modes": ["Fast"]}})") ==
        "optimize.modes[0]");
}

TEST_CASE("seed lists") {
  CHECK(vis::parse_seed_list("1,2,3") == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(vis::parse_seed_list(" 7 , 9") == std::vector<std::uint64_t>{7, 9});
  CHECK_THROWS_AS(vis::parse_seed_list(""), ConfigError);
  CHECK_THROWS_AS(vis::parse_seed_list("1,,2"), ConfigError);
  CHECK_THROWS_AS(vis::parse_seed_list("1,x"), ConfigError);
  CHECK_THROWS_AS(vis::parse_seed_list("4,4"), ConfigError);
  CHECK_THROWS_AS(vis::parse_seed_list("-3"), ConfigError);
}

TEST_CASE("method labels round-trip") {
  for (const char* text : {"mc", "mnis", "beyond:MeanShiftOnly", "beyond:FullCovariance", "beyond:ScalarSSS",
                           "beyond:SkewNormal", "beyond:MixtureSkewNormal"}) {
    const auto m = vis::parse_method(text, vis::FitTier::MixtureSkewNormal);
    REQUIRE(m.has_value());
    CHECK(m->label() == text);
  }
  CHECK(vis::parse_method("beyond", vis::FitTier::SkewNormal)->label() == "beyond:SkewNormal");
}
