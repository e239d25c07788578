// Python bindings. Configs travel as JSON text so that the Python side gets
// the same strict validation as the command line.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "visyield/config.hpp"
#include "visyield/errors.hpp"
#include "visyield/experiment.hpp"
#include "visyield/optimize.hpp"
#include "visyield/report.hpp"
#include "visyield/testbench.hpp"

namespace py = pybind11;

namespace {

vis::Testbench bench_from_config(const std::string& config_json) {
  const vis::ExperimentConfig cfg = vis::parse_config(config_json);
  if (!cfg.bench) throw vis::ConfigError("bench", "missing required field");
  return vis::make_bench(*cfg.bench);
}

std::string run_one(const std::string& config_json, std::uint64_t seed, std::optional<int> threads) {
  const vis::ExperimentConfig cfg = vis::parse_config(config_json);
  if (cfg.methods.size() != 1) throw vis::ConfigError("method", "expected exactly one method");
  if (!cfg.bench) throw vis::ConfigError("bench", "missing required field");
  const vis::Testbench bench = vis::make_bench(*cfg.bench);
  const int n = vis::resolve_threads(threads, cfg.threads);
  vis::RunReport report;
  {
    py::gil_scoped_release release;
    report = vis::run_method(bench, cfg.methods.front(), cfg, seed, n);
  }
  return vis::dump(vis::to_json(report));
}

std::vector<std::string> optimize(const std::string& config_json, std::optional<int> threads) {
  const vis::ExperimentConfig cfg = vis::parse_config(config_json);
  if (!cfg.optimize) throw vis::ConfigError("optimize", "missing required field");
  const vis::QuadraticFamily family = cfg.optimize->family.build();
  const int n = vis::resolve_threads(threads, cfg.threads);
  std::vector<std::string> out;
  py::gil_scoped_release release;
  for (const vis::OmsvMode mode : cfg.optimize->modes) {
    for (const std::uint64_t seed : cfg.seeds) {
      vis::OptimizeConfig settings = cfg.optimize->settings;
      settings.omsv_mode = mode;
      settings.seed = seed;
      settings.threads = n;
      out.push_back(vis::dump(vis::to_json(vis::run_variational_asais(family, settings))));
    }
  }
  return out;
}

int command(const std::string& name, const std::string& config_json, std::optional<std::string> output,
            std::optional<std::vector<std::uint64_t>> seeds, std::optional<int> threads) {
  const vis::ExperimentConfig cfg = vis::parse_config(config_json);
  vis::RunOptions options;
  options.output_dir = std::move(output);
  options.seeds = std::move(seeds);
  options.threads = threads;
  options.quiet = true;
  py::gil_scoped_release release;
  if (name == "estimate") return vis::cmd_estimate(cfg, options);
  if (name == "compare") return vis::cmd_compare(cfg, options);
  if (name == "optimize") return vis::cmd_optimize(cfg, options);
  throw vis::ConfigError("command", "unknown command '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Rare-event failure probability estimation and yield optimization";

  py::register_exception<vis::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<vis::ContractViolation>(m, "ContractViolation", PyExc_ValueError);
  py::register_exception<vis::SimulationError>(m, "SimulationError", PyExc_RuntimeError);
  py::register_exception<vis::InitializationError>(m, "InitializationError", PyExc_RuntimeError);

  py::class_<vis::Testbench>(m, "Testbench")
      .def_property_readonly("name", &vis::Testbench::name)
      .def_property_readonly("dim", &vis::Testbench::dim)
      .def_property_readonly("oracle_pf",
                             [](const vis::Testbench& b) -> std::optional<double> {
                               if (!b.oracle()) return std::nullopt;
                               return b.oracle()->pf;
                             })
      .def("fails", &vis::Testbench::fails, py::arg("x"), "True when the design fails at variation point x.");

  m.def("bench_from_config", &bench_from_config, py::arg("config_json"));
  m.def("run_one", &run_one, py::arg("config_json"), py::arg("seed"), py::arg("threads") = std::nullopt);
  m.def("optimize", &optimize, py::arg("config_json"), py::arg("threads") = std::nullopt);
  m.def("command", &command, py::arg("name"), py::arg("config_json"), py::arg("output") = std::nullopt,
        py::arg("seeds") = std::nullopt, py::arg("threads") = std::nullopt);
  m.attr("config_version") = vis::kConfigVersion;
}
