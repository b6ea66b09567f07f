#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "straggler/config.hpp"
#include "straggler/pareto.hpp"
#include "straggler/run.hpp"

namespace py = pybind11;
using namespace straggler;

namespace {

SimConfig with_overrides(const std::string& text, const std::string& policy, const std::string& checkpoint) {
  SimConfig c = parse_config(text);
  if (!policy.empty()) c.policy = parse_policy(policy);
  if (!checkpoint.empty()) c.checkpoint_path = checkpoint;
  c.validate();
  return c;
}

std::shared_ptr<const neural::Network> maybe_load(const SimConfig& c) {
  if (c.checkpoint_path.empty()) return nullptr;
  return std::make_shared<neural::Network>(neural::Network::load(std::filesystem::path(c.checkpoint_path)));
}

}  // namespace

PYBIND11_MODULE(_straggler, m) {
  m.attr("__version__") = kVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("default_config", [] { return dump_config(SimConfig{}); });
  m.def("canonical_config", [](const std::string& text) { return dump_config(parse_config(text)); }, py::arg("text"));
  m.def("config_hash", [](const std::string& text) { return config_hash(parse_config(text)); }, py::arg("text"));

  m.def("fit_pareto",
        [](const std::vector<double>& xs) {
          const auto p = pareto::fit_mle(xs);
          return py::make_tuple(p.alpha, p.beta);
        },
        py::arg("samples"));
  m.def("expected_stragglers",
        [](double alpha, double beta, int q, double k) {
          const auto e = pareto::expected_stragglers({alpha, beta}, q, k);
          return py::make_tuple(e.expected, e.mitigate_count);
        },
        py::arg("alpha"), py::arg("beta"), py::arg("q"), py::arg("k"));

  // Returns the report as JSON text; the Python wrapper decodes it.
  m.def(
      "simulate",
      [](const std::string& text, const std::string& policy, const std::string& checkpoint,
         const std::string& out_dir) {
        const SimConfig c = with_overrides(text, policy, checkpoint);
        const auto net = maybe_load(c);
        RunArtifacts run;
        {
          py::gil_scoped_release release;
          run = run_simulation(c, net);
        }
        if (!out_dir.empty()) write_run(out_dir, c, run);
        return metrics::report_to_json(run.report).dump();
      },
      py::arg("text"), py::arg("policy") = "", py::arg("checkpoint") = "", py::arg("out_dir") = "");

  m.def(
      "evaluate",
      [](const std::filesystem::path& dir) {
        const EvaluateResult r = evaluate_run(dir);
        return py::make_tuple(r.consistent(), r.mismatches);
      },
      py::arg("run_dir"));
}
