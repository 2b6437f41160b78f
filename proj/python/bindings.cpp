// Thin bindings: configs and results cross the boundary as JSON text.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dmeg/config.hpp"
#include "dmeg/error.hpp"
#include "dmeg/hedge.hpp"
#include "dmeg/objectives.hpp"
#include "dmeg/report.hpp"
#include "dmeg/runner.hpp"

namespace py = pybind11;

namespace {

dmeg::ExperimentConfig parse(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw dmeg::ConfigError(e.what());
  }
  return dmeg::config_from_json(doc);
}

std::string summaries(const std::vector<dmeg::MetricsLog>& logs) {
  auto out = nlohmann::json::array();
  for (const auto& log : logs) out.push_back(dmeg::summary_json(log));
  return out.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  py::register_exception<dmeg::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<dmeg::NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("canonical_config", [](const std::string& text) { return dmeg::config_to_json(parse(text)).dump(); });
  m.def("config_hash", [](const std::string& text) { return dmeg::config_hash(parse(text)); });

  // Runs cfg.algorithm; returns a JSON array of run summaries. With `out_dir`
  // non-empty the usual report files are written there as well.
  m.def(
      "run",
      [](const std::string& text, const std::string& out_dir) {
        const auto cfg = parse(text);
        std::vector<dmeg::MetricsLog> logs;
        {
          py::gil_scoped_release release;
          logs = dmeg::run_algorithm(cfg);
          if (!out_dir.empty()) dmeg::emit_report(logs, out_dir, {cfg.write_predictions});
        }
        return summaries(logs);
      },
      py::arg("config_json"), py::arg("out_dir") = "");

  m.def("sweep", [](const std::string& text) {
    const auto cfg = parse(text);
    std::vector<dmeg::MetricsLog> logs;
    {
      py::gil_scoped_release release;
      logs = dmeg::run_gamma_sweep(cfg);
    }
    return summaries(logs);
  });

  m.def("trajectory_csv", [](const std::string& text) {
    const auto logs = dmeg::run_algorithm(parse(text));
    return logs.empty() ? std::string() : dmeg::trajectory_csv(logs.front());
  });

  m.def("theorem_rates", [](double g1, double g2, long long horizon, std::size_t L) {
    const auto r = dmeg::theorem_rates(g1, g2, horizon, L);
    return py::make_tuple(r.eta, r.eta_lambda);
  });
  m.def("constraint_certificate", &dmeg::constraint_certificate, py::arg("g1"), py::arg("g2"),
        py::arg("horizon"), py::arg("L"), py::arg("gamma"));
  m.def("clipped_bce", &dmeg::clipped_bce, py::arg("b"), py::arg("y"), py::arg("loss_clip") = 4.0);
}
