#include "clfd/harness/dataset.hpp"
#include "clfd/harness/experiment.hpp"
#include "clfd/harness/synthetic.hpp"
#include "clfd/metrics/cl_metrics.hpp"
#include "clfd/metrics/trajectory_metrics.hpp"
#include "clfd/so3/quaternion.hpp"
#include "clfd/strategies/strategy.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <spdlog/spdlog.h>

namespace py = pybind11;
using nlohmann::json;
using namespace clfd;

// Structured values cross the boundary as JSON text; the Python side wraps
// them in dicts.
namespace {

std::string experiment_json(const std::string& config_text, const std::string& dataset_text,
                            const std::string& method, std::uint64_t seed) {
  const harness::ExperimentConfig c = harness::config_from_json(json::parse(config_text));
  const harness::DatasetFile d = harness::dataset_from_json(json::parse(dataset_text));
  const harness::ResultsBundle b = harness::run_experiment(c, d, strategies::method_from_string(method), seed);
  json acc = json::array();
  for (Eigen::Index i = 0; i < b.accuracy.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j <= i; ++j) row.push_back(b.accuracy(i, j));
    acc.push_back(row);
  }
  json m, l;
  metrics::to_json(m, b.metrics);
  metrics::to_json(l, b.ledger);
  return json{{"method", method}, {"seed", seed}, {"threshold", b.threshold},
              {"accuracy", acc},  {"metrics", m},   {"ledger", l}}
      .dump();
}

}  // namespace

PYBIND11_MODULE(_clfd, m) {
  m.doc() = "Native core of clfd";
  spdlog::set_level(spdlog::level::warn);

  py::register_exception<harness::DatasetError>(m, "DatasetError", PyExc_ValueError);
  py::register_exception<so3::DomainError>(m, "DomainError", PyExc_ValueError);

  m.def("dtw", &metrics::dtw, py::arg("a"), py::arg("b"));
  m.def("discrete_frechet", &metrics::discrete_frechet, py::arg("a"), py::arg("b"));
  m.def("swept_area", &metrics::swept_area, py::arg("a"), py::arg("b"));

  m.def(
      "exp_map", [](const Eigen::Vector3d& r) { return Eigen::Vector4d(so3::exp_map(r).coeffs()); },
      py::arg("r"));
  m.def(
      "log_map",
      [](const Eigen::Vector4d& q) { return Eigen::Vector3d(so3::log_map(so3::UnitQuaternion::from_vector(q))); },
      py::arg("q"));
  m.def(
      "quat_error",
      [](const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
        return Eigen::Vector3d(
            so3::quat_error(so3::UnitQuaternion::from_vector(a), so3::UnitQuaternion::from_vector(b)));
      },
      py::arg("q1"), py::arg("q2"));

  m.def("accuracy", &metrics::accuracy, py::arg("A"));
  m.def("remembering", &metrics::remembering, py::arg("A"));
  m.def("model_size_efficiency", &metrics::model_size_efficiency, py::arg("param_sizes"));
  m.def("sample_storage_efficiency", &metrics::sample_storage_efficiency, py::arg("stored"), py::arg("total"));
  m.def("time_efficiency", &metrics::time_efficiency, py::arg("times"));
  m.def(
      "aggregate_scores",
      [](double acc, double rem, double ms, double te, double fs, double sss) {
        metrics::MetricsRecord r;
        r.acc = acc;
        r.rem = rem;
        r.ms = ms;
        r.te = te;
        r.fs = fs;
        r.sss = sss;
        metrics::aggregate_scores(r);
        return std::make_pair(r.cl_score, r.cl_stability);
      },
      py::arg("acc"), py::arg("rem"), py::arg("ms"), py::arg("te"), py::arg("fs"), py::arg("sss"));

  m.def(
      "expected_parameter_count",
      [](const std::string& config_text, std::size_t num_tasks) {
        strategies::StrategyConfig c;
        strategies::from_json(json::parse(config_text), c);
        return strategies::expected_parameter_count(c, num_tasks);
      },
      py::arg("config_json"), py::arg("num_tasks"));
  m.def(
      "preset_json", [](const std::string& name) { return harness::config_to_json(harness::preset(name)).dump(); },
      py::arg("name"));
  m.def(
      "gen_synthetic_json",
      [](const std::string& spec_text) {
        return harness::dataset_to_json(harness::gen_synthetic(harness::synthetic_spec_from_json(json::parse(spec_text))))
            .dump();
      },
      py::arg("spec_json"));
  m.def(
      "load_dataset_json",
      [](const std::string& path) { return harness::dataset_to_json(harness::load_dataset(path)).dump(); },
      py::arg("path"));
  m.def("run_experiment_json", &experiment_json, py::arg("config_json"), py::arg("dataset_json"), py::arg("method"),
        py::arg("seed"), py::call_guard<py::gil_scoped_release>());
}
