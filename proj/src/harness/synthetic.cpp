#include "clfd/harness/synthetic.hpp"

#include "clfd/so3/quaternion.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace clfd::harness {
namespace {

using nlohmann::json;
constexpr double kPi = std::numbers::pi;

// Extra coordinate for 3-D curves; zero at the goal.
double lift(double s) {
  return 0.3 * std::sin(kPi * (1.0 - s));
}

}  // namespace

const std::vector<std::string>& synthetic_shapes() {
  static const std::vector<std::string> shapes{"line", "arc", "sine", "s-curve", "figure-eight"};
  return shapes;
}

Eigen::Vector2d shape_point(const std::string& shape, double s) {
  const double u = 1.0 - s;
  if (shape == "line") {
    return {-u, 0.5 * u};
  }
  if (shape == "arc") {
    const double a = kPi * u;
    return {-0.5 + 0.5 * std::cos(a), 0.5 * std::sin(a)};
  }
  if (shape == "sine") {
    return {-u, 0.25 * std::sin(4.0 * kPi * u)};
  }
  if (shape == "s-curve") {
    return {0.4 * std::sin(2.0 * kPi * u), -u};
  }
  if (shape == "figure-eight") {
    // Lemniscate of Gerono from its right tip: crosses the origin a third of
    // the way through, loops through the left lobe and ends at the crossing.
    const double phi = 0.5 * kPi + 1.5 * kPi * s;
    return {0.6 * std::sin(phi), 0.6 * std::sin(phi) * std::cos(phi)};
  }
  throw std::invalid_argument("gen_synthetic: unknown shape '" + shape +
                              "' (expected line, arc, sine, s-curve or figure-eight)");
}

SyntheticSpec synthetic_spec_from_json(const json& j) {
  SyntheticSpec s;
  s.name = j.value("name", s.name);
  s.kind = dataset_kind_from_string(j.value("kind", std::string("position")));
  s.dim = j.value("dim", s.dim);
  s.demos = j.value("demos", s.demos);
  s.length = j.value("length", s.length);
  s.noise = j.value("noise", s.noise);
  s.scale_spread = j.value("scale_spread", s.scale_spread);
  s.rotation_spread = j.value("rotation_spread", s.rotation_spread);
  if (j.contains("recording_frequency") && !j["recording_frequency"].is_null()) {
    s.recording_frequency = j["recording_frequency"].get<double>();
  }
  s.seed = j.value("seed", s.seed);
  if (!j.contains("tasks") || !j["tasks"].is_array()) {
    throw std::invalid_argument("synthetic spec: field 'tasks' must be an array");
  }
  for (const auto& t : j["tasks"]) {
    SyntheticTask task;
    if (t.is_string()) {
      task.shape = t.get<std::string>();
    } else {
      task.shape = t.at("shape").get<std::string>();
      task.name = t.value("name", std::string());
      task.scale = t.value("scale", 1.0);
    }
    s.tasks.push_back(std::move(task));
  }
  return s;
}

json synthetic_spec_to_json(const SyntheticSpec& s) {
  json tasks = json::array();
  for (const auto& t : s.tasks) {
    tasks.push_back({{"shape", t.shape}, {"name", t.name}, {"scale", t.scale}});
  }
  json j = {{"name", s.name},
            {"kind", to_string(s.kind)},
            {"dim", s.dim},
            {"demos", s.demos},
            {"length", s.length},
            {"noise", s.noise},
            {"scale_spread", s.scale_spread},
            {"rotation_spread", s.rotation_spread},
            {"recording_frequency", nullptr},
            {"seed", s.seed},
            {"tasks", tasks}};
  if (s.recording_frequency) {
    j["recording_frequency"] = *s.recording_frequency;
  }
  return j;
}

DatasetFile gen_synthetic(const SyntheticSpec& spec) {
  const bool quat = spec.kind == DatasetKind::Quaternion;
  if (!quat && spec.dim != 2 && spec.dim != 3) {
    throw std::invalid_argument("gen_synthetic: position datasets must be 2-D or 3-D");
  }
  if (spec.demos < 1 || spec.length < 2) {
    throw std::invalid_argument("gen_synthetic: need >= 1 demo of >= 2 points");
  }
  if (spec.tasks.empty()) {
    throw std::invalid_argument("gen_synthetic: no tasks");
  }
  if (spec.noise < 0.0 || spec.scale_spread < 0.0 || spec.rotation_spread < 0.0) {
    throw std::invalid_argument("gen_synthetic: noise and spreads must be non-negative");
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  DatasetFile d;
  d.name = spec.name;
  d.kind = spec.kind;
  d.dim = quat ? 4 : spec.dim;
  d.recording_frequency = spec.recording_frequency;
  const std::size_t geo_dim = quat ? 3 : spec.dim;
  const auto T = static_cast<Eigen::Index>(spec.length);

  for (const auto& task : spec.tasks) {
    shape_point(task.shape, 0.0);  // rejects unknown shapes up front
    TaskRecord rec;
    rec.task_name = task.name.empty() ? task.shape : task.name;
    so3::UnitQuaternion goal;
    if (quat) {
      Eigen::Vector3d g(unit(rng), unit(rng), unit(rng));
      goal = so3::exp_map(0.5 * g);
    }
    for (std::size_t k = 0; k < spec.demos; ++k) {
      const double scale = task.scale * (1.0 + spec.scale_spread * unit(rng));
      const double angle = spec.rotation_spread * unit(rng);
      const double c = std::cos(angle);
      const double sn = std::sin(angle);
      Eigen::MatrixXd pts(T, static_cast<Eigen::Index>(geo_dim));
      for (Eigen::Index t = 0; t < T; ++t) {
        const double s = static_cast<double>(t) / static_cast<double>(T - 1);
        const Eigen::Vector2d p = scale * shape_point(task.shape, s);
        pts(t, 0) = c * p.x() - sn * p.y();
        pts(t, 1) = sn * p.x() + c * p.y();
        if (geo_dim == 3) {
          pts(t, 2) = scale * lift(s);
        }
      }
      if (spec.noise > 0.0) {
        for (Eigen::Index t = 0; t + 1 < T; ++t) {
          for (Eigen::Index c2 = 0; c2 < pts.cols(); ++c2) {
            pts(t, c2) += spec.noise * normal(rng);
          }
        }
      }
      if (!quat) {
        rec.demonstrations.push_back(std::move(pts));
        continue;
      }
      // Orientation demo whose goal-anchored tangent trajectory is `pts`.
      Eigen::MatrixXd q(T, 4);
      for (Eigen::Index t = 0; t < T; ++t) {
        const Eigen::Vector3d r = 0.8 * pts.row(t).transpose();
        q.row(t) = (goal * so3::exp_map(r).conjugate()).coeffs().transpose();
      }
      so3::canonicalize_hemisphere(q);
      rec.demonstrations.push_back(std::move(q));
    }
    d.tasks.push_back(std::move(rec));
  }
  d.validate();
  return d;
}

}  // namespace clfd::harness
