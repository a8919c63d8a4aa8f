#pragma once

#include "clfd/harness/dataset.hpp"

#include "json.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace clfd::harness {

struct SyntheticTask {
  std::string shape;  ///< line, arc, sine, s-curve or figure-eight
  std::string name;   ///< defaults to the shape name
  double scale = 1.0;
};

/// Recipe for a synthetic dataset. Every demo is the base curve of its task,
/// scaled and rotated about the goal by small random amounts, plus i.i.d.
/// Gaussian noise of standard deviation `noise` on every point except the
/// last. Position curves end at the origin.
struct SyntheticSpec {
  std::string name = "synthetic";
  DatasetKind kind = DatasetKind::Position;
  std::size_t dim = 2;  ///< 2 or 3 for position; ignored for quaternion
  std::size_t demos = 5;
  std::size_t length = 100;
  double noise = 0.0;
  double scale_spread = 0.1;     ///< demo scale factor in 1 +- spread
  double rotation_spread = 0.1;  ///< demo rotation angle in +- spread (rad)
  std::optional<double> recording_frequency;
  std::uint64_t seed = 0;
  std::vector<SyntheticTask> tasks;
};

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);
nlohmann::json synthetic_spec_to_json(const SyntheticSpec& s);

const std::vector<std::string>& synthetic_shapes();

/// Base curve of a shape at phase s in [0, 1]; 2-D, ends at the origin.
/// Throws std::invalid_argument on an unknown shape.
Eigen::Vector2d shape_point(const std::string& shape, double s);

/// Deterministic for a given spec (seed included).
DatasetFile gen_synthetic(const SyntheticSpec& spec);

}  // namespace clfd::harness
