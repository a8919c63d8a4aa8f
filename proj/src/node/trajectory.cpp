#include "clfd/node/trajectory.hpp"

#include <cmath>
#include <stdexcept>

namespace clfd {

void Trajectory::validate() const {
  if (points.rows() < 2) {
    throw std::invalid_argument("Trajectory: needs at least 2 points");
  }
  if (timestamps.size() != points.rows()) {
    throw std::invalid_argument("Trajectory: " + std::to_string(timestamps.size()) +
                                " timestamps for " + std::to_string(points.rows()) + " points");
  }
  if (!points.allFinite() || !timestamps.allFinite()) {
    throw std::invalid_argument("Trajectory: non-finite entry");
  }
  for (Eigen::Index i = 1; i < timestamps.size(); ++i) {
    if (!(timestamps[i] > timestamps[i - 1])) {
      throw std::invalid_argument("Trajectory: timestamps not strictly increasing at index " +
                                  std::to_string(i));
    }
  }
}

void DemonstrationSet::validate() const {
  if (demos.empty()) {
    throw std::invalid_argument("DemonstrationSet '" + name + "': no demonstrations");
  }
  const auto& first = demos.front();
  first.validate();
  for (std::size_t k = 1; k < demos.size(); ++k) {
    const auto& d = demos[k];
    d.validate();
    if (d.length() != first.length() || d.dim() != first.dim()) {
      throw std::invalid_argument("DemonstrationSet '" + name + "': demo " + std::to_string(k) +
                                  " has shape " + std::to_string(d.length()) + "x" +
                                  std::to_string(d.dim()) + ", expected " +
                                  std::to_string(first.length()) + "x" +
                                  std::to_string(first.dim()));
    }
    if (d.timestamps != first.timestamps) {
      throw std::invalid_argument("DemonstrationSet '" + name + "': demo " + std::to_string(k) +
                                  " has different timestamps");
    }
  }
}

Eigen::MatrixXd DemonstrationSet::start_states() const {
  return states_at(0);
}

Eigen::MatrixXd DemonstrationSet::states_at(std::size_t t) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(demos.size()), static_cast<Eigen::Index>(dim()));
  for (std::size_t k = 0; k < demos.size(); ++k) {
    out.row(static_cast<Eigen::Index>(k)) = demos[k].points.row(static_cast<Eigen::Index>(t));
  }
  return out;
}

double sample_time(std::size_t n, std::size_t T, std::optional<double> recording_frequency) {
  if (recording_frequency) {
    return static_cast<double>(n) / *recording_frequency;
  }
  return T > 1 ? static_cast<double>(n) / static_cast<double>(T - 1) : 0.0;
}

Eigen::VectorXd sample_times(std::size_t T, std::optional<double> recording_frequency) {
  Eigen::VectorXd t(static_cast<Eigen::Index>(T));
  for (std::size_t n = 0; n < T; ++n) {
    t[static_cast<Eigen::Index>(n)] = sample_time(n, T, recording_frequency);
  }
  return t;
}

std::vector<std::size_t> subsample_indices(std::size_t T, std::size_t target_T) {
  if (target_T == 0 || target_T >= T) {
    std::vector<std::size_t> all(T);
    for (std::size_t i = 0; i < T; ++i) {
      all[i] = i;
    }
    return all;
  }
  if (target_T < 2) {
    throw std::invalid_argument("subsample: target length must be >= 2");
  }
  std::vector<std::size_t> idx(target_T);
  for (std::size_t k = 0; k < target_T; ++k) {
    idx[k] = static_cast<std::size_t>(std::llround(static_cast<double>(k) *
                                                   static_cast<double>(T - 1) /
                                                   static_cast<double>(target_T - 1)));
  }
  return idx;
}

DemonstrationSet subsample(const DemonstrationSet& set, std::size_t target_T) {
  const std::size_t T = set.length();
  if (target_T == 0 || target_T >= T) {
    return set;
  }
  const auto idx = subsample_indices(T, target_T);
  DemonstrationSet out{set.name, {}, set.recording_frequency};
  for (const auto& demo : set.demos) {
    Trajectory t;
    t.points.resize(static_cast<Eigen::Index>(idx.size()), demo.points.cols());
    t.timestamps.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      t.points.row(static_cast<Eigen::Index>(k)) = demo.points.row(static_cast<Eigen::Index>(idx[k]));
      t.timestamps[static_cast<Eigen::Index>(k)] = demo.timestamps[static_cast<Eigen::Index>(idx[k])];
    }
    out.demos.push_back(std::move(t));
  }
  return out;
}

}  // namespace clfd
