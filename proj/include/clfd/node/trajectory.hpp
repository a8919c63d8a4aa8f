#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace clfd {

/// Time-indexed sequence of states: `points` is T x d, one state per row.
struct Trajectory {
  Eigen::MatrixXd points;
  Eigen::VectorXd timestamps;

  std::size_t length() const { return static_cast<std::size_t>(points.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(points.cols()); }

  /// T >= 2, timestamps strictly increasing, all entries finite.
  void validate() const;
};

/// Demonstrations of one task. All demos share T, d and timestamps.
struct DemonstrationSet {
  std::string name;
  std::vector<Trajectory> demos;
  std::optional<double> recording_frequency;

  std::size_t length() const { return demos.empty() ? 0 : demos.front().length(); }
  std::size_t dim() const { return demos.empty() ? 0 : demos.front().dim(); }
  const Eigen::VectorXd& timestamps() const { return demos.front().timestamps; }
  std::size_t point_count() const { return demos.size() * length(); }

  void validate() const;

  /// Starting states of all demos, one per row.
  Eigen::MatrixXd start_states() const;
  /// States of all demos at time index t, one demo per row.
  Eigen::MatrixXd states_at(std::size_t t) const;
};

/// Time of sample n out of T: n / f when a recording frequency is known,
/// otherwise n / (T - 1) so the trajectory spans [0, 1].
double sample_time(std::size_t n, std::size_t T, std::optional<double> recording_frequency);
Eigen::VectorXd sample_times(std::size_t T, std::optional<double> recording_frequency);

/// Indices of T' samples spread evenly over [0, T-1], always keeping both ends.
std::vector<std::size_t> subsample_indices(std::size_t T, std::size_t target_T);

/// Subsamples every demo to `target_T` points. Timestamps keep their
/// original values. No-op when target_T is 0 or >= T.
DemonstrationSet subsample(const DemonstrationSet& set, std::size_t target_T);

}  // namespace clfd
