#pragma once

#include "clfd/node/trajectory.hpp"

#include "json.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace clfd::harness {

enum class DatasetKind { Position, Quaternion };

std::string to_string(DatasetKind k);
DatasetKind dataset_kind_from_string(const std::string& name);

/// Raised for schema violations; the message names the offending field.
class DatasetError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TaskRecord {
  std::string task_name;
  std::vector<Eigen::MatrixXd> demonstrations;  ///< each T x dim
  /// Explicit sample times; when absent they follow from T and the
  /// recording frequency.
  std::optional<std::vector<double>> timestamps;
};

/// In-memory form of a dataset file. Quaternion datasets store scalar-first
/// unit quaternions (dim 4).
struct DatasetFile {
  std::string name;
  DatasetKind kind = DatasetKind::Position;
  std::size_t dim = 2;
  std::optional<double> recording_frequency;
  std::vector<TaskRecord> tasks;

  /// Throws DatasetError on any inconsistency.
  void validate() const;
  /// Demonstrations of one task with timestamps attached.
  DemonstrationSet demonstration_set(std::size_t task) const;
};

DatasetFile dataset_from_json(const nlohmann::json& j);
nlohmann::json dataset_to_json(const DatasetFile& d);

/// Parses and validates; quaternion streams are hemisphere-canonicalized.
DatasetFile load_dataset(const std::filesystem::path& path);
void save_dataset(const DatasetFile& d, const std::filesystem::path& path);

/// Writes via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace clfd::harness
