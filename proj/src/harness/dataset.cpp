#include "clfd/harness/dataset.hpp"

#include "clfd/so3/quaternion.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace clfd::harness {
namespace {

using nlohmann::json;

constexpr double kUnitTolerance = 1e-6;

const json& field(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw DatasetError("dataset: missing field '" + where + key + "'");
  }
  return j[key];
}

}  // namespace

std::string to_string(DatasetKind k) {
  return k == DatasetKind::Position ? "position" : "quaternion";
}

DatasetKind dataset_kind_from_string(const std::string& name) {
  if (name == "position") {
    return DatasetKind::Position;
  }
  if (name == "quaternion") {
    return DatasetKind::Quaternion;
  }
  throw DatasetError("dataset: field 'kind' must be 'position' or 'quaternion', got '" + name + "'");
}

void DatasetFile::validate() const {
  if (kind == DatasetKind::Quaternion && dim != 4) {
    throw DatasetError("dataset: field 'dim' must be 4 for quaternion datasets");
  }
  if (dim == 0) {
    throw DatasetError("dataset: field 'dim' must be >= 1");
  }
  if (recording_frequency && !(*recording_frequency > 0.0)) {
    throw DatasetError("dataset: field 'recording_frequency' must be positive");
  }
  if (tasks.empty()) {
    throw DatasetError("dataset: field 'tasks' is empty");
  }
  for (std::size_t m = 0; m < tasks.size(); ++m) {
    const auto& t = tasks[m];
    const std::string where = "tasks[" + std::to_string(m) + "]";
    if (t.demonstrations.empty()) {
      throw DatasetError("dataset: field '" + where + ".demonstrations' is empty");
    }
    const auto T = t.demonstrations.front().rows();
    for (std::size_t k = 0; k < t.demonstrations.size(); ++k) {
      const auto& d = t.demonstrations[k];
      const std::string dw = where + ".demonstrations[" + std::to_string(k) + "]";
      if (d.rows() < 2) {
        throw DatasetError("dataset: field '" + dw + "' needs at least 2 points");
      }
      if (d.rows() != T) {
        throw DatasetError("dataset: field '" + dw + "' has " + std::to_string(d.rows()) +
                           " points, expected " + std::to_string(T));
      }
      if (static_cast<std::size_t>(d.cols()) != dim) {
        throw DatasetError("dataset: field '" + dw + "' has points of dimension " +
                           std::to_string(d.cols()) + ", expected " + std::to_string(dim));
      }
      if (t.timestamps && t.timestamps->size() != static_cast<std::size_t>(T)) {
        throw DatasetError("dataset: field '" + where + ".timestamps' has " +
                           std::to_string(t.timestamps->size()) + " entries, expected " +
                           std::to_string(T));
      }
      if (!d.allFinite()) {
        throw DatasetError("dataset: field '" + dw + "' contains non-finite values");
      }
      if (kind == DatasetKind::Quaternion) {
        for (Eigen::Index r = 0; r < d.rows(); ++r) {
          if (std::abs(d.row(r).norm() - 1.0) > kUnitTolerance) {
            throw DatasetError("dataset: field '" + dw + "[" + std::to_string(r) +
                               "]' is not a unit quaternion (norm " +
                               std::to_string(d.row(r).norm()) + ")");
          }
        }
      }
    }
  }
}

DemonstrationSet DatasetFile::demonstration_set(std::size_t task) const {
  if (task >= tasks.size()) {
    throw std::out_of_range("dataset: no task " + std::to_string(task));
  }
  const auto& t = tasks[task];
  DemonstrationSet set;
  set.name = t.task_name;
  set.recording_frequency = recording_frequency;
  const auto T = static_cast<std::size_t>(t.demonstrations.front().rows());
  Eigen::VectorXd ts = sample_times(T, recording_frequency);
  if (t.timestamps) {
    ts = Eigen::Map<const Eigen::VectorXd>(t.timestamps->data(),
                                           static_cast<Eigen::Index>(t.timestamps->size()));
  }
  for (const auto& d : t.demonstrations) {
    set.demos.push_back(Trajectory{d, ts});
  }
  return set;
}

DatasetFile dataset_from_json(const json& j) {
  DatasetFile d;
  try {
    d.name = field(j, "name", "").get<std::string>();
    d.kind = dataset_kind_from_string(field(j, "kind", "").get<std::string>());
    d.dim = field(j, "dim", "").get<std::size_t>();
    if (j.contains("recording_frequency") && !j["recording_frequency"].is_null()) {
      d.recording_frequency = j["recording_frequency"].get<double>();
    }
    const json& tasks = field(j, "tasks", "");
    if (!tasks.is_array()) {
      throw DatasetError("dataset: field 'tasks' must be an array");
    }
    for (std::size_t m = 0; m < tasks.size(); ++m) {
      const std::string where = "tasks[" + std::to_string(m) + "].";
      TaskRecord rec;
      rec.task_name = field(tasks[m], "task_name", where).get<std::string>();
      if (tasks[m].contains("timestamps") && !tasks[m]["timestamps"].is_null()) {
        rec.timestamps = tasks[m]["timestamps"].get<std::vector<double>>();
        for (std::size_t i = 1; i < rec.timestamps->size(); ++i) {
          if (!((*rec.timestamps)[i] > (*rec.timestamps)[i - 1])) {
            throw DatasetError("dataset: field '" + where + "timestamps' is not strictly increasing");
          }
        }
      }
      const json& demos = field(tasks[m], "demonstrations", where);
      if (!demos.is_array()) {
        throw DatasetError("dataset: field '" + where + "demonstrations' must be an array");
      }
      for (std::size_t k = 0; k < demos.size(); ++k) {
        const std::string dw = where + "demonstrations[" + std::to_string(k) + "]";
        const json& pts = demos[k];
        if (!pts.is_array()) {
          throw DatasetError("dataset: field '" + dw + "' must be an array of points");
        }
        Eigen::MatrixXd m_pts(static_cast<Eigen::Index>(pts.size()), static_cast<Eigen::Index>(d.dim));
        for (std::size_t r = 0; r < pts.size(); ++r) {
          if (!pts[r].is_array() || pts[r].size() != d.dim) {
            throw DatasetError("dataset: field '" + dw + "[" + std::to_string(r) + "]' must have " +
                               std::to_string(d.dim) + " numbers");
          }
          for (std::size_t c = 0; c < d.dim; ++c) {
            if (!pts[r][c].is_number()) {
              throw DatasetError("dataset: field '" + dw + "[" + std::to_string(r) + "][" +
                                 std::to_string(c) + "]' is not a number");
            }
            m_pts(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = pts[r][c].get<double>();
          }
        }
        rec.demonstrations.push_back(std::move(m_pts));
      }
      d.tasks.push_back(std::move(rec));
    }
  } catch (const json::exception& e) {
    throw DatasetError(std::string("dataset: malformed field: ") + e.what());
  }
  d.validate();
  if (d.kind == DatasetKind::Quaternion) {
    for (auto& t : d.tasks) {
      for (auto& demo : t.demonstrations) {
        so3::canonicalize_hemisphere(demo);
      }
    }
  }
  return d;
}

json dataset_to_json(const DatasetFile& d) {
  json tasks = json::array();
  for (const auto& t : d.tasks) {
    json demos = json::array();
    for (const auto& m : t.demonstrations) {
      json pts = json::array();
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json p = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
          p.push_back(m(r, c));
        }
        pts.push_back(std::move(p));
      }
      demos.push_back(std::move(pts));
    }
    json task = {{"task_name", t.task_name}, {"demonstrations", std::move(demos)}};
    if (t.timestamps) {
      task["timestamps"] = *t.timestamps;
    }
    tasks.push_back(std::move(task));
  }
  json j = {{"name", d.name},
            {"kind", to_string(d.kind)},
            {"dim", d.dim},
            {"recording_frequency", nullptr},
            {"tasks", std::move(tasks)}};
  if (d.recording_frequency) {
    j["recording_frequency"] = *d.recording_frequency;
  }
  return j;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot write " + tmp.string());
    }
    out << content;
    if (!out) {
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

DatasetFile load_dataset(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw DatasetError("dataset: " + path.string() + " is not valid JSON: " + e.what());
  }
  return dataset_from_json(j);
}

void save_dataset(const DatasetFile& d, const std::filesystem::path& path) {
  d.validate();
  write_file_atomic(path, dataset_to_json(d).dump() + "\n");
}

}  // namespace clfd::harness
