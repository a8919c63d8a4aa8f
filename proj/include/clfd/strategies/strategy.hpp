#pragma once

#include "clfd/node/node.hpp"
#include "clfd/node/trajectory.hpp"
#include "clfd/strategies/hypernet.hpp"

#include "json.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace clfd::strategies {

enum class Method { SG, FT, REP, SI, MAS, HN, CHN };

std::string to_string(Method m);
Method method_from_string(const std::string& name);
const std::vector<Method>& all_methods();

struct NodeSettings {
  std::vector<std::size_t> hidden{64, 64};
  bool time_input = true;
  std::size_t iterations = 2000;
  double learning_rate = 1e-3;
  node::Integrator integrator = node::Integrator::Euler;
};

struct HypernetSettings {
  std::vector<std::size_t> hidden{64, 64};
  /// Hidden layers of the generated NODE.
  std::vector<std::size_t> target_hidden{32, 32};
  /// Generated NODE width for CHN; empty means target_hidden.
  std::vector<std::size_t> chunked_target_hidden;
  double beta = 0.005;
  std::size_t chunk_dim = 512;
  std::size_t chunk_embedding_dim = 16;
  /// Learning rate for the hypernetwork; 0 means "use the NODE rate".
  double learning_rate = 0.0;
};

struct StrategyConfig {
  Method method = Method::SG;
  std::size_t state_dim = 2;
  NodeSettings node;
  std::size_t embedding_dim = 16;
  double si_c = 0.3;
  double si_xi = 0.3;
  double mas_lambda = 0.1;
  HypernetSettings hypernet;
  std::uint64_t seed = 0;

  /// NODE shape used by this method (SG has no embedding input; FT, REP, SI
  /// and MAS take the task embedding; HN/CHN generate a NODE of
  /// hypernet.target_hidden width).
  node::NodeConfig node_config() const;
  /// Only meaningful for HN and CHN.
  HypernetConfig hypernet_config() const;
  void validate() const;
};

void to_json(nlohmann::json& j, const StrategyConfig& c);
void from_json(const nlohmann::json& j, StrategyConfig& c);

/// Trainable scalars held after `num_tasks` tasks, computed from the
/// configuration alone.
std::size_t expected_parameter_count(const StrategyConfig& config, std::size_t num_tasks);

struct LearnReport {
  double wall_clock_seconds = 0.0;
  std::uint64_t work = 0;
  std::vector<double> loss_history;
};

class UnknownTask : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Failure inside learn_task, tagged with the task index it happened on.
class StrategyError : public std::runtime_error {
 public:
  StrategyError(const std::string& what, std::size_t task) : std::runtime_error(what), task_(task) {}
  std::size_t task() const { return task_; }

 private:
  std::size_t task_;
};

/// Uniform draw of a task index in [0, m] for replay.
class TaskSelector {
 public:
  explicit TaskSelector(std::uint64_t seed) : rng_(seed) {}
  std::size_t draw(std::size_t num_tasks);
  std::mt19937_64& rng() { return rng_; }
  const std::mt19937_64& rng() const { return rng_; }

 private:
  std::mt19937_64 rng_;
};

/// Common contract of the continual-learning strategies. Tasks are learned
/// in sequence and addressed by their position in that sequence.
class Strategy {
 public:
  explicit Strategy(StrategyConfig config);
  virtual ~Strategy() = default;

  Method method() const { return config_.method; }
  const StrategyConfig& config() const { return config_; }
  std::size_t num_tasks() const { return num_tasks_; }

  /// Trains on one new task. Errors are rethrown as StrategyError.
  LearnReport learn_task(const DemonstrationSet& demos);

  /// Integrates the model for `task_id` from every row of `y0`.
  virtual std::vector<Trajectory> predict(std::size_t task_id, const Eigen::MatrixXd& y0,
                                          const Eigen::VectorXd& timestamps) const = 0;
  Trajectory predict_one(std::size_t task_id, const Eigen::VectorXd& y0,
                         const Eigen::VectorXd& timestamps) const;

  virtual std::size_t parameter_count() const = 0;
  /// Demo points cached for later training.
  virtual std::size_t stored_sample_count() const { return 0; }

  /// Writes manifest.json plus parameter blobs into `dir`.
  void save(const std::filesystem::path& dir) const;
  static std::unique_ptr<Strategy> load(const std::filesystem::path& dir);

  static constexpr int kFormatVersion = 1;

 protected:
  virtual LearnReport do_learn(const DemonstrationSet& demos) = 0;
  virtual void save_state(nlohmann::json& manifest, const std::filesystem::path& dir) const = 0;
  virtual void load_state(const nlohmann::json& manifest, const std::filesystem::path& dir) = 0;
  void check_task(std::size_t task_id) const;

  StrategyConfig config_;
  std::mt19937_64 rng_;
  std::size_t num_tasks_ = 0;
};

std::unique_ptr<Strategy> make_strategy(const StrategyConfig& config);

}  // namespace clfd::strategies
