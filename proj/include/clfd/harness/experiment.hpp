#pragma once

#include "clfd/harness/dataset.hpp"
#include "clfd/metrics/cl_metrics.hpp"
#include "clfd/strategies/strategy.hpp"

#include "json.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace clfd::harness {

/// Everything a sequential run needs besides the dataset itself.
struct ExperimentConfig {
  /// Template for every cell; method and seed are overwritten per cell.
  strategies::StrategyConfig strategy;
  std::vector<strategies::Method> methods{strategies::Method::SG};
  std::vector<std::uint64_t> seeds{0};
  /// Permutation of dataset task indices; empty means dataset order.
  std::vector<std::size_t> task_order;
  /// Demo length after subsampling; 0 keeps the original length.
  std::size_t subsample_T = 100;
  double threshold_multiplier = 3.0;
  double orientation_threshold_deg = 10.0;
  metrics::TimingClock timing = metrics::TimingClock::Work;
  std::optional<std::uint64_t> largest_model_size;
  std::string dataset;
  std::string output_dir = "results";

  void validate(std::size_t num_dataset_tasks) const;
  std::vector<std::size_t> resolved_order(std::size_t num_dataset_tasks) const;
};

nlohmann::json config_to_json(const ExperimentConfig& c);
/// Unknown keys are rejected so typos do not silently fall back to defaults.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Named presets: "desk" (small scale-down) and "lasa" (full-size
/// networks of the LASA setting).
ExperimentConfig preset(const std::string& name);

/// Processed per-task demonstrations in training order, after subsampling
/// and (for orientation data) the tangent-space transform.
struct PreparedTask {
  std::size_t dataset_index = 0;
  DemonstrationSet train;  ///< what the strategy sees
  /// Ground-truth orientation demos (scalar-first rows); empty for positions.
  std::vector<Eigen::MatrixXd> quaternions;
};

std::vector<PreparedTask> prepare_tasks(const DatasetFile& dataset, const ExperimentConfig& config);

/// Accuracy threshold: 3x (or the configured multiple of) the largest
/// inter-demo DTW for position data, the fixed angle for orientation data.
double accuracy_threshold(const std::vector<PreparedTask>& tasks, DatasetKind kind,
                          const ExperimentConfig& config);

struct ResultsBundle {
  strategies::Method method = strategies::Method::SG;
  std::uint64_t seed = 0;
  metrics::EvaluationMatrix evaluation;
  metrics::RunLedger ledger;
  Eigen::MatrixXd accuracy;
  double threshold = 0.0;
  metrics::AccuracyError accuracy_error = metrics::AccuracyError::DTW;
  metrics::MetricsRecord metrics;
  /// Predictions of the final model, per training-order task and demo.
  std::vector<std::vector<Trajectory>> final_predictions;
  std::unique_ptr<strategies::Strategy> strategy;
};

/// Errors of every demo of `task` under the strategy's current model.
std::vector<metrics::DemoEvaluation> evaluate_task(const strategies::Strategy& s,
                                                   std::size_t task_id, const PreparedTask& task,
                                                   DatasetKind kind,
                                                   std::vector<Trajectory>* predictions = nullptr);

/// Trains one (method, seed) cell through the whole task sequence,
/// evaluating all seen tasks after each one.
ResultsBundle run_experiment(const ExperimentConfig& config, const DatasetFile& dataset,
                             strategies::Method method, std::uint64_t seed);

/// Writes eval_matrix.csv, ledger.json, metrics.json, config.json,
/// dataset.json, predictions/ and state/ into `dir`.
void write_bundle(const ResultsBundle& bundle, const ExperimentConfig& config,
                  const DatasetFile& processed, const std::vector<PreparedTask>& tasks,
                  const std::filesystem::path& dir);

/// Processed dataset in training order (what dataset.json in a bundle holds).
DatasetFile processed_dataset(const DatasetFile& dataset, const ExperimentConfig& config);

/// Bundle directory of one cell below the output root.
std::filesystem::path cell_dir(const std::filesystem::path& root, strategies::Method method,
                               std::uint64_t seed);

/// Runs every (method, seed) cell, writes the bundles plus `metrics.csv`
/// under config.output_dir, and returns the bundles in cell order.
std::vector<ResultsBundle> run_all(const ExperimentConfig& config, const DatasetFile& dataset);

/// Metrics recomputed from a bundle's eval_matrix.csv and ledger.json.
struct BundleSummary {
  std::string method;
  std::uint64_t seed = 0;
  metrics::MetricsRecord metrics;
  metrics::RunLedger ledger;
  Eigen::MatrixXd accuracy;
};
BundleSummary summarize_bundle(const std::filesystem::path& dir,
                               std::optional<std::uint64_t> largest_model_size = std::nullopt);

/// Re-evaluates the saved final model against the bundle's processed data;
/// returns a JSON report with per-task mean errors.
nlohmann::json reevaluate_bundle(const std::filesystem::path& dir);

struct RobustnessSample {
  Eigen::VectorXd start;
  double start_delta = 0.0;
  double end_delta = 0.0;
};

/// Samples `n` starts uniformly in the ball of `radius` around the first
/// demo's start of training-order task `task_id`, predicts with the demo's
/// timestamps, and records start and end offsets. Deterministic in `seed`.
std::vector<RobustnessSample> robustness_start(const strategies::Strategy& s, std::size_t task_id,
                                               const DemonstrationSet& demos, std::size_t n,
                                               double radius, std::uint64_t seed);
std::string robustness_csv(const std::vector<RobustnessSample>& samples);

struct TaskOrderRow {
  std::size_t order_index = 0;
  std::vector<std::size_t> order;
  std::string method;
  std::uint64_t seed = 0;
  metrics::MetricsRecord metrics;
  /// Mean DTW (or E_q) of each dataset task right after it was learned.
  std::vector<double> diagonal_error;
};

/// run_all per order under <output_dir>/order_<k>; writes
/// task_order_report.csv with one row per (order, method, seed).
std::vector<TaskOrderRow> run_task_order_study(const ExperimentConfig& config,
                                               const DatasetFile& dataset,
                                               const std::vector<std::vector<std::size_t>>& orders);

}  // namespace clfd::harness
