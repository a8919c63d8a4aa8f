#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace clfd::metrics {

/// Errors of one predicted trajectory against its demo. `quat_error` is set
/// only for orientation tasks.
struct DemoEvaluation {
  double dtw = 0.0;
  double frechet = 0.0;
  double swept_area = 0.0;
  std::optional<double> quat_error;
};

/// Lower-triangular record: cell (i, j), j <= i, holds the per-demo errors on
/// task j after training task i.
class EvaluationMatrix {
 public:
  explicit EvaluationMatrix(std::size_t num_tasks = 0);

  std::size_t num_tasks() const { return cells_.size(); }
  void set(std::size_t after_task, std::size_t eval_task, std::vector<DemoEvaluation> demos);
  const std::vector<DemoEvaluation>& at(std::size_t after_task, std::size_t eval_task) const;
  bool has(std::size_t after_task, std::size_t eval_task) const;
  /// Throws unless every cell j <= i is non-empty.
  void validate() const;

 private:
  std::vector<std::vector<std::vector<DemoEvaluation>>> cells_;
};

/// Which per-demo error the accuracy threshold applies to.
enum class AccuracyError { DTW, Quaternion };

/// Max over tasks of the largest pairwise inter-demo DTW, times `multiplier`.
/// Each task is a list of T x d point matrices; every task needs >= 2 demos.
double dtw_threshold(const std::vector<std::vector<Eigen::MatrixXd>>& tasks, double multiplier);

/// A(i, j) = fraction of demos in cell (i, j) with error strictly below the
/// threshold. Entries above the diagonal are NaN.
Eigen::MatrixXd accuracy_matrix(const EvaluationMatrix& ev, double threshold,
                                AccuracyError kind = AccuracyError::DTW);

enum class TimingClock { Work, Wall };

std::string to_string(TimingClock c);
TimingClock timing_clock_from_string(const std::string& name);

/// Per-task costs of a sequential run. Vectors are indexed by training step.
struct RunLedger {
  std::vector<double> train_times;           ///< wall-clock seconds
  std::vector<std::uint64_t> train_work;     ///< multiply-adds spent training
  std::vector<std::uint64_t> param_sizes;    ///< trainable scalars after each task
  std::vector<std::uint64_t> stored_sample_sizes;  ///< cached demo points after each task
  std::uint64_t total_dataset_size = 0;      ///< demo points over all tasks
  std::optional<std::uint64_t> largest_model_size;

  std::size_t num_tasks() const { return param_sizes.size(); }
  void validate() const;
};

struct MetricsRecord {
  double acc = 0.0;
  double bwt = 0.0;
  double rem = 0.0;
  double ms = 0.0;
  double te = 0.0;
  double fs = 0.0;
  double sss = 0.0;
  double cl_score = 0.0;      ///< mean of the six base metrics
  double cl_score_sum = 0.0;  ///< sum of the six base metrics
  double cl_stability = 0.0;  ///< 1 - sample standard deviation of the six
};

double accuracy(const Eigen::MatrixXd& A);
double backward_transfer(const Eigen::MatrixXd& A);
double remembering(const Eigen::MatrixXd& A);
double model_size_efficiency(const std::vector<std::uint64_t>& param_sizes);
double sample_storage_efficiency(const std::vector<std::uint64_t>& stored, std::uint64_t total);
double time_efficiency(const std::vector<double>& times);
double final_model_size(std::uint64_t final_size, std::uint64_t largest);

/// All metrics from an accuracy matrix and a run ledger. FS uses
/// ledger.largest_model_size, or the run's own final size when unset.
MetricsRecord compute_metrics(const Eigen::MatrixXd& A, const RunLedger& ledger,
                              TimingClock clock = TimingClock::Work);

/// Fills cl_score, cl_score_sum and cl_stability from the six base metrics.
void aggregate_scores(MetricsRecord& m);

void to_json(nlohmann::json& j, const DemoEvaluation& e);
void to_json(nlohmann::json& j, const RunLedger& l);
void from_json(const nlohmann::json& j, RunLedger& l);
void to_json(nlohmann::json& j, const MetricsRecord& m);
void from_json(const nlohmann::json& j, MetricsRecord& m);

/// CSV header/row with columns method, seed, then the metric fields.
std::string metrics_csv_header();
std::string metrics_csv_row(const std::string& method, std::uint64_t seed, const MetricsRecord& m);

/// eval_matrix.csv content: after_task, eval_task, demo_idx, dtw, frechet,
/// swept_area, quat_error (empty when absent).
std::string evaluation_matrix_csv(const EvaluationMatrix& ev);
EvaluationMatrix evaluation_matrix_from_csv(const std::string& text);

/// Shortest round-trip decimal, used in every emitted file.
std::string format_number(double x);

}  // namespace clfd::metrics
