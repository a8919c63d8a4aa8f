#include "clfd/harness/experiment.hpp"

#include "clfd/metrics/trajectory_metrics.hpp"
#include "clfd/so3/quaternion.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace clfd::harness {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using strategies::Method;

std::vector<std::size_t> identity_order(std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  return order;
}

void check_permutation(const std::vector<std::size_t>& order, std::size_t n) {
  if (order.size() != n) {
    throw std::invalid_argument("config: task_order has " + std::to_string(order.size()) +
                                " entries, dataset has " + std::to_string(n) + " tasks");
  }
  std::vector<bool> seen(n, false);
  for (std::size_t idx : order) {
    if (idx >= n || seen[idx]) {
      throw std::invalid_argument("config: task_order is not a permutation of 0.." +
                                  std::to_string(n - 1));
    }
    seen[idx] = true;
  }
}

// Exp without the |r| < pi guard, so diverged predictions still map to a
// rotation (and then simply score as large errors).
so3::UnitQuaternion exp_unguarded(const Eigen::Vector3d& r) {
  const double n = r.norm();
  if (n < 1e-12) {
    return {};
  }
  return so3::UnitQuaternion(std::cos(n), std::sin(n) / n * r);
}

so3::QuaternionTrajectory back_to_quaternions(const Trajectory& pred, const so3::UnitQuaternion& goal) {
  so3::QuaternionTrajectory qt;
  qt.timestamps = pred.timestamps;
  for (Eigen::Index t = 0; t < pred.points.rows(); ++t) {
    qt.quats.push_back(goal * exp_unguarded(pred.points.row(t).transpose()).conjugate());
  }
  return qt;
}

std::string trajectory_csv(const Trajectory& pred, const so3::QuaternionTrajectory* quats) {
  std::ostringstream out;
  out << "t";
  for (std::size_t c = 0; c < pred.dim(); ++c) {
    out << ",x" << c;
  }
  if (quats != nullptr) {
    out << ",qw,qx,qy,qz";
  }
  out << "\n";
  for (Eigen::Index t = 0; t < pred.points.rows(); ++t) {
    out << metrics::format_number(pred.timestamps(t));
    for (Eigen::Index c = 0; c < pred.points.cols(); ++c) {
      out << "," << metrics::format_number(pred.points(t, c));
    }
    if (quats != nullptr) {
      const Eigen::Vector4d q = quats->quats[static_cast<std::size_t>(t)].coeffs();
      for (int c = 0; c < 4; ++c) {
        out << "," << metrics::format_number(q(c));
      }
    }
    out << "\n";
  }
  return out.str();
}

json accuracy_to_json(const Eigen::MatrixXd& A) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j <= i; ++j) {
      row.push_back(A(i, j));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string accuracy_error_name(metrics::AccuracyError e) {
  return e == metrics::AccuracyError::DTW ? "dtw" : "quat_error";
}

metrics::AccuracyError accuracy_error_from_name(const std::string& s) {
  if (s == "dtw") {
    return metrics::AccuracyError::DTW;
  }
  if (s == "quat_error") {
    return metrics::AccuracyError::Quaternion;
  }
  throw std::invalid_argument("bundle: unknown accuracy_error '" + s + "'");
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + " is not valid JSON: " + e.what());
  }
}

// The bundle's dataset.json is already subsampled and in training order.
ExperimentConfig bundle_replay_config(const fs::path& dir) {
  ExperimentConfig cfg = config_from_json(read_json(dir / "config.json"));
  cfg.task_order.clear();
  cfg.subsample_T = 0;
  return cfg;
}

double cell_error(const std::vector<metrics::DemoEvaluation>& demos, metrics::AccuracyError kind) {
  double sum = 0.0;
  for (const auto& d : demos) {
    sum += kind == metrics::AccuracyError::DTW ? d.dtw : d.quat_error.value_or(0.0);
  }
  return sum / static_cast<double>(demos.size());
}

}  // namespace

void ExperimentConfig::validate(std::size_t num_dataset_tasks) const {
  if (methods.empty()) {
    throw std::invalid_argument("config: methods is empty");
  }
  if (seeds.empty()) {
    throw std::invalid_argument("config: seeds is empty");
  }
  if (!task_order.empty()) {
    check_permutation(task_order, num_dataset_tasks);
  }
  if (subsample_T == 1) {
    throw std::invalid_argument("config: subsample_T must be 0 or >= 2");
  }
  if (!(threshold_multiplier > 0.0)) {
    throw std::invalid_argument("config: threshold_multiplier must be positive");
  }
  if (!(orientation_threshold_deg > 0.0)) {
    throw std::invalid_argument("config: orientation_threshold_deg must be positive");
  }
  if (largest_model_size && *largest_model_size == 0) {
    throw std::invalid_argument("config: largest_model_size must be positive");
  }
}

std::vector<std::size_t> ExperimentConfig::resolved_order(std::size_t num_dataset_tasks) const {
  return task_order.empty() ? identity_order(num_dataset_tasks) : task_order;
}

json config_to_json(const ExperimentConfig& c) {
  json methods = json::array();
  for (Method m : c.methods) {
    methods.push_back(strategies::to_string(m));
  }
  json strategy = c.strategy;
  strategy.erase("method");
  strategy.erase("seed");
  json j = {{"methods", methods},
            {"seeds", c.seeds},
            {"strategy", strategy},
            {"task_order", c.task_order},
            {"subsample_T", c.subsample_T},
            {"threshold_multiplier", c.threshold_multiplier},
            {"orientation_threshold_deg", c.orientation_threshold_deg},
            {"timing", metrics::to_string(c.timing)},
            {"largest_model_size", nullptr},
            {"dataset", c.dataset},
            {"output_dir", c.output_dir}};
  if (c.largest_model_size) {
    j["largest_model_size"] = *c.largest_model_size;
  }
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  static const std::set<std::string> known{
      "preset", "method", "methods", "seed", "seeds", "strategy", "task_order", "subsample_T",
      "threshold_multiplier", "orientation_threshold_deg", "timing", "largest_model_size",
      "dataset", "output_dir"};
  if (!j.is_object()) {
    throw std::invalid_argument("config: expected a JSON object");
  }
  for (const auto& [key, value] : j.items()) {
    if (known.count(key) == 0) {
      throw std::invalid_argument("config: unknown field '" + key + "'");
    }
  }
  try {
    ExperimentConfig c = j.contains("preset") ? preset(j["preset"].get<std::string>()) : ExperimentConfig{};
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j["methods"]) {
        c.methods.push_back(strategies::method_from_string(m.get<std::string>()));
      }
    } else if (j.contains("method")) {
      c.methods = {strategies::method_from_string(j["method"].get<std::string>())};
    }
    if (j.contains("seeds")) {
      c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    } else if (j.contains("seed")) {
      c.seeds = {j["seed"].get<std::uint64_t>()};
    }
    if (j.contains("strategy")) {
      json s = j["strategy"];
      if (!s.is_object()) {
        throw std::invalid_argument("config: field 'strategy' must be an object");
      }
      s["method"] = strategies::to_string(c.strategy.method);
      strategies::from_json(s, c.strategy);
    }
    c.task_order = j.value("task_order", c.task_order);
    c.subsample_T = j.value("subsample_T", c.subsample_T);
    c.threshold_multiplier = j.value("threshold_multiplier", c.threshold_multiplier);
    c.orientation_threshold_deg = j.value("orientation_threshold_deg", c.orientation_threshold_deg);
    if (j.contains("timing")) {
      c.timing = metrics::timing_clock_from_string(j["timing"].get<std::string>());
    }
    if (j.contains("largest_model_size")) {
      c.largest_model_size = j["largest_model_size"].is_null()
                                 ? std::nullopt
                                 : std::optional<std::uint64_t>(j["largest_model_size"].get<std::uint64_t>());
    }
    c.dataset = j.value("dataset", c.dataset);
    c.output_dir = j.value("output_dir", c.output_dir);
    return c;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: malformed field: ") + e.what());
  }
}

ExperimentConfig load_config(const fs::path& path) {
  return config_from_json(read_json(path));
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.methods = strategies::all_methods();
  c.seeds = {0, 1, 2};
  auto& s = c.strategy;
  if (name == "desk") {
    s.node.hidden = {64, 64};
    s.node.iterations = 2000;
    s.node.learning_rate = 5e-3;
    s.embedding_dim = 16;
    s.hypernet.hidden = {64, 64};
    s.hypernet.target_hidden = {32, 32};
    s.hypernet.chunked_target_hidden = {64, 64};
    s.hypernet.chunk_dim = 512;
    s.hypernet.chunk_embedding_dim = 16;
    c.subsample_T = 100;
    return c;
  }
  if (name == "lasa") {
    s.node.hidden = {1000, 1000, 1000};
    s.node.iterations = 15000;
    s.node.learning_rate = 1e-4;
    s.embedding_dim = 256;
    s.si_c = 0.3;
    s.si_xi = 0.3;
    s.mas_lambda = 0.1;
    s.hypernet.hidden = {200, 200, 200};
    s.hypernet.target_hidden = {100, 100, 100};
    s.hypernet.chunked_target_hidden = {1000, 1000, 1000};
    s.hypernet.beta = 0.005;
    s.hypernet.chunk_dim = 8192;
    s.hypernet.chunk_embedding_dim = 256;
    c.subsample_T = 0;
    return c;
  }
  throw std::invalid_argument("config: unknown preset '" + name + "' (expected desk or lasa)");
}

std::vector<PreparedTask> prepare_tasks(const DatasetFile& dataset, const ExperimentConfig& config) {
  const auto order = config.resolved_order(dataset.tasks.size());
  check_permutation(order, dataset.tasks.size());
  std::vector<PreparedTask> out;
  for (std::size_t idx : order) {
    PreparedTask p;
    p.dataset_index = idx;
    const DemonstrationSet raw = subsample(dataset.demonstration_set(idx), config.subsample_T);
    if (dataset.kind == DatasetKind::Position) {
      p.train = raw;
    } else {
      p.train.name = raw.name;
      p.train.recording_frequency = raw.recording_frequency;
      for (const auto& d : raw.demos) {
        p.quaternions.push_back(d.points);
        p.train.demos.push_back(so3::to_tangent_trajectory(so3::from_rows(d.points, d.timestamps)));
      }
    }
    p.train.validate();
    out.push_back(std::move(p));
  }
  return out;
}

double accuracy_threshold(const std::vector<PreparedTask>& tasks, DatasetKind kind,
                          const ExperimentConfig& config) {
  if (kind == DatasetKind::Quaternion) {
    return config.orientation_threshold_deg * std::numbers::pi / 180.0;
  }
  std::vector<std::vector<Eigen::MatrixXd>> pts;
  for (const auto& t : tasks) {
    std::vector<Eigen::MatrixXd> demos;
    for (const auto& d : t.train.demos) {
      demos.push_back(d.points);
    }
    pts.push_back(std::move(demos));
  }
  return metrics::dtw_threshold(pts, config.threshold_multiplier);
}

std::vector<metrics::DemoEvaluation> evaluate_task(const strategies::Strategy& s, std::size_t task_id,
                                                   const PreparedTask& task, DatasetKind kind,
                                                   std::vector<Trajectory>* predictions) {
  const auto preds = s.predict(task_id, task.train.start_states(), task.train.timestamps());
  std::vector<metrics::DemoEvaluation> out;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const auto e = metrics::trajectory_errors(task.train.demos[k].points, preds[k].points);
    metrics::DemoEvaluation ev{e.dtw, e.frechet, e.swept_area, std::nullopt};
    if (kind == DatasetKind::Quaternion) {
      const Eigen::MatrixXd& q = task.quaternions[k];
      const auto goal = so3::UnitQuaternion::from_vector(q.row(q.rows() - 1).transpose());
      const auto truth = so3::from_rows(q, task.train.timestamps());
      ev.quat_error = so3::quat_traj_error(truth, back_to_quaternions(preds[k], goal));
    }
    out.push_back(ev);
  }
  if (predictions != nullptr) {
    *predictions = preds;
  }
  return out;
}

ResultsBundle run_experiment(const ExperimentConfig& config, const DatasetFile& dataset, Method method,
                             std::uint64_t seed) {
  config.validate(dataset.tasks.size());
  const auto tasks = prepare_tasks(dataset, config);
  const std::size_t M = tasks.size();

  strategies::StrategyConfig sc = config.strategy;
  sc.method = method;
  sc.seed = seed;
  sc.state_dim = tasks.front().train.dim();
  sc.validate();

  ResultsBundle b;
  b.method = method;
  b.seed = seed;
  b.threshold = accuracy_threshold(tasks, dataset.kind, config);
  b.accuracy_error =
      dataset.kind == DatasetKind::Quaternion ? metrics::AccuracyError::Quaternion : metrics::AccuracyError::DTW;
  b.evaluation = metrics::EvaluationMatrix(M);
  b.final_predictions.resize(M);
  b.strategy = strategies::make_strategy(sc);

  for (std::size_t i = 0; i < M; ++i) {
    const auto report = b.strategy->learn_task(tasks[i].train);
    b.ledger.train_times.push_back(report.wall_clock_seconds);
    b.ledger.train_work.push_back(report.work);
    b.ledger.param_sizes.push_back(b.strategy->parameter_count());
    b.ledger.stored_sample_sizes.push_back(b.strategy->stored_sample_count());
    for (std::size_t j = 0; j <= i; ++j) {
      b.evaluation.set(i, j,
                       evaluate_task(*b.strategy, j, tasks[j], dataset.kind,
                                     i + 1 == M ? &b.final_predictions[j] : nullptr));
    }
    spdlog::info("{} seed {}: task {}/{} '{}' loss {:.6g}, mean error on it {:.6g}",
                 strategies::to_string(method), seed, i + 1, M, tasks[i].train.name,
                 report.loss_history.empty() ? 0.0 : report.loss_history.back(),
                 cell_error(b.evaluation.at(i, i), b.accuracy_error));
  }
  for (const auto& t : tasks) {
    b.ledger.total_dataset_size += t.train.point_count();
  }
  b.ledger.largest_model_size = config.largest_model_size;
  b.accuracy = metrics::accuracy_matrix(b.evaluation, b.threshold, b.accuracy_error);
  b.metrics = metrics::compute_metrics(b.accuracy, b.ledger, config.timing);
  return b;
}

DatasetFile processed_dataset(const DatasetFile& dataset, const ExperimentConfig& config) {
  DatasetFile out;
  out.name = dataset.name;
  out.kind = dataset.kind;
  out.dim = dataset.dim;
  out.recording_frequency = dataset.recording_frequency;
  for (std::size_t idx : config.resolved_order(dataset.tasks.size())) {
    const DemonstrationSet set = subsample(dataset.demonstration_set(idx), config.subsample_T);
    TaskRecord rec;
    rec.task_name = set.name;
    const Eigen::VectorXd& ts = set.timestamps();
    rec.timestamps = std::vector<double>(ts.data(), ts.data() + ts.size());
    for (const auto& d : set.demos) {
      rec.demonstrations.push_back(d.points);
    }
    out.tasks.push_back(std::move(rec));
  }
  return out;
}

fs::path cell_dir(const fs::path& root, Method method, std::uint64_t seed) {
  return root / strategies::to_string(method) / ("seed_" + std::to_string(seed));
}

void write_bundle(const ResultsBundle& b, const ExperimentConfig& config, const DatasetFile& processed,
                  const std::vector<PreparedTask>& tasks, const fs::path& dir) {
  fs::create_directories(dir);
  ExperimentConfig echo = config;
  echo.methods = {b.method};
  echo.seeds = {b.seed};
  write_file_atomic(dir / "config.json", config_to_json(echo).dump(2) + "\n");
  write_file_atomic(dir / "dataset.json", dataset_to_json(processed).dump() + "\n");
  write_file_atomic(dir / "eval_matrix.csv", metrics::evaluation_matrix_csv(b.evaluation));
  write_file_atomic(dir / "ledger.json", json(b.ledger).dump(2) + "\n");

  const json m = {{"method", strategies::to_string(b.method)},
                  {"seed", b.seed},
                  {"timing", metrics::to_string(config.timing)},
                  {"accuracy_error", accuracy_error_name(b.accuracy_error)},
                  {"threshold", b.threshold},
                  {"accuracy", accuracy_to_json(b.accuracy)},
                  {"metrics", b.metrics}};
  write_file_atomic(dir / "metrics.json", m.dump(2) + "\n");

  const bool quat = processed.kind == DatasetKind::Quaternion;
  for (std::size_t j = 0; j < b.final_predictions.size(); ++j) {
    for (std::size_t k = 0; k < b.final_predictions[j].size(); ++k) {
      const Trajectory& pred = b.final_predictions[j][k];
      std::string text;
      if (quat) {
        const Eigen::MatrixXd& q = tasks[j].quaternions[k];
        const auto goal = so3::UnitQuaternion::from_vector(q.row(q.rows() - 1).transpose());
        const auto qt = back_to_quaternions(pred, goal);
        text = trajectory_csv(pred, &qt);
      } else {
        text = trajectory_csv(pred, nullptr);
      }
      write_file_atomic(dir / "predictions" /
                            ("task_" + std::to_string(j) + "_demo_" + std::to_string(k) + ".csv"),
                        text);
    }
  }
  if (b.strategy) {
    b.strategy->save(dir / "state");
  }
}

std::vector<ResultsBundle> run_all(const ExperimentConfig& config, const DatasetFile& dataset) {
  config.validate(dataset.tasks.size());
  const fs::path root(config.output_dir);
  const DatasetFile processed = processed_dataset(dataset, config);
  const auto tasks = prepare_tasks(dataset, config);
  std::vector<ResultsBundle> out;
  std::string csv = metrics::metrics_csv_header() + "\n";
  for (Method method : config.methods) {
    for (std::uint64_t seed : config.seeds) {
      ResultsBundle b = run_experiment(config, dataset, method, seed);
      write_bundle(b, config, processed, tasks, cell_dir(root, method, seed));
      csv += metrics::metrics_csv_row(strategies::to_string(method), seed, b.metrics) + "\n";
      out.push_back(std::move(b));
    }
  }
  write_file_atomic(root / "metrics.csv", csv);
  return out;
}

BundleSummary summarize_bundle(const fs::path& dir, std::optional<std::uint64_t> largest_model_size) {
  const json m = read_json(dir / "metrics.json");
  BundleSummary s;
  s.method = m.at("method").get<std::string>();
  s.seed = m.at("seed").get<std::uint64_t>();
  const double threshold = m.at("threshold").get<double>();
  const auto kind = accuracy_error_from_name(m.at("accuracy_error").get<std::string>());
  const auto clock = metrics::timing_clock_from_string(m.at("timing").get<std::string>());
  const auto ev = metrics::evaluation_matrix_from_csv(read_file(dir / "eval_matrix.csv"));
  s.ledger = read_json(dir / "ledger.json").get<metrics::RunLedger>();
  if (largest_model_size) {
    s.ledger.largest_model_size = largest_model_size;
  }
  s.accuracy = metrics::accuracy_matrix(ev, threshold, kind);
  s.metrics = metrics::compute_metrics(s.accuracy, s.ledger, clock);
  return s;
}

json reevaluate_bundle(const fs::path& dir) {
  const ExperimentConfig cfg = bundle_replay_config(dir);
  const DatasetFile processed = load_dataset(dir / "dataset.json");
  const auto tasks = prepare_tasks(processed, cfg);
  const auto strategy = strategies::Strategy::load(dir / "state");
  const auto recorded = metrics::evaluation_matrix_from_csv(read_file(dir / "eval_matrix.csv"));
  const json m = read_json(dir / "metrics.json");
  const double threshold = m.at("threshold").get<double>();
  const auto kind = accuracy_error_from_name(m.at("accuracy_error").get<std::string>());

  const std::size_t M = strategy->num_tasks();
  if (M != tasks.size() || recorded.num_tasks() != M) {
    throw std::runtime_error("bundle: state, dataset and eval_matrix disagree on the task count");
  }
  bool matches = true;
  double max_diff = 0.0;
  json rows = json::array();
  for (std::size_t j = 0; j < M; ++j) {
    const auto evals = evaluate_task(*strategy, j, tasks[j], processed.kind);
    const auto& rec = recorded.at(M - 1, j);
    double dtw = 0.0, fr = 0.0, sa = 0.0, qe = 0.0;
    std::size_t hits = 0;
    for (std::size_t k = 0; k < evals.size(); ++k) {
      const auto& e = evals[k];
      dtw += e.dtw;
      fr += e.frechet;
      sa += e.swept_area;
      qe += e.quat_error.value_or(0.0);
      const double err = kind == metrics::AccuracyError::DTW ? e.dtw : e.quat_error.value_or(0.0);
      hits += err < threshold ? 1 : 0;
      const double diff = std::abs(e.dtw - rec[k].dtw);
      max_diff = std::max(max_diff, diff);
      matches = matches && diff == 0.0;
    }
    const double n = static_cast<double>(evals.size());
    json row = {{"task", j},
                {"name", tasks[j].train.name},
                {"dtw", dtw / n},
                {"frechet", fr / n},
                {"swept_area", sa / n},
                {"accuracy", static_cast<double>(hits) / n}};
    if (processed.kind == DatasetKind::Quaternion) {
      row["quat_error"] = qe / n;
    }
    rows.push_back(std::move(row));
  }
  return {{"method", strategies::to_string(strategy->method())},
          {"seed", strategy->config().seed},
          {"tasks", rows},
          {"matches_recorded", matches},
          {"max_abs_dtw_difference", max_diff}};
}

std::vector<RobustnessSample> robustness_start(const strategies::Strategy& s, std::size_t task_id,
                                               const DemonstrationSet& demos, std::size_t n, double radius,
                                               std::uint64_t seed) {
  if (task_id >= s.num_tasks()) {
    throw strategies::UnknownTask("robustness: unknown task " + std::to_string(task_id) + " (model has " +
                                  std::to_string(s.num_tasks()) + ")");
  }
  if (radius < 0.0) {
    throw std::invalid_argument("robustness: radius must be >= 0");
  }
  const Trajectory& demo = demos.demos.front();
  const Eigen::VectorXd start = demo.points.row(0).transpose();
  const Eigen::VectorXd goal = demo.points.row(demo.points.rows() - 1).transpose();
  const auto d = static_cast<Eigen::Index>(demo.dim());

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd starts(static_cast<Eigen::Index>(n), d);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd dir(d);
    for (Eigen::Index c = 0; c < d; ++c) {
      dir(c) = normal(rng);
    }
    const double norm = dir.norm();
    const double r = radius * std::pow(unit(rng), 1.0 / static_cast<double>(d));
    const Eigen::VectorXd offset = norm > 0.0 ? Eigen::VectorXd(dir * (r / norm)) : Eigen::VectorXd::Zero(d);
    starts.row(static_cast<Eigen::Index>(i)) = (start + offset).transpose();
  }
  const auto preds = s.predict(task_id, starts, demo.timestamps);
  std::vector<RobustnessSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    RobustnessSample rs;
    rs.start = starts.row(static_cast<Eigen::Index>(i)).transpose();
    rs.start_delta = (rs.start - start).norm();
    const Eigen::MatrixXd& p = preds[i].points;
    rs.end_delta = (p.row(p.rows() - 1).transpose() - goal).norm();
    out.push_back(std::move(rs));
  }
  return out;
}

std::string robustness_csv(const std::vector<RobustnessSample>& samples) {
  std::ostringstream out;
  out << "sample";
  const Eigen::Index d = samples.empty() ? 0 : samples.front().start.size();
  for (Eigen::Index c = 0; c < d; ++c) {
    out << ",start_x" << c;
  }
  out << ",start_delta,end_delta\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out << i;
    for (Eigen::Index c = 0; c < d; ++c) {
      out << "," << metrics::format_number(samples[i].start(c));
    }
    out << "," << metrics::format_number(samples[i].start_delta) << ","
        << metrics::format_number(samples[i].end_delta) << "\n";
  }
  return out.str();
}

std::vector<TaskOrderRow> run_task_order_study(const ExperimentConfig& config, const DatasetFile& dataset,
                                               const std::vector<std::vector<std::size_t>>& orders) {
  if (orders.empty()) {
    throw std::invalid_argument("task-order: no orders given");
  }
  const std::size_t N = dataset.tasks.size();
  for (const auto& o : orders) {
    check_permutation(o, N);
  }
  const fs::path root(config.output_dir);
  std::vector<TaskOrderRow> rows;
  for (std::size_t k = 0; k < orders.size(); ++k) {
    ExperimentConfig ck = config;
    ck.task_order = orders[k];
    ck.output_dir = (root / ("order_" + std::to_string(k))).string();
    const auto bundles = run_all(ck, dataset);
    for (const auto& b : bundles) {
      TaskOrderRow row;
      row.order_index = k;
      row.order = orders[k];
      row.method = strategies::to_string(b.method);
      row.seed = b.seed;
      row.metrics = b.metrics;
      row.diagonal_error.assign(N, 0.0);
      for (std::size_t i = 0; i < N; ++i) {
        row.diagonal_error[orders[k][i]] = cell_error(b.evaluation.at(i, i), b.accuracy_error);
      }
      rows.push_back(std::move(row));
    }
  }

  std::string header = "order_index,order," + metrics::metrics_csv_header();
  for (std::size_t t = 0; t < N; ++t) {
    header += ",diag_" + std::to_string(t);
  }
  std::string csv = header + "\n";
  for (const auto& r : rows) {
    std::string order;
    for (std::size_t i = 0; i < r.order.size(); ++i) {
      order += (i == 0 ? "" : "-") + std::to_string(r.order[i]);
    }
    csv += std::to_string(r.order_index) + "," + order + "," +
           metrics::metrics_csv_row(r.method, r.seed, r.metrics);
    for (double e : r.diagonal_error) {
      csv += "," + metrics::format_number(e);
    }
    csv += "\n";
  }
  write_file_atomic(root / "task_order_report.csv", csv);
  return rows;
}

}  // namespace clfd::harness
