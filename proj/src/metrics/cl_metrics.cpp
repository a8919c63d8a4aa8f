#include "clfd/metrics/cl_metrics.hpp"

#include "clfd/metrics/trajectory_metrics.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace clfd::metrics {

EvaluationMatrix::EvaluationMatrix(std::size_t num_tasks) : cells_(num_tasks) {
  for (std::size_t i = 0; i < num_tasks; ++i) {
    cells_[i].resize(i + 1);
  }
}

void EvaluationMatrix::set(std::size_t after_task, std::size_t eval_task,
                           std::vector<DemoEvaluation> demos) {
  if (after_task >= cells_.size() || eval_task > after_task) {
    throw std::out_of_range("EvaluationMatrix: cell (" + std::to_string(after_task) + ", " +
                            std::to_string(eval_task) + ") is outside the lower triangle");
  }
  cells_[after_task][eval_task] = std::move(demos);
}

const std::vector<DemoEvaluation>& EvaluationMatrix::at(std::size_t after_task,
                                                        std::size_t eval_task) const {
  if (after_task >= cells_.size() || eval_task > after_task) {
    throw std::out_of_range("EvaluationMatrix: cell (" + std::to_string(after_task) + ", " +
                            std::to_string(eval_task) + ") is outside the lower triangle");
  }
  return cells_[after_task][eval_task];
}

bool EvaluationMatrix::has(std::size_t after_task, std::size_t eval_task) const {
  return after_task < cells_.size() && eval_task <= after_task &&
         !cells_[after_task][eval_task].empty();
}

void EvaluationMatrix::validate() const {
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      if (cells_[i][j].empty()) {
        throw std::invalid_argument("EvaluationMatrix: cell (" + std::to_string(i) + ", " +
                                    std::to_string(j) + ") is empty");
      }
    }
  }
}

double dtw_threshold(const std::vector<std::vector<Eigen::MatrixXd>>& tasks, double multiplier) {
  if (tasks.empty()) {
    throw std::invalid_argument("dtw_threshold: no tasks");
  }
  double worst = 0.0;
  for (std::size_t m = 0; m < tasks.size(); ++m) {
    const auto& demos = tasks[m];
    if (demos.size() < 2) {
      throw std::invalid_argument("dtw_threshold: task " + std::to_string(m) +
                                  " has fewer than 2 demos");
    }
    for (std::size_t a = 0; a < demos.size(); ++a) {
      for (std::size_t b = a + 1; b < demos.size(); ++b) {
        worst = std::max(worst, dtw(demos[a], demos[b]));
      }
    }
  }
  return worst * multiplier;
}

Eigen::MatrixXd accuracy_matrix(const EvaluationMatrix& ev, double threshold, AccuracyError kind) {
  ev.validate();
  const auto M = static_cast<Eigen::Index>(ev.num_tasks());
  Eigen::MatrixXd A = Eigen::MatrixXd::Constant(M, M, std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index i = 0; i < M; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const auto& cell = ev.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      std::size_t pass = 0;
      for (const auto& d : cell) {
        double e = d.dtw;
        if (kind == AccuracyError::Quaternion) {
          if (!d.quat_error) {
            throw std::invalid_argument("accuracy_matrix: cell lacks orientation errors");
          }
          e = *d.quat_error;
        }
        if (e < threshold) {
          ++pass;
        }
      }
      A(i, j) = static_cast<double>(pass) / static_cast<double>(cell.size());
    }
  }
  return A;
}

std::string to_string(TimingClock c) {
  return c == TimingClock::Work ? "work" : "wall";
}

TimingClock timing_clock_from_string(const std::string& name) {
  if (name == "work") {
    return TimingClock::Work;
  }
  if (name == "wall") {
    return TimingClock::Wall;
  }
  throw std::invalid_argument("unknown timing clock '" + name + "' (expected work or wall)");
}

void RunLedger::validate() const {
  const std::size_t M = param_sizes.size();
  if (M == 0) {
    throw std::invalid_argument("RunLedger: no tasks recorded");
  }
  if (train_times.size() != M || train_work.size() != M || stored_sample_sizes.size() != M) {
    throw std::invalid_argument("RunLedger: per-task vectors have inconsistent lengths");
  }
}

double accuracy(const Eigen::MatrixXd& A) {
  double sum = 0.0;
  std::size_t n = 0;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      sum += A(i, j);
      ++n;
    }
  }
  if (n == 0) {
    throw std::invalid_argument("accuracy: empty matrix");
  }
  return sum / static_cast<double>(n);
}

double backward_transfer(const Eigen::MatrixXd& A) {
  double sum = 0.0;
  std::size_t n = 0;
  for (Eigen::Index i = 1; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      sum += A(i, j) - A(j, j);
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double remembering(const Eigen::MatrixXd& A) {
  return 1.0 - std::abs(std::min(backward_transfer(A), 0.0));
}

double model_size_efficiency(const std::vector<std::uint64_t>& param_sizes) {
  if (param_sizes.empty()) {
    throw std::invalid_argument("model_size_efficiency: no tasks");
  }
  double sum = 0.0;
  for (auto s : param_sizes) {
    if (s == 0) {
      throw std::invalid_argument("model_size_efficiency: zero model size");
    }
    sum += static_cast<double>(param_sizes.front()) / static_cast<double>(s);
  }
  return std::min(1.0, sum / static_cast<double>(param_sizes.size()));
}

double sample_storage_efficiency(const std::vector<std::uint64_t>& stored, std::uint64_t total) {
  if (stored.empty()) {
    throw std::invalid_argument("sample_storage_efficiency: no tasks");
  }
  if (total == 0) {
    throw std::invalid_argument("sample_storage_efficiency: zero dataset size");
  }
  double sum = 0.0;
  for (auto s : stored) {
    sum += static_cast<double>(s) / static_cast<double>(total);
  }
  return 1.0 - std::min(1.0, sum / static_cast<double>(stored.size()));
}

double time_efficiency(const std::vector<double>& times) {
  if (times.empty()) {
    throw std::invalid_argument("time_efficiency: no tasks");
  }
  // Summing the ratios T0/Ti keeps constant times at exactly 1.
  double sum = 0.0;
  for (double t : times) {
    if (!(t > 0.0)) {
      throw std::invalid_argument("time_efficiency: training time must be positive");
    }
    sum += times.front() / t;
  }
  return std::min(1.0, sum / static_cast<double>(times.size()));
}

double final_model_size(std::uint64_t final_size, std::uint64_t largest) {
  if (largest == 0) {
    throw std::invalid_argument("final_model_size: zero normalizer");
  }
  if (final_size > largest) {
    throw std::invalid_argument("final_model_size: model larger than the normalizer");
  }
  return 1.0 - static_cast<double>(final_size) / static_cast<double>(largest);
}

MetricsRecord compute_metrics(const Eigen::MatrixXd& A, const RunLedger& ledger,
                              TimingClock clock) {
  ledger.validate();
  const std::size_t M = ledger.num_tasks();
  if (static_cast<std::size_t>(A.rows()) != M || A.rows() != A.cols()) {
    throw std::invalid_argument("compute_metrics: accuracy matrix is not " + std::to_string(M) +
                                "x" + std::to_string(M));
  }
  MetricsRecord m;
  m.acc = accuracy(A);
  m.bwt = backward_transfer(A);
  m.rem = 1.0 - std::abs(std::min(m.bwt, 0.0));
  m.ms = model_size_efficiency(ledger.param_sizes);
  m.sss = sample_storage_efficiency(ledger.stored_sample_sizes, ledger.total_dataset_size);
  std::vector<double> times;
  if (clock == TimingClock::Wall) {
    times = ledger.train_times;
  } else {
    times.assign(ledger.train_work.begin(), ledger.train_work.end());
  }
  m.te = time_efficiency(times);
  m.fs = final_model_size(ledger.param_sizes.back(),
                          ledger.largest_model_size.value_or(ledger.param_sizes.back()));

  aggregate_scores(m);
  return m;
}

void aggregate_scores(MetricsRecord& m) {
  const std::array<double, 6> base{m.acc, m.rem, m.ms, m.te, m.fs, m.sss};
  m.cl_score_sum = std::accumulate(base.begin(), base.end(), 0.0);
  m.cl_score = m.cl_score_sum / 6.0;
  double ss = 0.0;
  for (double b : base) {
    ss += (b - m.cl_score) * (b - m.cl_score);
  }
  m.cl_stability = 1.0 - std::sqrt(ss / 5.0);
}

void to_json(nlohmann::json& j, const DemoEvaluation& e) {
  j = {{"dtw", e.dtw}, {"frechet", e.frechet}, {"swept_area", e.swept_area}};
  if (e.quat_error) {
    j["quat_error"] = *e.quat_error;
  }
}

void to_json(nlohmann::json& j, const RunLedger& l) {
  j = {{"train_times", l.train_times},
       {"train_work", l.train_work},
       {"param_sizes", l.param_sizes},
       {"stored_sample_sizes", l.stored_sample_sizes},
       {"total_dataset_size", l.total_dataset_size},
       {"largest_model_size", nullptr}};
  if (l.largest_model_size) {
    j["largest_model_size"] = *l.largest_model_size;
  }
}

void from_json(const nlohmann::json& j, RunLedger& l) {
  j.at("train_times").get_to(l.train_times);
  j.at("train_work").get_to(l.train_work);
  j.at("param_sizes").get_to(l.param_sizes);
  j.at("stored_sample_sizes").get_to(l.stored_sample_sizes);
  j.at("total_dataset_size").get_to(l.total_dataset_size);
  l.largest_model_size.reset();
  if (j.contains("largest_model_size") && !j["largest_model_size"].is_null()) {
    l.largest_model_size = j["largest_model_size"].get<std::uint64_t>();
  }
}

void to_json(nlohmann::json& j, const MetricsRecord& m) {
  j = {{"acc", m.acc},           {"bwt", m.bwt},
       {"rem", m.rem},           {"ms", m.ms},
       {"te", m.te},             {"fs", m.fs},
       {"sss", m.sss},           {"cl_score", m.cl_score},
       {"cl_score_sum", m.cl_score_sum}, {"cl_stability", m.cl_stability}};
}

void from_json(const nlohmann::json& j, MetricsRecord& m) {
  j.at("acc").get_to(m.acc);
  j.at("bwt").get_to(m.bwt);
  j.at("rem").get_to(m.rem);
  j.at("ms").get_to(m.ms);
  j.at("te").get_to(m.te);
  j.at("fs").get_to(m.fs);
  j.at("sss").get_to(m.sss);
  j.at("cl_score").get_to(m.cl_score);
  j.at("cl_score_sum").get_to(m.cl_score_sum);
  j.at("cl_stability").get_to(m.cl_stability);
}

std::string format_number(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string metrics_csv_header() {
  return "method,seed,acc,bwt,rem,ms,te,fs,sss,cl_score,cl_score_sum,cl_stability";
}

std::string metrics_csv_row(const std::string& method, std::uint64_t seed, const MetricsRecord& m) {
  std::ostringstream os;
  os << method << ',' << seed;
  for (double v : {m.acc, m.bwt, m.rem, m.ms, m.te, m.fs, m.sss, m.cl_score, m.cl_score_sum,
                   m.cl_stability}) {
    os << ',' << format_number(v);
  }
  return os.str();
}

std::string evaluation_matrix_csv(const EvaluationMatrix& ev) {
  std::ostringstream os;
  os << "after_task,eval_task,demo_idx,dtw,frechet,swept_area,quat_error\n";
  for (std::size_t i = 0; i < ev.num_tasks(); ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      if (!ev.has(i, j)) {
        continue;
      }
      const auto& cell = ev.at(i, j);
      for (std::size_t k = 0; k < cell.size(); ++k) {
        const auto& d = cell[k];
        os << i << ',' << j << ',' << k << ',' << format_number(d.dtw) << ','
           << format_number(d.frechet) << ',' << format_number(d.swept_area) << ',';
        if (d.quat_error) {
          os << format_number(*d.quat_error);
        }
        os << '\n';
      }
    }
  }
  return os.str();
}

namespace {

double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("eval_matrix.csv line " + std::to_string(line) +
                                ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

EvaluationMatrix evaluation_matrix_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line.rfind("after_task,", 0) != 0) {
    throw std::invalid_argument("eval_matrix.csv: missing header");
  }
  struct Row {
    std::size_t i, j, k;
    DemoEvaluation e;
  };
  std::vector<Row> rows;
  std::size_t max_task = 0;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) {
      continue;
    }
    std::vector<std::string> f;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) {
      f.push_back(field);
    }
    if (line.back() == ',') {
      f.emplace_back();
    }
    if (f.size() != 7) {
      throw std::invalid_argument("eval_matrix.csv line " + std::to_string(lineno) +
                                  ": expected 7 fields");
    }
    Row r{static_cast<std::size_t>(std::stoull(f[0])), static_cast<std::size_t>(std::stoull(f[1])),
          static_cast<std::size_t>(std::stoull(f[2])), {}};
    r.e.dtw = parse_double(f[3], lineno);
    r.e.frechet = parse_double(f[4], lineno);
    r.e.swept_area = parse_double(f[5], lineno);
    if (!f[6].empty()) {
      r.e.quat_error = parse_double(f[6], lineno);
    }
    max_task = std::max(max_task, r.i + 1);
    rows.push_back(std::move(r));
  }
  EvaluationMatrix ev(max_task);
  std::vector<std::vector<std::vector<DemoEvaluation>>> cells(max_task);
  for (std::size_t i = 0; i < max_task; ++i) {
    cells[i].resize(i + 1);
  }
  for (auto& r : rows) {
    if (r.j > r.i) {
      throw std::invalid_argument("eval_matrix.csv: cell above the diagonal");
    }
    auto& cell = cells[r.i][r.j];
    if (r.k != cell.size()) {
      throw std::invalid_argument("eval_matrix.csv: demo indices out of order");
    }
    cell.push_back(r.e);
  }
  for (std::size_t i = 0; i < max_task; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      if (!cells[i][j].empty()) {
        ev.set(i, j, std::move(cells[i][j]));
      }
    }
  }
  return ev;
}

}  // namespace clfd::metrics
