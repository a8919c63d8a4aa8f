#include "clfd/autodiff/adam.hpp"
#include "clfd/autodiff/param_io.hpp"
#include "clfd/strategies/hypernet.hpp"
#include "clfd/strategies/importance.hpp"
#include "clfd/strategies/strategy.hpp"

#include <chrono>
#include <cmath>
#include <optional>
#include <sstream>

namespace clfd::strategies {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

Eigen::RowVectorXd draw_embedding(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::RowVectorXd e(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    e[i] = normal(rng);
  }
  return e;
}

json embeddings_to_json(const std::vector<Eigen::RowVectorXd>& embeddings) {
  json arr = json::array();
  for (const auto& e : embeddings) {
    arr.push_back(std::vector<double>(e.data(), e.data() + e.size()));
  }
  return arr;
}

std::vector<Eigen::RowVectorXd> embeddings_from_json(const json& arr, std::size_t dim) {
  std::vector<Eigen::RowVectorXd> out;
  for (const auto& item : arr) {
    const auto v = item.get<std::vector<double>>();
    if (v.size() != dim) {
      throw std::runtime_error("stored embedding has length " + std::to_string(v.size()) +
                               ", expected " + std::to_string(dim));
    }
    out.push_back(Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(dim)));
  }
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void check_finite(double loss, std::size_t it) {
  if (!std::isfinite(loss)) {
    throw node::TrainingDiverged("training diverged: loss is not finite at iteration " +
                                 std::to_string(it));
  }
}

// ---------------------------------------------------------------------------
// SG: one independent NODE per task.

class SeparateNetworks final : public Strategy {
 public:
  explicit SeparateNetworks(StrategyConfig config)
      : Strategy(std::move(config)), node_(config_.node_config()) {}

  std::vector<Trajectory> predict(std::size_t task_id, const Eigen::MatrixXd& y0,
                                  const Eigen::VectorXd& timestamps) const override {
    check_task(task_id);
    return node::integrate_mlp(nets_[task_id].values, node_, y0, timestamps, Eigen::RowVectorXd());
  }

  std::size_t parameter_count() const override {
    std::size_t n = 0;
    for (const auto& p : nets_) {
      n += p.size();
    }
    return n;
  }

 protected:
  LearnReport do_learn(const DemonstrationSet& demos) override {
    ad::ParamVector p = ad::ParamVector::initialized(node_.architecture, rng_);
    const node::TrainReport r = node::train_node(p, demos, node_);
    nets_.push_back(std::move(p));
    return {r.wall_clock_seconds, r.work, r.loss_history};
  }

  void save_state(json& manifest, const fs::path& dir) const override {
    json files = json::array();
    for (std::size_t k = 0; k < nets_.size(); ++k) {
      const std::string stem = "node_" + std::to_string(k);
      ad::save_params(nets_[k], dir / stem, config_.seed);
      files.push_back(stem);
    }
    manifest["networks"] = files;
  }

  void load_state(const json& manifest, const fs::path& dir) override {
    nets_.clear();
    for (const auto& stem : manifest.at("networks")) {
      ad::ParamVector p = ad::load_params(dir / stem.get<std::string>());
      if (p.architecture != node_.architecture) {
        throw std::runtime_error("stored SG network does not match the configured architecture");
      }
      nets_.push_back(std::move(p));
    }
    if (nets_.size() != num_tasks_) {
      throw std::runtime_error("SG state holds " + std::to_string(nets_.size()) +
                               " networks for " + std::to_string(num_tasks_) + " tasks");
    }
  }

 private:
  node::NodeConfig node_;
  std::vector<ad::ParamVector> nets_;
};

// ---------------------------------------------------------------------------
// FT, REP, SI, MAS: one shared task-conditioned NODE.

class SharedNetwork final : public Strategy {
 public:
  explicit SharedNetwork(StrategyConfig config)
      : Strategy(std::move(config)),
        node_(config_.node_config()),
        params_(ad::ParamVector::initialized(node_.architecture, rng_)),
        selector_(config_.seed ^ 0x9e3779b97f4a7c15ULL) {
    if (method() == Method::SI) {
      importance_.emplace(params_.values, config_.si_c, config_.si_xi);
    } else if (method() == Method::MAS) {
      importance_.emplace(params_.values, config_.mas_lambda, 0.0);
    }
  }

  std::vector<Trajectory> predict(std::size_t task_id, const Eigen::MatrixXd& y0,
                                  const Eigen::VectorXd& timestamps) const override {
    check_task(task_id);
    return node::integrate_mlp(params_.values, node_, y0, timestamps, embeddings_[task_id]);
  }

  std::size_t parameter_count() const override {
    return params_.size() + embeddings_.size() * config_.embedding_dim;
  }

  std::size_t stored_sample_count() const override {
    std::size_t n = 0;
    for (const auto& set : buffer_) {
      n += set.point_count();
    }
    return n;
  }

 protected:
  LearnReport do_learn(const DemonstrationSet& demos) override {
    Eigen::RowVectorXd e = draw_embedding(rng_, config_.embedding_dim);
    LearnReport report;
    switch (method()) {
      case Method::FT: {
        const auto r = node::train_node(params_, demos, node_, &e);
        report = {r.wall_clock_seconds, r.work, r.loss_history};
        break;
      }
      case Method::SI: {
        const ImportancePenalty penalty(*importance_);
        node::TrainHooks hooks;
        hooks.penalty = &penalty;
        hooks.on_step = [this](const Eigen::VectorXd& g, const Eigen::VectorXd& d) {
          si_accumulate(*importance_, g, d);
        };
        const auto r = node::train_node(params_, demos, node_, &e, hooks);
        const auto start = std::chrono::steady_clock::now();
        si_consolidate(*importance_, params_.values);
        report = {r.wall_clock_seconds + seconds_since(start), r.work, r.loss_history};
        break;
      }
      case Method::MAS: {
        const ImportancePenalty penalty(*importance_);
        node::TrainHooks hooks;
        hooks.penalty = &penalty;
        const auto r = node::train_node(params_, demos, node_, &e, hooks);
        const auto start = std::chrono::steady_clock::now();
        const std::uint64_t work =
            mas_consolidate(*importance_, params_.values, node_.architecture, mas_inputs(demos, e));
        report = {r.wall_clock_seconds + seconds_since(start), r.work + work, r.loss_history};
        break;
      }
      case Method::REP:
        report = replay(demos, e);
        break;
      default:
        throw std::logic_error("SharedNetwork: unsupported method");
    }
    embeddings_.push_back(std::move(e));
    return report;
  }

  void save_state(json& manifest, const fs::path& dir) const override {
    ad::save_params(params_, dir / "node", config_.seed);
    manifest["embeddings"] = embeddings_to_json(embeddings_);
    if (importance_) {
      ad::write_blob(dir / "omega_running.bin", importance_->omega_running);
      ad::write_blob(dir / "Omega.bin", importance_->Omega);
      ad::write_blob(dir / "theta_snapshot.bin", importance_->theta_snapshot);
      ad::write_blob(dir / "delta.bin", importance_->delta);
      manifest["importance_steps"] = importance_->steps;
    }
    if (method() == Method::REP) {
      std::ostringstream sel;
      sel << selector_.rng();
      manifest["selector_state"] = sel.str();
      json buf = json::array();
      for (std::size_t k = 0; k < buffer_.size(); ++k) {
        const auto& set = buffer_[k];
        json entry = {{"name", set.name},
                      {"demos", set.demos.size()},
                      {"length", set.length()},
                      {"dim", set.dim()},
                      {"timestamps", std::vector<double>(set.timestamps().data(),
                                                         set.timestamps().data() + set.length())}};
        if (set.recording_frequency) {
          entry["recording_frequency"] = *set.recording_frequency;
        }
        Eigen::VectorXd flat(static_cast<Eigen::Index>(set.point_count() * set.dim()));
        Eigen::Index pos = 0;
        for (const auto& d : set.demos) {
          const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = d.points;
          flat.segment(pos, rm.size()) = Eigen::Map<const Eigen::VectorXd>(rm.data(), rm.size());
          pos += rm.size();
        }
        const std::string file = "replay_" + std::to_string(k) + ".bin";
        ad::write_blob(dir / file, flat);
        entry["file"] = file;
        buf.push_back(entry);
      }
      manifest["replay_buffer"] = buf;
    }
  }

  void load_state(const json& manifest, const fs::path& dir) override {
    params_ = ad::load_params(dir / "node");
    if (params_.architecture != node_.architecture) {
      throw std::runtime_error("stored NODE does not match the configured architecture");
    }
    embeddings_ = embeddings_from_json(manifest.at("embeddings"), config_.embedding_dim);
    if (embeddings_.size() != num_tasks_) {
      throw std::runtime_error("stored embedding count disagrees with the task count");
    }
    if (importance_) {
      const auto n = params_.size();
      importance_->omega_running = ad::read_blob(dir / "omega_running.bin", n);
      importance_->Omega = ad::read_blob(dir / "Omega.bin", n);
      importance_->theta_snapshot = ad::read_blob(dir / "theta_snapshot.bin", n);
      importance_->delta = ad::read_blob(dir / "delta.bin", n);
      importance_->steps = manifest.at("importance_steps").get<std::uint64_t>();
    }
    if (method() == Method::REP) {
      std::istringstream sel(manifest.at("selector_state").get<std::string>());
      sel >> selector_.rng();
      buffer_.clear();
      for (const auto& entry : manifest.at("replay_buffer")) {
        DemonstrationSet set;
        set.name = entry.at("name").get<std::string>();
        if (entry.contains("recording_frequency")) {
          set.recording_frequency = entry["recording_frequency"].get<double>();
        }
        const auto B = entry.at("demos").get<std::size_t>();
        const auto T = static_cast<Eigen::Index>(entry.at("length").get<std::size_t>());
        const auto d = static_cast<Eigen::Index>(entry.at("dim").get<std::size_t>());
        const auto ts = entry.at("timestamps").get<std::vector<double>>();
        const Eigen::VectorXd flat =
            ad::read_blob(dir / entry.at("file").get<std::string>(), B * static_cast<std::size_t>(T * d));
        for (std::size_t b = 0; b < B; ++b) {
          Trajectory t;
          t.points = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                    Eigen::RowMajor>>(
              flat.data() + static_cast<Eigen::Index>(b) * T * d, T, d);
          t.timestamps = Eigen::Map<const Eigen::VectorXd>(ts.data(), T);
          set.demos.push_back(std::move(t));
        }
        buffer_.push_back(std::move(set));
      }
    }
  }

 private:
  // Each iteration trains on one task drawn uniformly from all tasks seen so
  // far, the new one included, with that task's embedding.
  LearnReport replay(const DemonstrationSet& demos, Eigen::RowVectorXd& e) {
    buffer_.push_back(demos);
    const auto start = std::chrono::steady_clock::now();
    LearnReport report;
    const std::size_t m = buffer_.size();
    const std::size_t current = m - 1;
    ad::AdamState param_opt(params_.size(), {node_.learning_rate});
    std::vector<ad::AdamState> emb_opt(m, ad::AdamState(config_.embedding_dim, {node_.learning_rate}));
    for (std::size_t it = 0; it < node_.train_iterations; ++it) {
      const std::size_t l = selector_.draw(m);
      Eigen::RowVectorXd& emb = l == current ? e : embeddings_[l];
      const node::TaskGradient g = node::task_loss_gradient(params_.values, emb, buffer_[l], node_);
      check_finite(g.loss, it);
      report.loss_history.push_back(g.loss);
      report.work += g.work;
      ad::adam_step(param_opt, params_.values, g.params);
      Eigen::VectorXd ev = emb.transpose();
      ad::adam_step(emb_opt[l], ev, g.embedding.transpose());
      emb = ev.transpose();
    }
    report.wall_clock_seconds = seconds_since(start);
    return report;
  }

  // Network inputs [y, e, t] at every demo state of the finished task.
  Eigen::MatrixXd mas_inputs(const DemonstrationSet& demos, const Eigen::RowVectorXd& e) const {
    const auto d = static_cast<Eigen::Index>(node_.state_dim);
    const auto E = e.size();
    const auto T = static_cast<Eigen::Index>(demos.length());
    Eigen::MatrixXd in(static_cast<Eigen::Index>(demos.point_count()),
                       static_cast<Eigen::Index>(node_.architecture.input_dim));
    Eigen::Index row = 0;
    for (const auto& demo : demos.demos) {
      for (Eigen::Index t = 0; t < T; ++t, ++row) {
        in.block(row, 0, 1, d) = demo.points.row(t);
        in.block(row, d, 1, E) = e;
        if (node_.time_input) {
          in(row, d + E) = demo.timestamps[t];
        }
      }
    }
    return in;
  }

  node::NodeConfig node_;
  ad::ParamVector params_;
  std::vector<Eigen::RowVectorXd> embeddings_;
  std::optional<ImportanceState> importance_;
  std::vector<DemonstrationSet> buffer_;
  TaskSelector selector_;
};

// ---------------------------------------------------------------------------
// HN, CHN: a hypernetwork generating the NODE from a task embedding.

class Hypernetwork final : public Strategy {
 public:
  explicit Hypernetwork(StrategyConfig config)
      : Strategy(std::move(config)), node_(config_.node_config()), hn_(config_.hypernet_config()) {
    const ad::ParamVector h = ad::ParamVector::initialized(hn_.hn_architecture, rng_);
    w_.resize(static_cast<Eigen::Index>(hn_.shared_param_count()));
    w_.head(h.values.size()) = h.values;
    if (hn_.chunked) {
      std::normal_distribution<double> normal(0.0, 1.0);
      for (Eigen::Index i = h.values.size(); i < w_.size(); ++i) {
        w_[i] = normal(rng_);
      }
    }
  }

  std::vector<Trajectory> predict(std::size_t task_id, const Eigen::MatrixXd& y0,
                                  const Eigen::VectorXd& timestamps) const override {
    check_task(task_id);
    const Eigen::VectorXd theta = hn_generate(w_, embeddings_[task_id], hn_);
    return node::integrate_mlp(theta, node_, y0, timestamps, Eigen::RowVectorXd());
  }

  std::size_t parameter_count() const override {
    return hn_.total_param_count(embeddings_.size());
  }

 protected:
  LearnReport do_learn(const DemonstrationSet& demos) override {
    const auto start = std::chrono::steady_clock::now();
    Eigen::RowVectorXd e = draw_embedding(rng_, config_.embedding_dim);
    // Outputs for earlier tasks before this task starts; the regularizer
    // pulls the updated hypernetwork back towards them.
    std::vector<Eigen::VectorXd> targets;
    targets.reserve(embeddings_.size());
    for (const auto& old : embeddings_) {
      targets.push_back(hn_generate(w_, old, hn_));
    }
    const double lr =
        config_.hypernet.learning_rate > 0.0 ? config_.hypernet.learning_rate : node_.learning_rate;
    ad::AdamState w_opt(static_cast<std::size_t>(w_.size()), {lr});
    ad::AdamState e_opt(config_.embedding_dim, {lr});

    LearnReport report;
    for (std::size_t it = 0; it < node_.train_iterations; ++it) {
      const HypernetTaskGradient g = hn_task_gradient(w_, e, demos, hn_, node_);
      report.work += g.work;
      double loss = g.loss;
      Eigen::VectorXd grad = g.w;
      if (!embeddings_.empty()) {
        const Eigen::VectorXd candidate = ad::adam_candidate_delta(w_opt, g.w);
        const RegularizerGradient r =
            hn_regularizer_gradient(w_ + candidate, embeddings_, targets, hn_);
        report.work += r.work;
        loss += r.value;
        grad += r.w;
      }
      check_finite(loss, it);
      report.loss_history.push_back(loss);
      ad::adam_step(w_opt, w_, grad);
      Eigen::VectorXd ev = e.transpose();
      ad::adam_step(e_opt, ev, g.embedding.transpose());
      e = ev.transpose();
    }
    embeddings_.push_back(std::move(e));
    report.wall_clock_seconds = seconds_since(start);
    return report;
  }

  void save_state(json& manifest, const fs::path& dir) const override {
    ad::write_blob(dir / "hypernet.bin", w_);
    manifest["hypernet_length"] = w_.size();
    manifest["hypernet_architecture"] = ad::architecture_to_json(hn_.hn_architecture);
    manifest["embeddings"] = embeddings_to_json(embeddings_);
  }

  void load_state(const json& manifest, const fs::path& dir) override {
    if (ad::architecture_from_json(manifest.at("hypernet_architecture")) != hn_.hn_architecture) {
      throw std::runtime_error("stored hypernetwork does not match the configured architecture");
    }
    w_ = ad::read_blob(dir / "hypernet.bin", hn_.shared_param_count());
    embeddings_ = embeddings_from_json(manifest.at("embeddings"), config_.embedding_dim);
    if (embeddings_.size() != num_tasks_) {
      throw std::runtime_error("stored embedding count disagrees with the task count");
    }
  }

 private:
  node::NodeConfig node_;
  HypernetConfig hn_;
  Eigen::VectorXd w_;
  std::vector<Eigen::RowVectorXd> embeddings_;
};

}  // namespace

std::unique_ptr<Strategy> make_strategy(const StrategyConfig& config) {
  switch (config.method) {
    case Method::SG:
      return std::make_unique<SeparateNetworks>(config);
    case Method::HN:
    case Method::CHN:
      return std::make_unique<Hypernetwork>(config);
    default:
      return std::make_unique<SharedNetwork>(config);
  }
}

}  // namespace clfd::strategies
