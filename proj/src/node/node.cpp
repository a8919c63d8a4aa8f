#include "clfd/node/node.hpp"

#include "clfd/autodiff/ops.hpp"

#include <chrono>
#include <cmath>

namespace clfd::node {
namespace {

// One explicit step of the chosen scheme. `f(y, t)` returns dy/dt and `axpy`
// computes y + s * k; both are supplied so the same scheme serves plain and
// taped evaluation.
template <class State, class Field, class Axpy>
State advance(const Field& f, const Axpy& axpy, const State& y, double t, double dt,
              Integrator integrator) {
  if (integrator == Integrator::Euler) {
    return axpy(y, f(y, t), dt);
  }
  const State k1 = f(y, t);
  const State k2 = f(axpy(y, k1, 0.5 * dt), t + 0.5 * dt);
  const State k3 = f(axpy(y, k2, 0.5 * dt), t + 0.5 * dt);
  const State k4 = f(axpy(y, k3, dt), t + dt);
  State out = axpy(y, k1, dt / 6.0);
  out = axpy(out, k2, dt / 3.0);
  out = axpy(out, k3, dt / 3.0);
  return axpy(out, k4, dt / 6.0);
}

void check_timestamps(const Eigen::VectorXd& timestamps) {
  if (timestamps.size() < 1) {
    throw std::invalid_argument("integrate: empty timestamp vector");
  }
  for (Eigen::Index i = 1; i < timestamps.size(); ++i) {
    if (!(timestamps[i] > timestamps[i - 1])) {
      throw std::invalid_argument("integrate: timestamps not strictly increasing at index " +
                                  std::to_string(i));
    }
  }
}

}  // namespace

std::string to_string(Integrator i) {
  return i == Integrator::Euler ? "euler" : "rk4";
}

Integrator integrator_from_string(const std::string& name) {
  if (name == "euler") {
    return Integrator::Euler;
  }
  if (name == "rk4") {
    return Integrator::RK4;
  }
  throw std::invalid_argument("unknown integrator '" + name + "'");
}

NodeConfig NodeConfig::make(std::size_t state_dim, std::vector<std::size_t> hidden,
                            std::size_t extra_input_dim, bool time_input) {
  NodeConfig c;
  c.state_dim = state_dim;
  c.extra_input_dim = extra_input_dim;
  c.time_input = time_input;
  c.architecture.input_dim = state_dim + extra_input_dim + (time_input ? 1 : 0);
  c.architecture.hidden_layers = std::move(hidden);
  c.architecture.output_dim = state_dim;
  c.architecture.activation = ad::Activation::ELU;
  c.validate();
  return c;
}

void NodeConfig::validate() const {
  architecture.validate();
  const std::size_t expected = state_dim + extra_input_dim + (time_input ? 1 : 0);
  if (architecture.input_dim != expected) {
    throw std::invalid_argument("NodeConfig: network input is " +
                                std::to_string(architecture.input_dim) + ", expected " +
                                std::to_string(expected));
  }
  if (architecture.output_dim != state_dim) {
    throw std::invalid_argument("NodeConfig: network output must equal the state dimension");
  }
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("NodeConfig: learning rate must be positive");
  }
}

Trajectory integrate(const VectorField& field, const Eigen::VectorXd& y0,
                     const Eigen::VectorXd& timestamps, const Eigen::VectorXd& extra_input,
                     IntegrationOptions options) {
  check_timestamps(timestamps);
  if (!y0.allFinite()) {
    throw std::invalid_argument("integrate: start state is not finite");
  }
  const Eigen::Index d = y0.size();
  const Eigen::Index e = extra_input.size();
  const Eigen::Index in_dim = d + e + (options.time_input ? 1 : 0);
  Eigen::VectorXd input(in_dim);
  if (e > 0) {
    input.segment(d, e) = extra_input;
  }
  auto f = [&](const Eigen::VectorXd& y, double t) -> Eigen::VectorXd {
    input.head(d) = y;
    if (options.time_input) {
      input[in_dim - 1] = t;
    }
    Eigen::VectorXd dy = field(input);
    if (dy.size() != d) {
      throw std::invalid_argument("integrate: vector field returned wrong dimension");
    }
    return dy;
  };
  auto axpy = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b, double s) -> Eigen::VectorXd {
    return a + s * b;
  };

  Trajectory out;
  out.timestamps = timestamps;
  out.points.resize(timestamps.size(), d);
  out.points.row(0) = y0.transpose();
  Eigen::VectorXd y = y0;
  for (Eigen::Index n = 0; n + 1 < timestamps.size(); ++n) {
    const double dt = timestamps[n + 1] - timestamps[n];
    y = advance(f, axpy, y, timestamps[n], dt, options.integrator);
    if (!y.allFinite()) {
      throw IntegrationError("integrate: state became non-finite at step " + std::to_string(n + 1),
                             static_cast<std::size_t>(n + 1));
    }
    out.points.row(n + 1) = y.transpose();
  }
  return out;
}

std::vector<Trajectory> integrate_mlp(const Eigen::VectorXd& params, const NodeConfig& config,
                                      const Eigen::MatrixXd& y0,
                                      const Eigen::VectorXd& timestamps,
                                      const Eigen::RowVectorXd& extra_input) {
  config.validate();
  check_timestamps(timestamps);
  const Eigen::Index B = y0.rows();
  const auto d = static_cast<Eigen::Index>(config.state_dim);
  const auto e = static_cast<Eigen::Index>(config.extra_input_dim);
  if (y0.cols() != d) {
    throw std::invalid_argument("integrate_mlp: start state has wrong dimension");
  }
  if (extra_input.size() != e) {
    throw std::invalid_argument("integrate_mlp: conditioning input has length " +
                                std::to_string(extra_input.size()) + ", expected " +
                                std::to_string(e));
  }
  if (!y0.allFinite()) {
    throw std::invalid_argument("integrate_mlp: start state is not finite");
  }
  const auto in_dim = static_cast<Eigen::Index>(config.architecture.input_dim);
  Eigen::MatrixXd input(B, in_dim);
  if (e > 0) {
    input.middleCols(d, e) = extra_input.replicate(B, 1);
  }
  auto f = [&](const Eigen::MatrixXd& y, double t) -> Eigen::MatrixXd {
    input.leftCols(d) = y;
    if (config.time_input) {
      input.col(in_dim - 1).setConstant(t);
    }
    return ad::mlp_forward_batch(params, config.architecture, input);
  };
  auto axpy = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double s) -> Eigen::MatrixXd {
    return a + s * b;
  };

  std::vector<Trajectory> out(static_cast<std::size_t>(B));
  for (auto& traj : out) {
    traj.timestamps = timestamps;
    traj.points.resize(timestamps.size(), d);
  }
  Eigen::MatrixXd y = y0;
  for (Eigen::Index n = 0;; ++n) {
    for (Eigen::Index b = 0; b < B; ++b) {
      out[static_cast<std::size_t>(b)].points.row(n) = y.row(b);
    }
    if (n + 1 >= timestamps.size()) {
      break;
    }
    const double dt = timestamps[n + 1] - timestamps[n];
    y = advance(f, axpy, y, timestamps[n], dt, config.integrator);
    if (!y.allFinite()) {
      throw IntegrationError("integrate: state became non-finite at step " + std::to_string(n + 1),
                             static_cast<std::size_t>(n + 1));
    }
  }
  return out;
}

TapedVectorField::TapedVectorField(ad::Var params, std::optional<ad::Var> extra,
                                   const NodeConfig& config) {
  config.validate();
  net_ = ad::bind_mlp(params, config.architecture);
  const ad::Var w1 = net_.weights[0];
  const Eigen::Index hidden = w1.rows();
  const auto d = static_cast<Eigen::Index>(config.state_dim);
  const auto e = static_cast<Eigen::Index>(config.extra_input_dim);
  state_weight_ = ad::block(w1, 0, 0, hidden, d);
  bias_ = net_.biases[0];
  if (e > 0) {
    if (!extra || extra->rows() != 1 || extra->cols() != e) {
      throw std::invalid_argument("TapedVectorField: conditioning input must be 1 x " +
                                  std::to_string(e));
    }
    bias_ = ad::add(bias_, ad::linear(*extra, ad::block(w1, 0, d, hidden, e)));
  } else if (extra) {
    throw std::invalid_argument("TapedVectorField: network takes no conditioning input");
  }
  if (config.time_input) {
    time_weight_ = ad::transpose(ad::block(w1, 0, d + e, hidden, 1));
  }
}

ad::Var TapedVectorField::operator()(ad::Var states, double t) const {
  const ad::Var bias = time_weight_ ? ad::axpy(bias_, *time_weight_, t) : bias_;
  const ad::Var z = ad::add_row(ad::linear(states, state_weight_), bias);
  return ad::mlp_forward_from_first_preactivation(net_, z);
}

std::vector<ad::Var> rollout(ad::Tape& tape, const TapedVectorField& field,
                             const Eigen::MatrixXd& y0, const Eigen::VectorXd& timestamps,
                             Integrator integrator) {
  check_timestamps(timestamps);
  std::vector<ad::Var> states;
  states.reserve(static_cast<std::size_t>(timestamps.size()));
  states.push_back(tape.constant(y0));
  auto f = [&](ad::Var y, double t) { return field(y, t); };
  auto axpy = [](ad::Var a, ad::Var b, double s) { return ad::axpy(a, b, s); };
  for (Eigen::Index n = 0; n + 1 < timestamps.size(); ++n) {
    const double dt = timestamps[n + 1] - timestamps[n];
    states.push_back(advance(f, axpy, states.back(), timestamps[n], dt, integrator));
  }
  return states;
}

ad::Var taped_task_loss(ad::Tape& tape, ad::Var params, std::optional<ad::Var> extra,
                        const DemonstrationSet& demos, const NodeConfig& config) {
  if (demos.dim() != config.state_dim) {
    throw std::invalid_argument("task loss: demos have dimension " + std::to_string(demos.dim()) +
                                ", model expects " + std::to_string(config.state_dim));
  }
  const TapedVectorField field(params, extra, config);
  const auto states =
      rollout(tape, field, demos.start_states(), demos.timestamps(), config.integrator);
  ad::Var loss = ad::half_squared_error(states[1], demos.states_at(1));
  for (std::size_t t = 2; t < states.size(); ++t) {
    loss = ad::add(loss, ad::half_squared_error(states[t], demos.states_at(t)));
  }
  return loss;
}

double node_loss(const Trajectory& prediction, const DemonstrationSet& observed) {
  double total = 0.0;
  for (const auto& demo : observed.demos) {
    if (demo.points.rows() != prediction.points.rows() ||
        demo.points.cols() != prediction.points.cols()) {
      throw std::invalid_argument("node_loss: prediction and demonstration shapes differ");
    }
    total += 0.5 * (demo.points - prediction.points).squaredNorm();
  }
  return total;
}

double node_loss(const std::vector<Trajectory>& predictions, const DemonstrationSet& observed) {
  if (predictions.size() != observed.demos.size()) {
    throw std::invalid_argument("node_loss: need one prediction per demonstration");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    const auto& demo = observed.demos[k];
    if (demo.points.rows() != predictions[k].points.rows() ||
        demo.points.cols() != predictions[k].points.cols()) {
      throw std::invalid_argument("node_loss: prediction and demonstration shapes differ");
    }
    total += 0.5 * (demo.points - predictions[k].points).squaredNorm();
  }
  return total;
}

TaskGradient task_loss_gradient(const Eigen::VectorXd& params, const Eigen::RowVectorXd& embedding,
                                const DemonstrationSet& demos, const NodeConfig& config) {
  ad::Tape tape;
  const ad::Var p = tape.variable(params);
  std::optional<ad::Var> e;
  if (embedding.size() > 0) {
    e = tape.variable(embedding);
  }
  const ad::Var loss = taped_task_loss(tape, p, e, demos, config);
  tape.backward(loss);
  TaskGradient out;
  out.loss = loss.scalar();
  out.params = tape.gradient(p);
  if (e) {
    out.embedding = tape.gradient(*e);
  }
  out.work = tape.multiply_adds();
  return out;
}

TrainReport train_node(ad::ParamVector& params, const DemonstrationSet& demos,
                       const NodeConfig& config, Eigen::RowVectorXd* embedding,
                       const TrainHooks& hooks) {
  config.validate();
  params.validate();
  demos.validate();
  if (params.architecture != config.architecture) {
    throw std::invalid_argument("train_node: parameters do not match the configured architecture");
  }
  const Eigen::RowVectorXd no_embedding;
  if (config.extra_input_dim > 0 &&
      (embedding == nullptr || static_cast<std::size_t>(embedding->size()) != config.extra_input_dim)) {
    throw std::invalid_argument("train_node: conditioning embedding missing or mis-sized");
  }

  const auto start = std::chrono::steady_clock::now();
  TrainReport report;
  report.loss_history.reserve(config.train_iterations);
  ad::AdamState param_opt(params.size(), {config.learning_rate});
  ad::AdamState embedding_opt(embedding ? static_cast<std::size_t>(embedding->size()) : 0,
                              {config.learning_rate});
  Eigen::VectorXd before;
  for (std::size_t it = 0; it < config.train_iterations; ++it) {
    TaskGradient g = task_loss_gradient(params.values,
                                        config.extra_input_dim > 0 ? *embedding : no_embedding,
                                        demos, config);
    report.work += g.work;
    double loss = g.loss;
    Eigen::VectorXd grad = g.params;
    if (hooks.penalty != nullptr) {
      loss += hooks.penalty->value(params.values);
      hooks.penalty->add_gradient(params.values, grad);
    }
    if (!std::isfinite(loss)) {
      throw TrainingDiverged("training diverged: loss is not finite at iteration " +
                             std::to_string(it));
    }
    report.loss_history.push_back(loss);
    if (hooks.on_step) {
      before = params.values;
    }
    ad::adam_step(param_opt, params.values, grad);
    if (config.extra_input_dim > 0) {
      Eigen::VectorXd e = embedding->transpose();
      ad::adam_step(embedding_opt, e, g.embedding.transpose());
      *embedding = e.transpose();
    }
    if (hooks.on_step) {
      hooks.on_step(g.params, params.values - before);
    }
  }
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace clfd::node
