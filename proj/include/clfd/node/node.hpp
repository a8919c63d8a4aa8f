#pragma once

#include "clfd/autodiff/adam.hpp"
#include "clfd/autodiff/mlp.hpp"
#include "clfd/autodiff/tape.hpp"
#include "clfd/node/trajectory.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace clfd::node {

enum class Integrator { Euler, RK4 };

std::string to_string(Integrator i);
Integrator integrator_from_string(const std::string& name);

/// Shape and training budget of a neural ODE. The network input is the state,
/// followed by any conditioning input (a task embedding), followed by the
/// normalized time when `time_input` is set (NODE-T). Its output is the state
/// derivative, so output_dim == state_dim.
struct NodeConfig {
  ad::Architecture architecture;
  std::size_t state_dim = 2;
  std::size_t extra_input_dim = 0;
  bool time_input = true;
  std::size_t train_iterations = 2000;
  double learning_rate = 1e-3;
  Integrator integrator = Integrator::Euler;

  static NodeConfig make(std::size_t state_dim, std::vector<std::size_t> hidden,
                         std::size_t extra_input_dim, bool time_input);
  void validate() const;
};

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, std::size_t step)
      : std::runtime_error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector field evaluated on the concatenated input [state, extra, time].
using VectorField = std::function<Eigen::VectorXd(const Eigen::VectorXd& input)>;

struct IntegrationOptions {
  bool time_input = false;
  Integrator integrator = Integrator::Euler;
};

/// Fixed-step integration with one step per timestamp interval. The returned
/// trajectory starts exactly at y0. `extra_input` may be empty.
Trajectory integrate(const VectorField& field, const Eigen::VectorXd& y0,
                     const Eigen::VectorXd& timestamps, const Eigen::VectorXd& extra_input,
                     IntegrationOptions options);

/// Batched rollout of an MLP vector field, one trajectory per row of `y0`.
std::vector<Trajectory> integrate_mlp(const Eigen::VectorXd& params, const NodeConfig& config,
                                      const Eigen::MatrixXd& y0,
                                      const Eigen::VectorXd& timestamps,
                                      const Eigen::RowVectorXd& extra_input);

/// MLP vector field bound to tape nodes. A constant conditioning input is
/// folded into the first-layer bias once, rather than re-multiplied each step.
class TapedVectorField {
 public:
  TapedVectorField(ad::Var params, std::optional<ad::Var> extra, const NodeConfig& config);
  ad::Var operator()(ad::Var states, double t) const;

 private:
  ad::TapedMlp net_;
  ad::Var state_weight_;
  ad::Var bias_;
  std::optional<ad::Var> time_weight_;
};

/// Unrolled integration on the tape; returns the batch state at every
/// timestamp (index 0 is the constant y0).
std::vector<ad::Var> rollout(ad::Tape& tape, const TapedVectorField& field,
                             const Eigen::MatrixXd& y0, const Eigen::VectorXd& timestamps,
                             Integrator integrator);

/// 0.5 * sum_t ||y_t - y_hat_t||^2 summed over all demos, with every demo
/// integrated from its own first state.
ad::Var taped_task_loss(ad::Tape& tape, ad::Var params, std::optional<ad::Var> extra,
                        const DemonstrationSet& demos, const NodeConfig& config);

/// Reconstruction loss of one prediction against every demo in the set.
double node_loss(const Trajectory& prediction, const DemonstrationSet& observed);
/// Reconstruction loss with one prediction per demo.
double node_loss(const std::vector<Trajectory>& predictions, const DemonstrationSet& observed);

struct TaskGradient {
  double loss = 0.0;
  Eigen::VectorXd params;
  Eigen::RowVectorXd embedding;
  std::uint64_t work = 0;
};

/// Task loss and its gradient w.r.t. the NODE parameters and (if non-empty)
/// the conditioning embedding.
TaskGradient task_loss_gradient(const Eigen::VectorXd& params, const Eigen::RowVectorXd& embedding,
                                const DemonstrationSet& demos, const NodeConfig& config);

/// Additive loss term on the NODE parameters (SI / MAS style penalties).
class ParameterPenalty {
 public:
  virtual ~ParameterPenalty() = default;
  virtual double value(const Eigen::VectorXd& params) const = 0;
  virtual void add_gradient(const Eigen::VectorXd& params, Eigen::VectorXd& grad) const = 0;
};

struct TrainHooks {
  const ParameterPenalty* penalty = nullptr;
  /// Called after every optimizer step with the task-loss gradient and the
  /// parameter change that step applied.
  std::function<void(const Eigen::VectorXd& task_grad, const Eigen::VectorXd& delta)> on_step;
};

struct TrainReport {
  std::vector<double> loss_history;
  double wall_clock_seconds = 0.0;
  std::uint64_t work = 0;
};

/// Runs config.train_iterations Adam steps on the NODE parameters (and on
/// `embedding` when non-null). Throws TrainingDiverged on a non-finite loss.
TrainReport train_node(ad::ParamVector& params, const DemonstrationSet& demos,
                       const NodeConfig& config, Eigen::RowVectorXd* embedding = nullptr,
                       const TrainHooks& hooks = {});

}  // namespace clfd::node
