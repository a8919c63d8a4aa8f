#pragma once

#include "clfd/node/node.hpp"

#include <Eigen/Dense>

#include <cstdint>

namespace clfd::strategies {

/// Per-parameter importance bookkeeping shared by SI and MAS. The penalty is
/// c * sum_k Omega_k (theta*_k - theta_k)^2 with theta* the parameters at the
/// start of the current task.
struct ImportanceState {
  Eigen::VectorXd omega_running;   ///< SI path integral for the current task
  Eigen::VectorXd Omega;           ///< accumulated regularization strengths
  Eigen::VectorXd theta_snapshot;  ///< theta* at task start
  Eigen::VectorXd delta;           ///< total change over the last finished task
  double c = 0.3;
  double xi = 0.3;
  std::uint64_t steps = 0;  ///< optimizer steps since the last consolidation

  ImportanceState() = default;
  ImportanceState(const Eigen::VectorXd& theta, double c, double xi);
};

double importance_penalty(const ImportanceState& s, const Eigen::VectorXd& params);
void add_importance_penalty_gradient(const ImportanceState& s, const Eigen::VectorXd& params,
                                     Eigen::VectorXd& grad);

/// ParameterPenalty adapter for node::train_node.
class ImportancePenalty : public node::ParameterPenalty {
 public:
  explicit ImportancePenalty(const ImportanceState& s) : state_(s) {}
  double value(const Eigen::VectorXd& params) const override;
  void add_gradient(const Eigen::VectorXd& params, Eigen::VectorXd& grad) const override;

 private:
  const ImportanceState& state_;
};

/// Adds -g_k * dtheta_k to the running SI importance.
void si_accumulate(ImportanceState& s, const Eigen::VectorXd& grads,
                   const Eigen::VectorXd& param_delta);

/// Omega += max(omega, 0) / (Delta^2 + xi) with Delta = theta - theta*, then
/// resets the running terms and snapshots theta. Logs a warning and leaves
/// the state untouched if no optimizer step was recorded.
void si_consolidate(ImportanceState& s, const Eigen::VectorXd& params);

/// Omega += 1/N sum_n |d ||f(x_n)||^2 / d theta|, one backward pass per
/// sample; each row of `inputs` is a full network input. Snapshots theta.
/// Returns the multiply-adds spent. Throws on an empty sample set.
std::uint64_t mas_consolidate(ImportanceState& s, const Eigen::VectorXd& params,
                              const ad::Architecture& arch, const Eigen::MatrixXd& inputs);

}  // namespace clfd::strategies
