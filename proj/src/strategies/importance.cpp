#include "clfd/strategies/importance.hpp"

#include "clfd/autodiff/ops.hpp"

#include <spdlog/spdlog.h>

#include <stdexcept>

namespace clfd::strategies {
namespace {

void check_length(const ImportanceState& s, const Eigen::VectorXd& v, const char* who) {
  if (v.size() != s.Omega.size()) {
    throw std::invalid_argument(std::string(who) + ": array of length " + std::to_string(v.size()) +
                                " does not match " + std::to_string(s.Omega.size()) +
                                " parameters");
  }
}

}  // namespace

ImportanceState::ImportanceState(const Eigen::VectorXd& theta, double c_, double xi_)
    : omega_running(Eigen::VectorXd::Zero(theta.size())),
      Omega(Eigen::VectorXd::Zero(theta.size())),
      theta_snapshot(theta),
      delta(Eigen::VectorXd::Zero(theta.size())),
      c(c_),
      xi(xi_) {
  if (!(c > 0.0)) {
    throw std::invalid_argument("ImportanceState: c must be positive");
  }
}

double importance_penalty(const ImportanceState& s, const Eigen::VectorXd& params) {
  check_length(s, params, "importance_penalty");
  return s.c * (s.Omega.array() * (s.theta_snapshot - params).array().square()).sum();
}

void add_importance_penalty_gradient(const ImportanceState& s, const Eigen::VectorXd& params,
                                     Eigen::VectorXd& grad) {
  check_length(s, params, "importance_penalty");
  check_length(s, grad, "importance_penalty");
  grad.array() += 2.0 * s.c * s.Omega.array() * (params - s.theta_snapshot).array();
}

double ImportancePenalty::value(const Eigen::VectorXd& params) const {
  return importance_penalty(state_, params);
}

void ImportancePenalty::add_gradient(const Eigen::VectorXd& params, Eigen::VectorXd& grad) const {
  add_importance_penalty_gradient(state_, params, grad);
}

void si_accumulate(ImportanceState& s, const Eigen::VectorXd& grads,
                   const Eigen::VectorXd& param_delta) {
  check_length(s, grads, "si_accumulate");
  check_length(s, param_delta, "si_accumulate");
  s.omega_running.array() -= grads.array() * param_delta.array();
  ++s.steps;
}

void si_consolidate(ImportanceState& s, const Eigen::VectorXd& params) {
  check_length(s, params, "si_consolidate");
  if (s.steps == 0) {
    spdlog::warn("si_consolidate: no optimizer steps recorded since the last consolidation; "
                 "importance left unchanged");
    return;
  }
  s.delta = params - s.theta_snapshot;
  s.Omega.array() += s.omega_running.array().max(0.0) / (s.delta.array().square() + s.xi);
  s.omega_running.setZero();
  s.theta_snapshot = params;
  s.steps = 0;
}

std::uint64_t mas_consolidate(ImportanceState& s, const Eigen::VectorXd& params,
                              const ad::Architecture& arch, const Eigen::MatrixXd& inputs) {
  check_length(s, params, "mas_consolidate");
  if (inputs.rows() == 0) {
    throw std::invalid_argument("mas_consolidate: no sample inputs");
  }
  if (static_cast<std::size_t>(inputs.cols()) != arch.input_dim) {
    throw std::invalid_argument("mas_consolidate: sample inputs have the wrong width");
  }
  Eigen::VectorXd importance = Eigen::VectorXd::Zero(params.size());
  std::uint64_t work = 0;
  for (Eigen::Index n = 0; n < inputs.rows(); ++n) {
    ad::Tape tape;
    const ad::Var p = tape.variable(params);
    const ad::Var out = ad::mlp_forward(ad::bind_mlp(p, arch), tape.constant(inputs.row(n)));
    tape.backward(ad::sum_squares(out));
    importance.array() += tape.gradient(p).array().abs();
    work += tape.multiply_adds();
  }
  s.Omega += importance / static_cast<double>(inputs.rows());
  s.delta = params - s.theta_snapshot;
  s.theta_snapshot = params;
  s.omega_running.setZero();
  s.steps = 0;
  return work;
}

}  // namespace clfd::strategies
