#include "clfd/autodiff/adam.hpp"

#include <cmath>

namespace clfd::ad {

AdamState::AdamState(std::size_t n, AdamOptions opts)
    : options(opts),
      first_moment(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))),
      second_moment(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))) {}

void adam_step(AdamState& state, Eigen::Ref<Eigen::VectorXd> params,
               const Eigen::Ref<const Eigen::VectorXd>& grads) {
  if (params.size() != grads.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step: parameter, gradient and moment lengths differ");
  }
  if (!grads.allFinite()) {
    throw NonFiniteGradient("adam_step: non-finite gradient at optimizer step " +
                            std::to_string(state.step_count + 1));
  }
  const auto& o = state.options;
  state.step_count += 1;
  state.first_moment = o.beta1 * state.first_moment + (1.0 - o.beta1) * grads;
  state.second_moment =
      o.beta2 * state.second_moment + (1.0 - o.beta2) * grads.cwiseProduct(grads);
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  params.array() -= o.learning_rate * (state.first_moment.array() / c1) /
                    ((state.second_moment.array() / c2).sqrt() + o.epsilon);
}

Eigen::VectorXd adam_candidate_delta(const AdamState& state,
                                     const Eigen::Ref<const Eigen::VectorXd>& grads) {
  AdamState shadow = state;
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(grads.size());
  adam_step(shadow, delta, grads);
  return delta;
}

}  // namespace clfd::ad
