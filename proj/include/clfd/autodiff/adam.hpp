#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace clfd::ad {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamOptions options;
  std::uint64_t step_count = 0;
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;

  AdamState() = default;
  AdamState(std::size_t n, AdamOptions opts);
};

/// Raised when a gradient handed to the optimizer contains NaN or infinity.
class NonFiniteGradient : public std::runtime_error {
 public:
  explicit NonFiniteGradient(const std::string& what) : std::runtime_error(what) {}
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(AdamState& state, Eigen::Ref<Eigen::VectorXd> params,
               const Eigen::Ref<const Eigen::VectorXd>& grads);

/// Change a single Adam step would apply, computed on a copy of `state`.
Eigen::VectorXd adam_candidate_delta(const AdamState& state,
                                     const Eigen::Ref<const Eigen::VectorXd>& grads);

}  // namespace clfd::ad
