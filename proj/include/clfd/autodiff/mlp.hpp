#pragma once

#include "clfd/autodiff/tape.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace clfd::ad {

enum class Activation { ELU, ReLU };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Fully connected network shape. Hidden layers use `activation`; the output
/// layer is linear.
struct Architecture {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_layers;
  std::size_t output_dim = 1;
  Activation activation = Activation::ELU;

  /// Throws std::invalid_argument if any dimension is zero.
  void validate() const;
  std::size_t layer_count() const { return hidden_layers.size() + 1; }

  bool operator==(const Architecture&) const = default;
};

/// Location of one dense layer inside a flat parameter vector. The weight is
/// stored row-major as (out x in), immediately followed by the bias.
struct LayerSlice {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
};

std::vector<LayerSlice> layer_slices(const Architecture& arch);

/// Sum over layers of in*out + out.
std::size_t count_params(const Architecture& arch);

/// Flat parameter array laid out according to an Architecture.
struct ParamVector {
  Architecture architecture;
  Eigen::VectorXd values;

  static ParamVector zeros(const Architecture& arch);
  /// Weights uniform in +-1/sqrt(fan_in), biases likewise.
  static ParamVector initialized(const Architecture& arch, std::mt19937_64& rng);

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  /// Throws if the length disagrees with the architecture or any entry is
  /// not finite.
  void validate() const;
};

/// Plain (untaped) forward pass for a batch, one sample per row.
Eigen::MatrixXd mlp_forward_batch(const Eigen::VectorXd& params, const Architecture& arch,
                                  const Eigen::MatrixXd& inputs);
Eigen::VectorXd mlp_forward(const ParamVector& params, const Eigen::VectorXd& x);

/// Layer weights and biases of an MLP bound to tape nodes. Weights are
/// (out x in), biases 1 x out.
struct TapedMlp {
  Architecture architecture;
  std::vector<Var> weights;
  std::vector<Var> biases;
};

/// Slices a flat parameter node (column vector) into per-layer nodes.
TapedMlp bind_mlp(Var flat_params, const Architecture& arch);

/// Applies all layers to a batch node.
Var mlp_forward(const TapedMlp& net, Var inputs);
/// Continues a forward pass from the pre-activation of the first layer. Lets
/// callers compute the first affine map themselves, e.g. to fold constant
/// conditioning inputs into its bias.
Var mlp_forward_from_first_preactivation(const TapedMlp& net, Var first_preactivation);

Var apply_activation(Var x, Activation a);

}  // namespace clfd::ad
