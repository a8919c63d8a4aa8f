#include "clfd/autodiff/mlp.hpp"

#include "clfd/autodiff/ops.hpp"

#include <cmath>
#include <stdexcept>

namespace clfd::ad {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void activate_in_place(Eigen::MatrixXd& z, Activation a) {
  if (a == Activation::ELU) {
    z = z.unaryExpr([](double x) { return x > 0.0 ? x : std::expm1(x); });
  } else {
    z = z.cwiseMax(0.0);
  }
}

}  // namespace

std::string to_string(Activation a) {
  return a == Activation::ELU ? "elu" : "relu";
}

Activation activation_from_string(const std::string& name) {
  if (name == "elu") {
    return Activation::ELU;
  }
  if (name == "relu") {
    return Activation::ReLU;
  }
  throw std::invalid_argument("unknown activation '" + name + "'");
}

void Architecture::validate() const {
  if (input_dim == 0 || output_dim == 0) {
    throw std::invalid_argument("Architecture: input and output dimensions must be >= 1");
  }
  for (std::size_t h : hidden_layers) {
    if (h == 0) {
      throw std::invalid_argument("Architecture: hidden layer widths must be >= 1");
    }
  }
}

std::vector<LayerSlice> layer_slices(const Architecture& arch) {
  arch.validate();
  std::vector<LayerSlice> slices;
  slices.reserve(arch.layer_count());
  std::size_t offset = 0;
  std::size_t in = arch.input_dim;
  auto push = [&](std::size_t out) {
    LayerSlice s{in, out, offset, offset + in * out};
    offset += in * out + out;
    slices.push_back(s);
    in = out;
  };
  for (std::size_t h : arch.hidden_layers) {
    push(h);
  }
  push(arch.output_dim);
  return slices;
}

std::size_t count_params(const Architecture& arch) {
  std::size_t total = 0;
  for (const auto& s : layer_slices(arch)) {
    total += s.in * s.out + s.out;
  }
  return total;
}

ParamVector ParamVector::zeros(const Architecture& arch) {
  return ParamVector{arch, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(count_params(arch)))};
}

ParamVector ParamVector::initialized(const Architecture& arch, std::mt19937_64& rng) {
  ParamVector p = zeros(arch);
  for (const auto& s : layer_slices(arch)) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(s.in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    const std::size_t end = s.bias_offset + s.out;
    for (std::size_t k = s.weight_offset; k < end; ++k) {
      p.values[static_cast<Eigen::Index>(k)] = dist(rng);
    }
  }
  return p;
}

void ParamVector::validate() const {
  if (size() != count_params(architecture)) {
    throw std::invalid_argument("ParamVector: length " + std::to_string(size()) +
                                " does not match architecture (" +
                                std::to_string(count_params(architecture)) + ")");
  }
  if (!values.allFinite()) {
    throw std::invalid_argument("ParamVector: non-finite entry");
  }
}

Eigen::MatrixXd mlp_forward_batch(const Eigen::VectorXd& params, const Architecture& arch,
                                  const Eigen::MatrixXd& inputs) {
  const auto slices = layer_slices(arch);
  if (static_cast<std::size_t>(params.size()) != count_params(arch)) {
    throw std::invalid_argument("mlp_forward: parameter length does not match architecture");
  }
  if (static_cast<std::size_t>(inputs.cols()) != arch.input_dim) {
    throw std::invalid_argument("mlp_forward: input has " + std::to_string(inputs.cols()) +
                                " columns, expected " + std::to_string(arch.input_dim));
  }
  Eigen::MatrixXd h = inputs;
  for (std::size_t l = 0; l < slices.size(); ++l) {
    const auto& s = slices[l];
    Eigen::Map<const RowMajor> w(params.data() + s.weight_offset, static_cast<Eigen::Index>(s.out),
                                 static_cast<Eigen::Index>(s.in));
    Eigen::Map<const Eigen::RowVectorXd> b(params.data() + s.bias_offset,
                                           static_cast<Eigen::Index>(s.out));
    Eigen::MatrixXd z = h * w.transpose();
    z.rowwise() += b;
    if (l + 1 < slices.size()) {
      activate_in_place(z, arch.activation);
    }
    h = std::move(z);
  }
  return h;
}

Eigen::VectorXd mlp_forward(const ParamVector& params, const Eigen::VectorXd& x) {
  return mlp_forward_batch(params.values, params.architecture, x.transpose()).row(0).transpose();
}

TapedMlp bind_mlp(Var flat_params, const Architecture& arch) {
  const auto slices = layer_slices(arch);
  if (flat_params.cols() != 1 ||
      static_cast<std::size_t>(flat_params.rows()) != count_params(arch)) {
    throw std::invalid_argument("bind_mlp: parameter node does not match architecture");
  }
  TapedMlp net{arch, {}, {}};
  for (const auto& s : slices) {
    net.weights.push_back(reshape_slice(flat_params, static_cast<Eigen::Index>(s.weight_offset),
                                        static_cast<Eigen::Index>(s.out),
                                        static_cast<Eigen::Index>(s.in)));
    net.biases.push_back(reshape_slice(flat_params, static_cast<Eigen::Index>(s.bias_offset), 1,
                                       static_cast<Eigen::Index>(s.out)));
  }
  return net;
}

Var apply_activation(Var x, Activation a) {
  return a == Activation::ELU ? elu(x) : relu(x);
}

Var mlp_forward_from_first_preactivation(const TapedMlp& net, Var first_preactivation) {
  Var h = first_preactivation;
  const std::size_t layers = net.weights.size();
  for (std::size_t l = 1; l < layers; ++l) {
    h = apply_activation(h, net.architecture.activation);
    h = add_row(linear(h, net.weights[l]), net.biases[l]);
  }
  return h;
}

Var mlp_forward(const TapedMlp& net, Var inputs) {
  if (static_cast<std::size_t>(inputs.cols()) != net.architecture.input_dim) {
    throw std::invalid_argument("mlp_forward: input has " + std::to_string(inputs.cols()) +
                                " columns, expected " +
                                std::to_string(net.architecture.input_dim));
  }
  Var z = add_row(linear(inputs, net.weights[0]), net.biases[0]);
  return mlp_forward_from_first_preactivation(net, z);
}

}  // namespace clfd::ad
