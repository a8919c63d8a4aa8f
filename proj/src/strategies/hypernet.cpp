#include "clfd/strategies/hypernet.hpp"

#include "clfd/autodiff/ops.hpp"

#include <optional>
#include <stdexcept>
#include <string>

namespace clfd::strategies {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::MatrixXd hn_inputs(const Eigen::VectorXd& w, const Eigen::RowVectorXd& embedding,
                          const HypernetConfig& cfg) {
  if (static_cast<std::size_t>(embedding.size()) != cfg.embedding_dim) {
    throw std::invalid_argument("hypernetwork: task embedding has length " +
                                std::to_string(embedding.size()) + ", expected " +
                                std::to_string(cfg.embedding_dim));
  }
  if (static_cast<std::size_t>(w.size()) != cfg.shared_param_count()) {
    throw std::invalid_argument("hypernetwork: parameter vector has length " +
                                std::to_string(w.size()) + ", expected " +
                                std::to_string(cfg.shared_param_count()));
  }
  if (!cfg.chunked) {
    return embedding;
  }
  const auto K = static_cast<Eigen::Index>(cfg.chunk_count());
  const auto Dc = static_cast<Eigen::Index>(cfg.chunk_embedding_dim);
  const auto E = static_cast<Eigen::Index>(cfg.embedding_dim);
  const auto offset = static_cast<Eigen::Index>(cfg.hypernet_param_count());
  Eigen::MatrixXd in(K, E + Dc);
  in.leftCols(E) = embedding.replicate(K, 1);
  in.rightCols(Dc) = Eigen::Map<const RowMajor>(w.data() + offset, K, Dc);
  return in;
}

}  // namespace

HypernetConfig HypernetConfig::make(const ad::Architecture& target, std::size_t embedding_dim,
                                    std::vector<std::size_t> hidden, double beta, bool chunked,
                                    std::size_t chunk_dim, std::size_t chunk_embedding_dim) {
  HypernetConfig c;
  c.target_architecture = target;
  c.embedding_dim = embedding_dim;
  c.beta = beta;
  c.chunked = chunked;
  c.chunk_dim = chunked ? chunk_dim : 0;
  c.chunk_embedding_dim = chunked ? chunk_embedding_dim : 0;
  c.hn_architecture.input_dim = embedding_dim + c.chunk_embedding_dim;
  c.hn_architecture.hidden_layers = std::move(hidden);
  c.hn_architecture.output_dim = chunked ? chunk_dim : ad::count_params(target);
  c.hn_architecture.activation = ad::Activation::ReLU;
  c.validate();
  return c;
}

std::size_t HypernetConfig::target_count() const {
  return ad::count_params(target_architecture);
}

std::size_t HypernetConfig::chunk_count() const {
  return chunked ? (target_count() + chunk_dim - 1) / chunk_dim : 1;
}

std::size_t HypernetConfig::hypernet_param_count() const {
  return ad::count_params(hn_architecture);
}

std::size_t HypernetConfig::shared_param_count() const {
  return hypernet_param_count() + (chunked ? chunk_count() * chunk_embedding_dim : 0);
}

std::size_t HypernetConfig::total_param_count(std::size_t num_tasks) const {
  return shared_param_count() + num_tasks * embedding_dim;
}

void HypernetConfig::validate() const {
  hn_architecture.validate();
  target_architecture.validate();
  if (embedding_dim == 0) {
    throw std::invalid_argument("HypernetConfig: embedding dimension must be >= 1");
  }
  if (!(beta > 0.0)) {
    throw std::invalid_argument("HypernetConfig: beta must be positive");
  }
  if (chunked && (chunk_dim == 0 || chunk_embedding_dim == 0)) {
    throw std::invalid_argument("HypernetConfig: chunk and chunk-embedding dims must be >= 1");
  }
  if (hn_architecture.input_dim != embedding_dim + chunk_embedding_dim) {
    throw std::invalid_argument("HypernetConfig: hypernetwork input does not match embeddings");
  }
  const std::size_t out = chunked ? chunk_dim : target_count();
  if (hn_architecture.output_dim != out) {
    throw std::invalid_argument("HypernetConfig: hypernetwork output is " +
                                std::to_string(hn_architecture.output_dim) + ", expected " +
                                std::to_string(out));
  }
}

Eigen::VectorXd raw_to_target(const Eigen::MatrixXd& raw, const HypernetConfig& cfg) {
  const RowMajor rm = raw;
  return Eigen::Map<const Eigen::VectorXd>(rm.data(), static_cast<Eigen::Index>(cfg.target_count()));
}

Eigen::MatrixXd target_to_raw(const Eigen::VectorXd& theta, const HypernetConfig& cfg,
                              const Eigen::MatrixXd* pad) {
  const auto rows = static_cast<Eigen::Index>(cfg.chunk_count());
  const auto cols = static_cast<Eigen::Index>(cfg.hn_architecture.output_dim);
  RowMajor rm = pad != nullptr ? RowMajor(*pad) : RowMajor::Zero(rows, cols);
  if (rm.rows() != rows || rm.cols() != cols) {
    throw std::invalid_argument("target_to_raw: padding source has the wrong shape");
  }
  Eigen::Map<Eigen::VectorXd>(rm.data(), theta.size()) = theta;
  return rm;
}

Eigen::VectorXd hn_generate(const Eigen::VectorXd& w, const Eigen::RowVectorXd& embedding,
                            const HypernetConfig& cfg) {
  const Eigen::MatrixXd in = hn_inputs(w, embedding, cfg);
  const auto h = static_cast<Eigen::Index>(cfg.hypernet_param_count());
  return raw_to_target(ad::mlp_forward_batch(w.head(h), cfg.hn_architecture, in), cfg);
}

ad::Var taped_hn_output(ad::Tape& tape, ad::Var w, ad::Var embedding, const HypernetConfig& cfg) {
  if (static_cast<std::size_t>(w.rows()) != cfg.shared_param_count() || w.cols() != 1) {
    throw std::invalid_argument("taped_hn_output: parameter node has the wrong shape");
  }
  if (embedding.rows() != 1 || static_cast<std::size_t>(embedding.cols()) != cfg.embedding_dim) {
    throw std::invalid_argument("taped_hn_output: embedding node must be 1 x " +
                                std::to_string(cfg.embedding_dim));
  }
  const auto h = static_cast<Eigen::Index>(cfg.hypernet_param_count());
  const ad::Var hp = ad::block(w, 0, 0, h, 1);
  const ad::TapedMlp net = ad::bind_mlp(hp, cfg.hn_architecture);
  ad::Var in = embedding;
  if (cfg.chunked) {
    const auto K = static_cast<Eigen::Index>(cfg.chunk_count());
    const auto Dc = static_cast<Eigen::Index>(cfg.chunk_embedding_dim);
    in = ad::concat_cols(ad::repeat_rows(embedding, K), ad::reshape_slice(w, h, K, Dc));
  }
  (void)tape;
  return ad::mlp_forward(net, in);
}

HypernetTaskGradient hn_task_gradient(const Eigen::VectorXd& w, const Eigen::RowVectorXd& embedding,
                                      const DemonstrationSet& demos, const HypernetConfig& cfg,
                                      const node::NodeConfig& node_config) {
  if (node_config.architecture != cfg.target_architecture) {
    throw std::invalid_argument("hn_task_gradient: NODE architecture differs from the target");
  }
  ad::Tape tape;
  const ad::Var wv = tape.variable(w);
  const ad::Var ev = tape.variable(embedding);
  const ad::Var raw = taped_hn_output(tape, wv, ev, cfg);
  const Eigen::VectorXd theta = raw_to_target(raw.value(), cfg);

  const node::TaskGradient g =
      node::task_loss_gradient(theta, Eigen::RowVectorXd(), demos, node_config);
  // Pull the NODE gradient back through the hypernetwork as a
  // vector-Jacobian product.
  const ad::Var pullback = ad::sum(ad::hadamard(raw, tape.constant(target_to_raw(g.params, cfg))));
  tape.backward(pullback);

  HypernetTaskGradient out;
  out.loss = g.loss;
  out.w = tape.gradient(wv);
  out.embedding = tape.gradient(ev);
  out.work = g.work + tape.multiply_adds();
  return out;
}

RegularizerGradient hn_regularizer_gradient(const Eigen::VectorXd& w_eval,
                                            const std::vector<Eigen::RowVectorXd>& embeddings,
                                            const std::vector<Eigen::VectorXd>& targets,
                                            const HypernetConfig& cfg) {
  if (embeddings.size() != targets.size()) {
    throw std::invalid_argument("hn_regularizer_gradient: one target per stored embedding needed");
  }
  RegularizerGradient out;
  out.w = Eigen::VectorXd::Zero(w_eval.size());
  if (embeddings.empty()) {
    return out;
  }
  ad::Tape tape;
  const ad::Var wv = tape.variable(w_eval);
  const double weight = cfg.beta / static_cast<double>(embeddings.size());
  std::optional<ad::Var> total;
  for (std::size_t l = 0; l < embeddings.size(); ++l) {
    const ad::Var raw = taped_hn_output(tape, wv, tape.constant(embeddings[l]), cfg);
    // Padding entries of the target copy the current output, so the cut-off
    // tail of the last chunk contributes nothing.
    const Eigen::MatrixXd target = target_to_raw(targets[l], cfg, &raw.value());
    const ad::Var term = ad::squared_distance(raw, target);
    total = total ? ad::add(*total, term) : term;
  }
  const ad::Var reg = ad::scale(*total, weight);
  tape.backward(reg);
  out.value = reg.scalar();
  out.w = tape.gradient(wv);
  out.work = tape.multiply_adds();
  return out;
}

}  // namespace clfd::strategies
