#pragma once

#include "clfd/autodiff/mlp.hpp"
#include "clfd/autodiff/tape.hpp"
#include "clfd/node/node.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace clfd::strategies {

/// Shape of a (possibly chunked) hypernetwork emitting the parameters of a
/// target NODE. A plain hypernetwork maps a task embedding straight to all
/// target parameters. A chunked one maps [task embedding, chunk embedding] to
/// one chunk of `chunk_dim` parameters; the chunks are concatenated and the
/// tail is cut off at the target parameter count.
struct HypernetConfig {
  ad::Architecture hn_architecture;
  ad::Architecture target_architecture;
  std::size_t embedding_dim = 0;
  double beta = 0.005;
  bool chunked = false;
  std::size_t chunk_dim = 0;
  std::size_t chunk_embedding_dim = 0;

  static HypernetConfig make(const ad::Architecture& target, std::size_t embedding_dim,
                             std::vector<std::size_t> hidden, double beta, bool chunked,
                             std::size_t chunk_dim, std::size_t chunk_embedding_dim);

  std::size_t target_count() const;
  /// ceil(target_count / chunk_dim) when chunked, else 1.
  std::size_t chunk_count() const;
  std::size_t hypernet_param_count() const;
  /// Length of the regularized vector w = [h, chunk embeddings].
  std::size_t shared_param_count() const;
  /// Hypernetwork, chunk embeddings and `num_tasks` task embeddings.
  std::size_t total_param_count(std::size_t num_tasks) const;
  void validate() const;
};

/// Target parameters for one task embedding. `w` holds the hypernetwork
/// parameters followed (when chunked) by the chunk embeddings, row-major.
Eigen::VectorXd hn_generate(const Eigen::VectorXd& w, const Eigen::RowVectorXd& embedding,
                            const HypernetConfig& cfg);

/// Raw network output on the tape: 1 x target_count, or chunk_count x
/// chunk_dim when chunked.
ad::Var taped_hn_output(ad::Tape& tape, ad::Var w, ad::Var embedding, const HypernetConfig& cfg);

/// Maps target parameters to/from the raw output layout; padding is filled
/// from `pad` (or zeros) when expanding.
Eigen::VectorXd raw_to_target(const Eigen::MatrixXd& raw, const HypernetConfig& cfg);
Eigen::MatrixXd target_to_raw(const Eigen::VectorXd& theta, const HypernetConfig& cfg,
                              const Eigen::MatrixXd* pad = nullptr);

struct HypernetTaskGradient {
  double loss = 0.0;
  Eigen::VectorXd w;
  Eigen::RowVectorXd embedding;
  std::uint64_t work = 0;
};

/// Reconstruction loss of the NODE generated from `embedding`, with its
/// gradient pulled back through the hypernetwork to w and the embedding.
HypernetTaskGradient hn_task_gradient(const Eigen::VectorXd& w, const Eigen::RowVectorXd& embedding,
                                      const DemonstrationSet& demos, const HypernetConfig& cfg,
                                      const node::NodeConfig& node_config);

struct RegularizerGradient {
  double value = 0.0;
  Eigen::VectorXd w;
  std::uint64_t work = 0;
};

/// beta / m * sum_l ||f(e_l, w_eval) - target_l||^2 over the m stored tasks,
/// and its gradient w.r.t. w_eval. Zero when there are no stored tasks.
RegularizerGradient hn_regularizer_gradient(const Eigen::VectorXd& w_eval,
                                            const std::vector<Eigen::RowVectorXd>& embeddings,
                                            const std::vector<Eigen::VectorXd>& targets,
                                            const HypernetConfig& cfg);

}  // namespace clfd::strategies
