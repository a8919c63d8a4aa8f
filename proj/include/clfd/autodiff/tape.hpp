#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>

namespace clfd::ad {

using Matrix = Eigen::MatrixXd;

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
/// owning tape is alive.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  double scalar() const;

  Tape* tape() const { return tape_; }
  std::size_t index() const { return index_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}

  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

/// Linear record of primitive operations for reverse-mode differentiation.
///
/// A tape is built for a single forward pass and discarded afterwards. Nodes
/// are appended in evaluation order, so a reverse sweep over the node list is
/// a valid topological order for the backward pass.
class Tape {
 public:
  /// Propagates the output adjoint of a node into the adjoints of its inputs.
  using Backward = std::function<void(Tape&, const Matrix& output_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that receives a gradient.
  Var variable(Matrix value);
  /// Leaf excluded from differentiation.
  Var constant(Matrix value);
  /// Appends an operation node. `requires_grad` should be true iff any input
  /// requires a gradient; otherwise `backward` is never invoked.
  Var record(Matrix value, bool requires_grad, Backward backward);

  /// Runs the reverse sweep from a 1x1 node. Throws std::invalid_argument if
  /// the node does not belong to this tape or is not scalar.
  void backward(Var loss);

  /// Adjoint of `v` after backward(); a zero matrix when nothing flowed in.
  Matrix gradient(Var v) const;
  bool requires_grad(Var v) const;
  const Matrix& value_at(std::size_t index) const { return nodes_[index].value; }
  bool requires_grad_at(std::size_t index) const { return nodes_[index].requires_grad; }

  /// Adds `contribution` to the adjoint of node `index` (used by Backward
  /// closures). Ignored for nodes that do not require a gradient.
  void accumulate(std::size_t index, const Matrix& contribution);
  /// Adjoint buffer of node `index`, zero-initialised on first access. Lets
  /// slicing ops scatter into a sub-range without materialising a full-size
  /// temporary. Only valid for nodes that require a gradient.
  Matrix& gradient_buffer(std::size_t index);

  std::size_t size() const { return nodes_.size(); }

  /// Multiply-add count of all matrix products recorded or back-propagated on
  /// this tape. Serves as a deterministic training-cost clock.
  std::uint64_t multiply_adds() const { return multiply_adds_; }
  void count_multiply_adds(std::uint64_t n) { multiply_adds_ += n; }

  bool owns(Var v) const { return v.tape() == this && v.index() < nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    bool requires_grad = false;
    bool has_grad = false;
  };

  // deque keeps references returned by value() stable while recording.
  std::deque<Node> nodes_;
  std::uint64_t multiply_adds_ = 0;
};

}  // namespace clfd::ad
