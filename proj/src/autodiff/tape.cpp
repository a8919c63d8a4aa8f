#include "clfd/autodiff/tape.hpp"

#include <stdexcept>
#include <utility>

namespace clfd::ad {

const Matrix& Var::value() const {
  if (tape_ == nullptr) {
    throw std::logic_error("Var: not bound to a tape");
  }
  return tape_->value_at(index_);
}

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw std::logic_error("Var::scalar: node is not 1x1");
  }
  return v(0, 0);
}

Var Tape::variable(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix(), nullptr, true, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix(), nullptr, false, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, bool requires_grad, Backward backward) {
  nodes_.push_back(Node{std::move(value), Matrix(), requires_grad ? std::move(backward) : nullptr,
                        requires_grad, false});
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(std::size_t index, const Matrix& contribution) {
  Node& node = nodes_[index];
  if (!node.requires_grad) {
    return;
  }
  if (!node.has_grad) {
    node.grad = contribution;
    node.has_grad = true;
  } else {
    node.grad += contribution;
  }
}

Matrix& Tape::gradient_buffer(std::size_t index) {
  Node& node = nodes_[index];
  if (!node.has_grad) {
    node.grad = Matrix::Zero(node.value.rows(), node.value.cols());
    node.has_grad = true;
  }
  return node.grad;
}

void Tape::backward(Var loss) {
  if (!owns(loss)) {
    throw std::invalid_argument("Tape::backward: loss is not recorded on this tape");
  }
  const Matrix& lv = nodes_[loss.index()].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw std::invalid_argument("Tape::backward: loss must be a 1x1 node");
  }
  for (auto& node : nodes_) {
    node.has_grad = false;
    node.grad.resize(0, 0);
  }
  accumulate(loss.index(), Matrix::Ones(1, 1));
  for (std::size_t i = loss.index() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.has_grad || !node.backward) {
      continue;
    }
    node.backward(*this, node.grad);
  }
}

Matrix Tape::gradient(Var v) const {
  if (!owns(v)) {
    throw std::invalid_argument("Tape::gradient: variable is not recorded on this tape");
  }
  const Node& node = nodes_[v.index()];
  if (!node.has_grad) {
    return Matrix::Zero(node.value.rows(), node.value.cols());
  }
  return node.grad;
}

bool Tape::requires_grad(Var v) const {
  return owns(v) && nodes_[v.index()].requires_grad;
}

}  // namespace clfd::ad
