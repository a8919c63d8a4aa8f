#include "clfd/autodiff/ops.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace clfd::ad {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Tape& same_tape(Var a, Var b, const char* op) {
  if (!a.valid() || a.tape() != b.tape()) {
    throw std::invalid_argument(std::string(op) + ": operands belong to different tapes");
  }
  return *a.tape();
}

Tape& tape_of(Var a, const char* op) {
  if (!a.valid()) {
    throw std::invalid_argument(std::string(op) + ": unbound variable");
  }
  return *a.tape();
}

void require_same_shape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) +
                                "x" + std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

std::uint64_t product_cost(Eigen::Index m, Eigen::Index k, Eigen::Index n) {
  return static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(k) *
         static_cast<std::uint64_t>(n);
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b, "matmul");
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions differ");
  }
  const auto ia = a.index();
  const auto ib = b.index();
  t.count_multiply_adds(product_cost(a.rows(), a.cols(), b.cols()));
  Matrix v = a.value() * b.value();
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.record(std::move(v), rg, [ia, ib](Tape& tape, const Matrix& g) {
    const Matrix& av = tape.value_at(ia);
    const Matrix& bv = tape.value_at(ib);
    if (tape.requires_grad_at(ia)) {
      tape.count_multiply_adds(product_cost(g.rows(), g.cols(), bv.rows()));
      tape.accumulate(ia, g * bv.transpose());
    }
    if (tape.requires_grad_at(ib)) {
      tape.count_multiply_adds(product_cost(av.cols(), av.rows(), g.cols()));
      tape.accumulate(ib, av.transpose() * g);
    }
  });
}

Var linear(Var x, Var w) {
  Tape& t = same_tape(x, w, "linear");
  if (x.cols() != w.cols()) {
    throw std::invalid_argument("linear: input width " + std::to_string(x.cols()) +
                                " does not match weight columns " + std::to_string(w.cols()));
  }
  const auto ix = x.index();
  const auto iw = w.index();
  t.count_multiply_adds(product_cost(x.rows(), x.cols(), w.rows()));
  Matrix v = x.value() * w.value().transpose();
  const bool rg = t.requires_grad(x) || t.requires_grad(w);
  return t.record(std::move(v), rg, [ix, iw](Tape& tape, const Matrix& g) {
    const Matrix& xv = tape.value_at(ix);
    const Matrix& wv = tape.value_at(iw);
    if (tape.requires_grad_at(ix)) {
      tape.count_multiply_adds(product_cost(g.rows(), g.cols(), wv.cols()));
      tape.accumulate(ix, g * wv);
    }
    if (tape.requires_grad_at(iw)) {
      tape.count_multiply_adds(product_cost(g.cols(), g.rows(), xv.cols()));
      tape.accumulate(iw, g.transpose() * xv);
    }
  });
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b, "add");
  require_same_shape(a, b, "add");
  const auto ia = a.index();
  const auto ib = b.index();
  Matrix v = a.value() + b.value();
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.record(std::move(v), rg, [ia, ib](Tape& tape, const Matrix& g) {
    tape.accumulate(ia, g);
    tape.accumulate(ib, g);
  });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b, "sub");
  require_same_shape(a, b, "sub");
  const auto ia = a.index();
  const auto ib = b.index();
  Matrix v = a.value() - b.value();
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.record(std::move(v), rg, [ia, ib](Tape& tape, const Matrix& g) {
    tape.accumulate(ia, g);
    if (tape.requires_grad_at(ib)) {
      tape.accumulate(ib, -g);
    }
  });
}

Var add_row(Var x, Var row) {
  Tape& t = same_tape(x, row, "add_row");
  if (row.rows() != 1 || row.cols() != x.cols()) {
    throw std::invalid_argument("add_row: row must be 1 x " + std::to_string(x.cols()));
  }
  const auto ix = x.index();
  const auto ir = row.index();
  Matrix v = x.value().rowwise() + row.value().row(0);
  const bool rg = t.requires_grad(x) || t.requires_grad(row);
  return t.record(std::move(v), rg, [ix, ir](Tape& tape, const Matrix& g) {
    tape.accumulate(ix, g);
    if (tape.requires_grad_at(ir)) {
      tape.accumulate(ir, g.colwise().sum());
    }
  });
}

Var scale(Var a, double s) {
  Tape& t = tape_of(a, "scale");
  const auto ia = a.index();
  Matrix v = s * a.value();
  return t.record(std::move(v), t.requires_grad(a),
                  [ia, s](Tape& tape, const Matrix& g) { tape.accumulate(ia, s * g); });
}

Var axpy(Var a, Var b, double s) {
  Tape& t = same_tape(a, b, "axpy");
  require_same_shape(a, b, "axpy");
  const auto ia = a.index();
  const auto ib = b.index();
  Matrix v = a.value() + s * b.value();
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.record(std::move(v), rg, [ia, ib, s](Tape& tape, const Matrix& g) {
    tape.accumulate(ia, g);
    if (tape.requires_grad_at(ib)) {
      tape.accumulate(ib, s * g);
    }
  });
}

Var hadamard(Var a, Var b) {
  Tape& t = same_tape(a, b, "hadamard");
  require_same_shape(a, b, "hadamard");
  const auto ia = a.index();
  const auto ib = b.index();
  Matrix v = a.value().cwiseProduct(b.value());
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.record(std::move(v), rg, [ia, ib](Tape& tape, const Matrix& g) {
    if (tape.requires_grad_at(ia)) {
      tape.accumulate(ia, g.cwiseProduct(tape.value_at(ib)));
    }
    if (tape.requires_grad_at(ib)) {
      tape.accumulate(ib, g.cwiseProduct(tape.value_at(ia)));
    }
  });
}

Var transpose(Var a) {
  Tape& t = tape_of(a, "transpose");
  const auto ia = a.index();
  Matrix v = a.value().transpose();
  return t.record(std::move(v), t.requires_grad(a),
                  [ia](Tape& tape, const Matrix& g) { tape.accumulate(ia, g.transpose()); });
}

Var elu(Var a) {
  Tape& t = tape_of(a, "elu");
  const auto ia = a.index();
  Matrix v = a.value().unaryExpr([](double x) { return x > 0.0 ? x : std::expm1(x); });
  const auto iv = t.size();
  return t.record(std::move(v), t.requires_grad(a), [ia, iv](Tape& tape, const Matrix& g) {
    const Matrix& in = tape.value_at(ia);
    const Matrix& out = tape.value_at(iv);
    // d/dx elu = 1 for x > 0, exp(x) = out + 1 otherwise.
    Matrix local = (in.array() > 0.0).select(Matrix::Ones(in.rows(), in.cols()), out.array() + 1.0);
    tape.accumulate(ia, g.cwiseProduct(local));
  });
}

Var relu(Var a) {
  Tape& t = tape_of(a, "relu");
  const auto ia = a.index();
  Matrix v = a.value().cwiseMax(0.0);
  return t.record(std::move(v), t.requires_grad(a), [ia](Tape& tape, const Matrix& g) {
    const Matrix& in = tape.value_at(ia);
    tape.accumulate(ia, (in.array() > 0.0).select(g, 0.0));
  });
}

Var sum(Var a) {
  Tape& t = tape_of(a, "sum");
  const auto ia = a.index();
  const auto r = a.rows();
  const auto c = a.cols();
  Matrix v(1, 1);
  v(0, 0) = a.value().sum();
  return t.record(std::move(v), t.requires_grad(a), [ia, r, c](Tape& tape, const Matrix& g) {
    tape.accumulate(ia, Matrix::Constant(r, c, g(0, 0)));
  });
}

Var sum_squares(Var a) {
  Tape& t = tape_of(a, "sum_squares");
  const auto ia = a.index();
  Matrix v(1, 1);
  v(0, 0) = a.value().squaredNorm();
  return t.record(std::move(v), t.requires_grad(a), [ia](Tape& tape, const Matrix& g) {
    tape.accumulate(ia, (2.0 * g(0, 0)) * tape.value_at(ia));
  });
}

Var half_squared_error(Var a, const Matrix& target) {
  Tape& t = tape_of(a, "half_squared_error");
  if (a.rows() != target.rows() || a.cols() != target.cols()) {
    throw std::invalid_argument("half_squared_error: shape mismatch");
  }
  const auto ia = a.index();
  Matrix diff = a.value() - target;
  Matrix v(1, 1);
  v(0, 0) = 0.5 * diff.squaredNorm();
  return t.record(std::move(v), t.requires_grad(a),
                  [ia, diff = std::move(diff)](Tape& tape, const Matrix& g) {
                    tape.accumulate(ia, g(0, 0) * diff);
                  });
}

Var squared_distance(Var a, const Matrix& target) {
  Tape& t = tape_of(a, "squared_distance");
  if (a.rows() != target.rows() || a.cols() != target.cols()) {
    throw std::invalid_argument("squared_distance: shape mismatch");
  }
  const auto ia = a.index();
  Matrix diff = a.value() - target;
  Matrix v(1, 1);
  v(0, 0) = diff.squaredNorm();
  return t.record(std::move(v), t.requires_grad(a),
                  [ia, diff = std::move(diff)](Tape& tape, const Matrix& g) {
                    tape.accumulate(ia, (2.0 * g(0, 0)) * diff);
                  });
}

Var concat_cols(Var a, Var b) {
  Tape& t = same_tape(a, b, "concat_cols");
  if (a.rows() != b.rows()) {
    throw std::invalid_argument("concat_cols: row counts differ");
  }
  const auto ia = a.index();
  const auto ib = b.index();
  const auto ca = a.cols();
  const auto cb = b.cols();
  Matrix v(a.rows(), ca + cb);
  v << a.value(), b.value();
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.record(std::move(v), rg, [ia, ib, ca, cb](Tape& tape, const Matrix& g) {
    if (tape.requires_grad_at(ia)) {
      tape.accumulate(ia, g.leftCols(ca));
    }
    if (tape.requires_grad_at(ib)) {
      tape.accumulate(ib, g.rightCols(cb));
    }
  });
}

Var repeat_rows(Var row, Eigen::Index n) {
  Tape& t = tape_of(row, "repeat_rows");
  if (row.rows() != 1 || n < 1) {
    throw std::invalid_argument("repeat_rows: expects a single row and n >= 1");
  }
  const auto ir = row.index();
  Matrix v = row.value().replicate(n, 1);
  return t.record(std::move(v), t.requires_grad(row), [ir](Tape& tape, const Matrix& g) {
    tape.accumulate(ir, g.colwise().sum());
  });
}

Var block(Var a, Eigen::Index row, Eigen::Index col, Eigen::Index rows, Eigen::Index cols) {
  Tape& t = tape_of(a, "block");
  if (row < 0 || col < 0 || rows < 0 || cols < 0 || row + rows > a.rows() ||
      col + cols > a.cols()) {
    throw std::invalid_argument("block: range outside matrix");
  }
  const auto ia = a.index();
  Matrix v = a.value().block(row, col, rows, cols);
  return t.record(std::move(v), t.requires_grad(a), [ia, row, col](Tape& tape, const Matrix& g) {
    if (tape.requires_grad_at(ia)) {
      tape.gradient_buffer(ia).block(row, col, g.rows(), g.cols()) += g;
    }
  });
}

Var reshape_slice(Var flat, Eigen::Index offset, Eigen::Index rows, Eigen::Index cols) {
  Tape& t = tape_of(flat, "reshape_slice");
  if (flat.cols() != 1) {
    throw std::invalid_argument("reshape_slice: source must be a column vector");
  }
  if (offset < 0 || offset + rows * cols > flat.rows()) {
    throw std::invalid_argument("reshape_slice: range outside vector");
  }
  const auto iflat = flat.index();
  Matrix v = Eigen::Map<const RowMajor>(flat.value().data() + offset, rows, cols);
  return t.record(std::move(v), t.requires_grad(flat),
                  [iflat, offset, rows, cols](Tape& tape, const Matrix& g) {
                    if (tape.requires_grad_at(iflat)) {
                      Eigen::Map<RowMajor>(tape.gradient_buffer(iflat).data() + offset, rows,
                                           cols) += g;
                    }
                  });
}

Var flatten(Var a) {
  Tape& t = tape_of(a, "flatten");
  const auto ia = a.index();
  const auto r = a.rows();
  const auto c = a.cols();
  RowMajor rm = a.value();
  Matrix v = Eigen::Map<const Matrix>(rm.data(), r * c, 1);
  return t.record(std::move(v), t.requires_grad(a), [ia, r, c](Tape& tape, const Matrix& g) {
    Matrix back = Eigen::Map<const RowMajor>(g.data(), r, c);
    tape.accumulate(ia, back);
  });
}

}  // namespace clfd::ad
