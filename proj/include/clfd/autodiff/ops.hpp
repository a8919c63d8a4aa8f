#pragma once

#include "clfd/autodiff/tape.hpp"

namespace clfd::ad {

// Differentiable primitives. All inputs must live on the same tape.
// Shapes follow Eigen conventions; batches are stored one sample per row.

Var matmul(Var a, Var b);
/// x * w^T, the usual dense-layer product with w stored as (out x in).
Var linear(Var x, Var w);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Adds a 1 x n row to every row of x.
Var add_row(Var x, Var row);
Var scale(Var a, double s);
/// a + s * b in one node.
Var axpy(Var a, Var b, double s);
Var hadamard(Var a, Var b);
Var transpose(Var a);

/// ELU with alpha = 1.
Var elu(Var a);
Var relu(Var a);

Var sum(Var a);
Var sum_squares(Var a);
/// 0.5 * ||a - target||^2 against a constant target.
Var half_squared_error(Var a, const Matrix& target);
/// ||a - target||^2 against a constant target.
Var squared_distance(Var a, const Matrix& target);

Var concat_cols(Var a, Var b);
/// Repeats a single row n times.
Var repeat_rows(Var row, Eigen::Index n);
Var block(Var a, Eigen::Index row, Eigen::Index col, Eigen::Index rows, Eigen::Index cols);
/// Interprets entries [offset, offset + rows*cols) of a column vector as a
/// row-major (rows x cols) matrix.
Var reshape_slice(Var flat, Eigen::Index offset, Eigen::Index rows, Eigen::Index cols);
/// Row-major flattening into a column vector.
Var flatten(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }

}  // namespace clfd::ad
