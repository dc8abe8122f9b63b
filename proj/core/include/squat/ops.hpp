#pragma once

#include <vector>

#include "squat/tensor.hpp"

namespace squat {

// Differentiable operations. Every function computes the forward value
// eagerly and, when grad mode is on and any input requires grad, records a
// backward closure on the tape. Gradients accumulate (+=) into input buffers.

// [m x k] * [k x n] -> [m x n]; d/da = g * b^T, d/db = a^T * g.
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);

Tensor transpose(Tape& tape, const Tensor& x);

// Same-shape elementwise sum.
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);

// x [m x n] + bias [1 x n] broadcast over rows.
Tensor add_rowvec(Tape& tape, const Tensor& x, const Tensor& bias);

// Multiplication by a constant (no gradient for the constant).
Tensor scale(Tape& tape, const Tensor& x, double c);

// Horizontal concatenation; all parts must share the row count.
Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts);

// Columns [start, start + len).
Tensor slice_cols(Tape& tape, const Tensor& x, int start, int len);

// out[k] = x[indices[k]]. Duplicate indices are allowed; gradients
// accumulate into the source row. Rows not gathered receive exactly zero.
Tensor gather_rows(Tape& tape, const Tensor& x, const std::vector<int>& indices);

// Copy of base with rows[k] written at indices[k]. Indices must be strictly
// increasing. Untouched rows are copied bit-for-bit, and their gradient flows
// to base; touched rows route gradient to `rows` only.
Tensor scatter_rows(Tape& tape, const Tensor& base, const std::vector<int>& indices, const Tensor& rows);

// Row-wise softmax, stabilized by subtracting the row max.
Tensor softmax_rows(Tape& tape, const Tensor& x);

// Row-wise layer normalization with learnable gain/bias [1 x n].
Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

// GeLU, tanh approximation.
Tensor gelu(Tape& tape, const Tensor& x);

// Column means -> [1 x n].
Tensor mean_rows(Tape& tape, const Tensor& x);

// Repeat a [1 x n] row `copies` times.
Tensor tile_rows(Tape& tape, const Tensor& x, int copies);

Tensor sum_all(Tape& tape, const Tensor& x);
Tensor mean_all(Tape& tape, const Tensor& x);

// Mean over rows of CE(softmax(logits_i), labels_i), computed via the
// log-sum-exp form so probabilities never underflow.
Tensor cross_entropy_rows(Tape& tape, const Tensor& logits, const std::vector<int>& labels);

// Mean elementwise binary cross-entropy between sigmoid(logits) and targets,
// computed in the softplus form: mean(softplus(x) - t * x).
Tensor bce_with_logits(Tape& tape, const Tensor& logits, const std::vector<double>& targets);

}  // namespace squat
