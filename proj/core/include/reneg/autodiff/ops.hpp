// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "reneg/autodiff/tensor.hpp"

// Differentiable operations. Every op validates shapes, computes its result in
// double precision, and records itself on the inputs' tape when any input
// requires grad.
namespace reneg::ad {

// Elementwise, identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);
Tensor neg(const Tensor& a);

Tensor square(const Tensor& a);
/// Rejects negative inputs.
Tensor sqrt(const Tensor& a);
Tensor exp(const Tensor& a);
/// Rejects non-positive inputs.
Tensor log(const Tensor& a);
Tensor tanh(const Tensor& a);
/// log(1 + exp(x)), stable for large |x|.
Tensor softplus(const Tensor& a);
/// x * sigmoid(x).
Tensor silu(const Tensor& a);

/// [m, k] x [k, n] -> [m, n].
Tensor matmul(const Tensor& a, const Tensor& b);

/// Adds a length-n row vector to every row of an [m, n] matrix.
Tensor add_row(const Tensor& a, const Tensor& row);
/// Repeats a length-n vector into an [rows, n] matrix.
Tensor broadcast_rows(const Tensor& row, std::size_t rows);
/// Scales row i of an [m, n] matrix by column[i] (column has m entries).
Tensor mul_col(const Tensor& a, const Tensor& column);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// Sum over the last axis of an [m, n] matrix -> [m].
Tensor sum_rows(const Tensor& a);
/// Numerically stable log(sum(exp(.))) over the last axis of [m, n] -> [m].
Tensor logsumexp_rows(const Tensor& a);
/// Euclidean norm of all entries -> scalar.
Tensor l2_norm(const Tensor& a);

/// Concatenates along `axis` (0 or 1 for matrices, 0 for vectors).
Tensor concat(std::span<const Tensor> parts, std::size_t axis);
/// Half-open slice [begin, end) along `axis`.
Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end);
/// Gathers entries (vector) or rows (matrix) along axis 0; indices may repeat.
Tensor take(const Tensor& a, std::span<const std::size_t> indices);
Tensor reshape(const Tensor& a, Shape shape);

}  // namespace reneg::ad
