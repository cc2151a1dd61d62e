// Copyright 2026 The mores-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>

#include "mores/tensor.hpp"

// Differentiable tensor operations. Every function records itself on the
// active GradTape when one of its inputs is tracked there; otherwise it is a
// plain forward computation.
namespace mores {

/// (m×k)·(k×p). Adds m·k·p to the MacCounter under the current MacKind.
/// Each output element accumulates over k in ascending order starting from
/// zero, independent of m and p.
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& a);

/// Elementwise a + b; dims must match.
Tensor add(const Tensor& a, const Tensor& b);

/// Adds bias[n] to every row of x[m×n].
Tensor add_bias(const Tensor& x, const Tensor& bias);

/// Elementwise product; dims must match.
Tensor mul(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& x, double factor);

/// Sum of all elements as a scalar.
Tensor sum(const Tensor& x);

/// Row softmax over x[m×k]. `mask` is either m×k or a k-vector broadcast to
/// every row; zero entries are excluded before normalisation and receive
/// probability exactly 0. Throws MaskError when a row has no unmasked entry.
Tensor softmax_rows(const Tensor& x, const Tensor* mask = nullptr);

/// Per-row normalisation of x[m×n] with eps inside the square root, then
/// gain/bias. Population variance.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps);

/// Tanh-approximation GELU.
Tensor gelu(const Tensor& x);
double gelu_value(double x);

/// Rows of table[V×n] selected by ids, as an L×n tensor.
Tensor gather_rows(const Tensor& table, std::span<const std::uint32_t> ids);

/// x[L×n] → [heads×L×(n/heads)].
Tensor split_heads(const Tensor& x, std::size_t heads);

/// [heads×L×w] → L×(heads·w). Inverse of split_heads.
Tensor merge_heads(const Tensor& x);

/// Sub-tensor at `index` along axis 0: [h×a×b] → a×b, [m×n] → 1×n.
Tensor slice0(const Tensor& x, std::size_t index);

/// Same values under new dims with an equal element count.
Tensor reshape(const Tensor& x, Dims dims);

/// Stacks equally-shaped tensors along a new leading axis.
Tensor stack(std::span<const Tensor> parts);

/// Numerically stable binary cross-entropy of sigmoid(score) against label.
Tensor bce_with_logits(const Tensor& score, double label);

}  // namespace mores
