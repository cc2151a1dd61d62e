// Copyright 2026 The mores-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "mores/tensor.hpp"

namespace mores {

inline constexpr double kLayerNormEps = 1e-12;

struct LayerNormParams {
  Tensor gain;
  Tensor bias;
};

/// Multi-head attention weights. Projections are applied as x·W + b with
/// W stored [n×n] (input rows, output columns).
struct AttentionParams {
  Tensor wq, wk, wv, wo;
  Tensor bq, bk, bv, bo;
  std::size_t heads = 1;

  std::size_t width() const { return wq.rows(); }
  std::size_t head_width() const { return width() / heads; }
};

struct FeedForwardParams {
  Tensor w_in;   // [n×f]
  Tensor b_in;   // [f]
  Tensor w_out;  // [f×n]
  Tensor b_out;  // [n]
};

struct EncoderLayerParams {
  AttentionParams attn;
  FeedForwardParams ffn;
  LayerNormParams ln_attn;
  LayerNormParams ln_ffn;
};

/// Query→document cross attention, query self attention, then FFN; each
/// followed by residual + layer norm.
struct InteractionBlockParams {
  AttentionParams cross_attn;
  AttentionParams self_attn;
  FeedForwardParams ffn;
  LayerNormParams ln_cross;
  LayerNormParams ln_self;
  LayerNormParams ln_ffn;
};

/// Key and value projections of a sequence, head-major [heads×len×(n/heads)].
struct ProjectedKV {
  Tensor keys;
  Tensor values;
};

struct AttentionResult {
  Tensor output;   // [a×n]
  Tensor weights;  // [heads×a×b]
};

// Zero-initialised parameter shapes; gains of layer norms start at one.
AttentionParams zero_attention(std::size_t n, std::size_t heads);
FeedForwardParams zero_feed_forward(std::size_t n, std::size_t f);
LayerNormParams unit_layer_norm(std::size_t n);

/// Key/value projections of y under p, in the layout attend() consumes.
ProjectedKV project_kv(const Tensor& y, const AttentionParams& p);

/// Scaled dot-product multi-head attention from rows of x to rows of y.
/// y_mask (length b, zero = excluded) may be null for "all valid".
AttentionResult attend(const Tensor& x, const Tensor& y, const AttentionParams& p,
                       const Tensor* y_mask = nullptr);

/// Same computation with the key/value projections supplied. Both overloads
/// run the identical post-projection code, so results agree bit for bit.
AttentionResult attend(const Tensor& x, const ProjectedKV& kv, const AttentionParams& p,
                       const Tensor* y_mask = nullptr);

Tensor feed_forward(const Tensor& x, const FeedForwardParams& p);

/// Post-norm encoder layer: LN(attend(x,x)+x), then LN(FFN(·)+·).
/// When `attention` is non-null the [heads×L×L] weights are appended to it.
Tensor encoder_layer(const Tensor& h_in, const EncoderLayerParams& p, const Tensor* mask = nullptr,
                     std::vector<Tensor>* attention = nullptr);

struct InteractionAttention {
  Tensor cross;  // [heads×(q+1)×d]
  Tensor self;   // [heads×(q+1)×(q+1)]
};

/// One Interaction Block over query rows q_in against a fixed document.
/// The document side is only read.
Tensor interaction_block(const Tensor& q_in, const Tensor& doc, const InteractionBlockParams& p,
                         const Tensor* d_mask = nullptr, const Tensor* q_mask = nullptr,
                         InteractionAttention* attention = nullptr);

Tensor interaction_block(const Tensor& q_in, const ProjectedKV& doc_kv,
                         const InteractionBlockParams& p, const Tensor* d_mask = nullptr,
                         const Tensor* q_mask = nullptr, InteractionAttention* attention = nullptr);

}  // namespace mores
