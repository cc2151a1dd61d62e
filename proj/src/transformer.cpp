// Copyright 2026 The mores-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mores/transformer.hpp"

#include <cmath>

#include "mores/errors.hpp"
#include "mores/ops.hpp"

namespace mores {

AttentionParams zero_attention(std::size_t n, std::size_t heads) {
  if (heads == 0 || n % heads != 0) {
    throw ConfigError("hidden width " + std::to_string(n) + " not divisible by " +
                      std::to_string(heads) + " heads");
  }
  AttentionParams p;
  p.wq = Tensor({n, n});
  p.wk = Tensor({n, n});
  p.wv = Tensor({n, n});
  p.wo = Tensor({n, n});
  p.bq = Tensor({n});
  p.bk = Tensor({n});
  p.bv = Tensor({n});
  p.bo = Tensor({n});
  p.heads = heads;
  return p;
}

FeedForwardParams zero_feed_forward(std::size_t n, std::size_t f) {
  return FeedForwardParams{Tensor({n, f}), Tensor({f}), Tensor({f, n}), Tensor({n})};
}

LayerNormParams unit_layer_norm(std::size_t n) { return LayerNormParams{Tensor({n}, 1.0), Tensor({n})}; }

namespace {

Tensor project(const Tensor& x, const Tensor& w, const Tensor& b) {
  MacScope scope(MacKind::projection);
  return add_bias(matmul(x, w), b);
}

void check_kv(const ProjectedKV& kv, const AttentionParams& p) {
  const Dims& k = kv.keys.dims();
  if (k.size() != 3 || k[0] != p.heads || k[2] != p.head_width() || kv.values.dims() != k) {
    throw ShapeError("precomputed key/value dims " + format_dims(kv.keys.dims()) + "/" +
                     format_dims(kv.values.dims()) + " do not match " +
                     std::to_string(p.heads) + " heads of width " +
                     std::to_string(p.head_width()));
  }
}

}  // namespace

ProjectedKV project_kv(const Tensor& y, const AttentionParams& p) {
  return ProjectedKV{split_heads(project(y, p.wk, p.bk), p.heads),
                     split_heads(project(y, p.wv, p.bv), p.heads)};
}

AttentionResult attend(const Tensor& x, const Tensor& y, const AttentionParams& p,
                       const Tensor* y_mask) {
  if (x.rank() != 2 || y.rank() != 2 || x.cols() != p.width() || y.cols() != p.width()) {
    throw ShapeError("attend: inputs " + format_dims(x.dims()) + ", " + format_dims(y.dims()) +
                     " for width " + std::to_string(p.width()));
  }
  return attend(x, project_kv(y, p), p, y_mask);
}

AttentionResult attend(const Tensor& x, const ProjectedKV& kv, const AttentionParams& p,
                       const Tensor* y_mask) {
  check_kv(kv, p);
  const std::size_t keys = kv.keys.dim(1);
  if (y_mask != nullptr && y_mask->size() != keys) {
    throw ShapeError("attend: mask " + format_dims(y_mask->dims()) + " for " +
                     std::to_string(keys) + " keys");
  }
  const Tensor queries = split_heads(project(x, p.wq, p.bq), p.heads);
  const double scaling = 1.0 / std::sqrt(static_cast<double>(p.head_width()));

  std::vector<Tensor> contexts;
  std::vector<Tensor> weights;
  contexts.reserve(p.heads);
  weights.reserve(p.heads);
  for (std::size_t h = 0; h < p.heads; ++h) {
    Tensor logits;
    {
      MacScope scope(MacKind::attention_score);
      logits = scale(matmul(slice0(queries, h), transpose(slice0(kv.keys, h))), scaling);
    }
    Tensor probs;
    try {
      probs = softmax_rows(logits, y_mask);
    } catch (const MaskError&) {
      throw MaskError("attend: key mask excludes every position");
    }
    {
      MacScope scope(MacKind::attention_context);
      contexts.push_back(matmul(probs, slice0(kv.values, h)));
    }
    weights.push_back(std::move(probs));
  }
  Tensor merged = merge_heads(stack(contexts));
  return AttentionResult{project(merged, p.wo, p.bo), stack(weights)};
}

Tensor feed_forward(const Tensor& x, const FeedForwardParams& p) {
  MacScope scope(MacKind::feed_forward);
  return add_bias(matmul(gelu(add_bias(matmul(x, p.w_in), p.b_in)), p.w_out), p.b_out);
}

Tensor encoder_layer(const Tensor& h_in, const EncoderLayerParams& p, const Tensor* mask,
                     std::vector<Tensor>* attention) {
  AttentionResult attn = attend(h_in, h_in, p.attn, mask);
  if (attention != nullptr) attention->push_back(attn.weights);
  Tensor hidden =
      layer_norm(add(attn.output, h_in), p.ln_attn.gain, p.ln_attn.bias, kLayerNormEps);
  return layer_norm(add(feed_forward(hidden, p.ffn), hidden), p.ln_ffn.gain, p.ln_ffn.bias,
                    kLayerNormEps);
}

Tensor interaction_block(const Tensor& q_in, const Tensor& doc, const InteractionBlockParams& p,
                         const Tensor* d_mask, const Tensor* q_mask,
                         InteractionAttention* attention) {
  if (doc.rank() != 2 || doc.cols() != p.cross_attn.width()) {
    throw ShapeError("interaction_block: document " + format_dims(doc.dims()) +
                     " for width " + std::to_string(p.cross_attn.width()));
  }
  return interaction_block(q_in, project_kv(doc, p.cross_attn), p, d_mask, q_mask, attention);
}

Tensor interaction_block(const Tensor& q_in, const ProjectedKV& doc_kv,
                         const InteractionBlockParams& p, const Tensor* d_mask,
                         const Tensor* q_mask, InteractionAttention* attention) {
  AttentionResult cross = attend(q_in, doc_kv, p.cross_attn, d_mask);
  Tensor q_cross =
      layer_norm(add(cross.output, q_in), p.ln_cross.gain, p.ln_cross.bias, kLayerNormEps);
  AttentionResult self = attend(q_cross, q_cross, p.self_attn, q_mask);
  Tensor q_self =
      layer_norm(add(self.output, q_cross), p.ln_self.gain, p.ln_self.bias, kLayerNormEps);
  if (attention != nullptr) {
    attention->cross = std::move(cross.weights);
    attention->self = std::move(self.weights);
  }
  return layer_norm(add(feed_forward(q_self, p.ffn), q_self), p.ln_ffn.gain, p.ln_ffn.bias,
                    kLayerNormEps);
}

}  // namespace mores
