// Copyright 2026 The mores-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <concepts>
#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "mores/tensor.hpp"
#include "mores/transformer.hpp"

namespace mores {

using TokenId = std::uint32_t;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kUnkId = 1;
inline constexpr TokenId kClsId = 2;
inline constexpr TokenId kSepId = 3;
inline constexpr TokenId kReservedTokens = 4;

/// Model dimensions. A monolithic ranker (and a donor checkpoint) has
/// M = N = K = 0 and `source_layers` encoder layers; a modular model has
/// M document layers, N query layers and K interaction blocks.
struct HyperParams {
  std::uint32_t n = 0;
  std::uint32_t heads = 0;
  std::uint32_t f = 0;
  std::uint32_t vocab_size = 0;
  std::uint32_t max_positions = 0;
  std::uint32_t M = 0;
  std::uint32_t N = 0;
  std::uint32_t K = 0;
  std::uint32_t source_layers = 12;

  bool operator==(const HyperParams&) const = default;

  bool is_ranker() const { return M == 0 && N == 0 && K == 0; }
  /// Throws ConfigError unless the dims describe a modular model.
  void validate_model() const;
  /// Throws ConfigError unless the dims describe a monolithic ranker.
  void validate_ranker() const;
};

struct Embeddings {
  Tensor word;      // [vocab×n]
  Tensor position;  // [max_positions×n]
};

struct ModelParams {
  HyperParams hp;
  Embeddings doc_embed;
  std::vector<EncoderLayerParams> doc_layers;
  Embeddings qry_embed;
  std::vector<EncoderLayerParams> qry_layers;
  std::vector<InteractionBlockParams> ib_layers;
  Tensor score_w;  // [n]
  Tensor score_b;  // [1]
};

/// Full-attention ranker over "[CLS] query [SEP] document". Donor
/// checkpoints for split initialisation use the same shape.
struct RankerParams {
  HyperParams hp;
  Embeddings embed;
  std::vector<EncoderLayerParams> layers;
  Tensor score_w;
  Tensor score_b;
};

enum class ParamGroup : std::uint8_t {
  doc_representation,
  query_representation,
  interaction,
  scoring_head,
};

const char* param_group_name(ParamGroup group);

ModelParams zero_model(const HyperParams& hp);
RankerParams zero_ranker(const HyperParams& hp);

inline constexpr double kInitStd = 0.02;

/// Seeded BERT-shaped weights: matrices and embeddings ~ N(0, stddev), biases
/// zero, layer-norm gains one.
RankerParams synthesize_donor(const HyperParams& hp, std::uint64_t seed,
                              double stddev = kInitStd);

/// Modular model with the same seeded scheme applied to every module,
/// including both attentions of each interaction block.
ModelParams synthesize_model(const HyperParams& hp, std::uint64_t seed,
                             double stddev = kInitStd);

/// Word + position lookup, then the M document encoder layers.
Tensor encode_document(std::span<const TokenId> tokens, const ModelParams& params,
                       const Tensor* mask = nullptr, std::vector<Tensor>* attention = nullptr);

/// [CLS] is prepended, so the result has tokens.size() + 1 rows. `mask`
/// covers the query tokens only.
Tensor encode_query(std::span<const TokenId> tokens, const ModelParams& params,
                    const Tensor* mask = nullptr, std::vector<Tensor>* attention = nullptr);

/// Cross-attention key/value projections of D for every interaction block.
std::vector<ProjectedKV> project_document(const Tensor& doc, const ModelParams& params);

/// Runs the K interaction blocks and projects the final CLS row. Returns a
/// scalar tensor. `q_mask` has one entry per row of `query` (CLS included).
Tensor score(const Tensor& query, const Tensor& doc, const ModelParams& params,
             const Tensor* d_mask = nullptr, const Tensor* q_mask = nullptr,
             std::vector<InteractionAttention>* attention = nullptr);

Tensor score(const Tensor& query, std::span<const ProjectedKV> doc_kv, const ModelParams& params,
             const Tensor* d_mask = nullptr, const Tensor* q_mask = nullptr,
             std::vector<InteractionAttention>* attention = nullptr);

/// Encodes both sides and scores them in one call.
Tensor score_pair(std::span<const TokenId> query, std::span<const TokenId> doc,
                  const ModelParams& params);

/// Full self-attention over the concatenated sequence through all ranker
/// layers; masks cover the query and document tokens.
Tensor monolithic_score(std::span<const TokenId> query, std::span<const TokenId> doc,
                        const RankerParams& params, const Tensor* q_mask = nullptr,
                        const Tensor* d_mask = nullptr);

enum class CrossInit : std::uint8_t { copy, random };

/// Builds a modular model from a donor: the document module is a full copy,
/// the first source_layers − K layers become the query module and the last
/// K layers seed the interaction blocks.
ModelParams split_initialize(const RankerParams& donor, std::uint32_t K, CrossInit cross_init,
                             std::uint64_t seed);

// ---------------------------------------------------------------------------
// Named parameter registry. Visitation order is fixed and defines checkpoint
// tensor order.

namespace detail {

template <class T, class Fn>
void visit_attention(const std::string& prefix, T& a, ParamGroup g, Fn& fn) {
  fn(prefix + ".wq", a.wq, g);
  fn(prefix + ".wk", a.wk, g);
  fn(prefix + ".wv", a.wv, g);
  fn(prefix + ".wo", a.wo, g);
  fn(prefix + ".bq", a.bq, g);
  fn(prefix + ".bk", a.bk, g);
  fn(prefix + ".bv", a.bv, g);
  fn(prefix + ".bo", a.bo, g);
}

template <class T, class Fn>
void visit_ffn(const std::string& prefix, T& f, ParamGroup g, Fn& fn) {
  fn(prefix + ".w_in", f.w_in, g);
  fn(prefix + ".b_in", f.b_in, g);
  fn(prefix + ".w_out", f.w_out, g);
  fn(prefix + ".b_out", f.b_out, g);
}

template <class T, class Fn>
void visit_ln(const std::string& prefix, T& ln, ParamGroup g, Fn& fn) {
  fn(prefix + ".gain", ln.gain, g);
  fn(prefix + ".bias", ln.bias, g);
}

template <class T, class Fn>
void visit_encoder(const std::string& prefix, T& layer, ParamGroup g, Fn& fn) {
  visit_attention(prefix + ".attn", layer.attn, g, fn);
  visit_ln(prefix + ".ln_attn", layer.ln_attn, g, fn);
  visit_ffn(prefix + ".ffn", layer.ffn, g, fn);
  visit_ln(prefix + ".ln_ffn", layer.ln_ffn, g, fn);
}

template <class T, class Fn>
void visit_embeddings(const std::string& prefix, T& e, ParamGroup g, Fn& fn) {
  fn(prefix + ".word", e.word, g);
  fn(prefix + ".position", e.position, g);
}

}  // namespace detail

/// Calls fn(name, tensor, group) for every parameter tensor.
template <class Params, class Fn>
  requires std::same_as<std::remove_const_t<Params>, ModelParams>
void visit_params(Params& p, Fn&& fn) {
  using detail::visit_embeddings, detail::visit_encoder, detail::visit_attention,
      detail::visit_ffn, detail::visit_ln;
  visit_embeddings("doc.embed", p.doc_embed, ParamGroup::doc_representation, fn);
  for (std::size_t i = 0; i < p.doc_layers.size(); ++i) {
    visit_encoder("doc.layer." + std::to_string(i), p.doc_layers[i],
                  ParamGroup::doc_representation, fn);
  }
  visit_embeddings("qry.embed", p.qry_embed, ParamGroup::query_representation, fn);
  for (std::size_t i = 0; i < p.qry_layers.size(); ++i) {
    visit_encoder("qry.layer." + std::to_string(i), p.qry_layers[i],
                  ParamGroup::query_representation, fn);
  }
  for (std::size_t i = 0; i < p.ib_layers.size(); ++i) {
    const std::string prefix = "ib." + std::to_string(i);
    auto& ib = p.ib_layers[i];
    visit_attention(prefix + ".cross", ib.cross_attn, ParamGroup::interaction, fn);
    visit_ln(prefix + ".ln_cross", ib.ln_cross, ParamGroup::interaction, fn);
    visit_attention(prefix + ".self", ib.self_attn, ParamGroup::interaction, fn);
    visit_ln(prefix + ".ln_self", ib.ln_self, ParamGroup::interaction, fn);
    visit_ffn(prefix + ".ffn", ib.ffn, ParamGroup::interaction, fn);
    visit_ln(prefix + ".ln_ffn", ib.ln_ffn, ParamGroup::interaction, fn);
  }
  fn(std::string("score.w"), p.score_w, ParamGroup::scoring_head);
  fn(std::string("score.b"), p.score_b, ParamGroup::scoring_head);
}

template <class Params, class Fn>
  requires std::same_as<std::remove_const_t<Params>, RankerParams>
void visit_params(Params& p, Fn&& fn) {
  // A ranker is a single module; its tensors are reported under one group.
  constexpr auto g = ParamGroup::doc_representation;
  detail::visit_embeddings("embed", p.embed, g, fn);
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    detail::visit_encoder("layer." + std::to_string(i), p.layers[i], g, fn);
  }
  fn(std::string("score.w"), p.score_w, ParamGroup::scoring_head);
  fn(std::string("score.b"), p.score_b, ParamGroup::scoring_head);
}

}  // namespace mores
