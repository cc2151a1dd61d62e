// Copyright 2026 The mores-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mores/model.hpp"

#include <numeric>
#include <random>

#include "mores/errors.hpp"
#include "mores/ops.hpp"

namespace mores {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

void validate_common(const HyperParams& hp) {
  require(hp.n >= 1 && hp.heads >= 1 && hp.f >= 1, "n, heads and f must be positive");
  require(hp.n % hp.heads == 0, "hidden width " + std::to_string(hp.n) +
                                    " not divisible by " + std::to_string(hp.heads) + " heads");
  require(hp.vocab_size > kReservedTokens, "vocab must hold more than the reserved tokens");
  require(hp.max_positions >= 2, "max_positions must be at least 2");
}

}  // namespace

void HyperParams::validate_model() const {
  validate_common(*this);
  require(M >= 1 && N >= 1 && K >= 1, "M, N and K must each be at least 1");
}

void HyperParams::validate_ranker() const {
  validate_common(*this);
  require(is_ranker(), "ranker dims must have M = N = K = 0");
  require(source_layers >= 1, "ranker needs at least one layer");
}

const char* param_group_name(ParamGroup group) {
  switch (group) {
    case ParamGroup::doc_representation: return "doc_representation";
    case ParamGroup::query_representation: return "query_representation";
    case ParamGroup::interaction: return "interaction";
    case ParamGroup::scoring_head: return "scoring_head";
  }
  return "unknown";
}

namespace {

Embeddings zero_embeddings(const HyperParams& hp) {
  return Embeddings{Tensor({hp.vocab_size, hp.n}), Tensor({hp.max_positions, hp.n})};
}

EncoderLayerParams zero_encoder(const HyperParams& hp) {
  return EncoderLayerParams{zero_attention(hp.n, hp.heads), zero_feed_forward(hp.n, hp.f),
                            unit_layer_norm(hp.n), unit_layer_norm(hp.n)};
}

InteractionBlockParams zero_ib(const HyperParams& hp) {
  return InteractionBlockParams{zero_attention(hp.n, hp.heads), zero_attention(hp.n, hp.heads),
                                zero_feed_forward(hp.n, hp.f),  unit_layer_norm(hp.n),
                                unit_layer_norm(hp.n),          unit_layer_norm(hp.n)};
}

void fill_normal(Tensor& t, std::mt19937_64& rng, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : t.values()) v = dist(rng);
}

void init_attention(AttentionParams& a, std::mt19937_64& rng, double stddev) {
  fill_normal(a.wq, rng, stddev);
  fill_normal(a.wk, rng, stddev);
  fill_normal(a.wv, rng, stddev);
  fill_normal(a.wo, rng, stddev);
}

Tensor embed(std::span<const TokenId> tokens, const Embeddings& e, const HyperParams& hp) {
  for (TokenId id : tokens) {
    if (id >= hp.vocab_size) {
      throw VocabError("token id " + std::to_string(id) + " outside vocabulary of " +
                       std::to_string(hp.vocab_size));
    }
  }
  std::vector<TokenId> positions(tokens.size());
  std::iota(positions.begin(), positions.end(), TokenId{0});
  return add(gather_rows(e.word, tokens), gather_rows(e.position, positions));
}

void check_length(std::size_t len, std::size_t limit, const char* what) {
  if (len == 0) throw LengthError(std::string(what) + " has no tokens");
  if (len > limit) {
    throw LengthError(std::string(what) + " length " + std::to_string(len) +
                      " exceeds max_positions " + std::to_string(limit));
  }
}

Tensor project_cls(const Tensor& hidden, const Tensor& score_w, const Tensor& score_b) {
  MacScope scope(MacKind::scoring_head);
  const std::size_t n = score_w.size();
  Tensor s = matmul(slice0(hidden, 0), reshape(score_w, {n, 1}));
  return add(reshape(s, {1}), score_b);
}

}  // namespace

ModelParams zero_model(const HyperParams& hp) {
  hp.validate_model();
  ModelParams p;
  p.hp = hp;
  p.doc_embed = zero_embeddings(hp);
  p.doc_layers.assign(hp.M, zero_encoder(hp));
  p.qry_embed = zero_embeddings(hp);
  p.qry_layers.assign(hp.N, zero_encoder(hp));
  p.ib_layers.assign(hp.K, zero_ib(hp));
  p.score_w = Tensor({hp.n});
  p.score_b = Tensor({1});
  return p;
}

RankerParams zero_ranker(const HyperParams& hp) {
  hp.validate_ranker();
  RankerParams p;
  p.hp = hp;
  p.embed = zero_embeddings(hp);
  p.layers.assign(hp.source_layers, zero_encoder(hp));
  p.score_w = Tensor({hp.n});
  p.score_b = Tensor({1});
  return p;
}

RankerParams synthesize_donor(const HyperParams& hp, std::uint64_t seed, double stddev) {
  RankerParams p = zero_ranker(hp);
  std::mt19937_64 rng(seed);
  fill_normal(p.embed.word, rng, stddev);
  fill_normal(p.embed.position, rng, stddev);
  for (auto& layer : p.layers) {
    init_attention(layer.attn, rng, stddev);
    fill_normal(layer.ffn.w_in, rng, stddev);
    fill_normal(layer.ffn.w_out, rng, stddev);
  }
  fill_normal(p.score_w, rng, stddev);
  return p;
}

ModelParams synthesize_model(const HyperParams& hp, std::uint64_t seed, double stddev) {
  ModelParams p = zero_model(hp);
  std::mt19937_64 rng(seed);
  auto init_encoder = [&](EncoderLayerParams& layer) {
    init_attention(layer.attn, rng, stddev);
    fill_normal(layer.ffn.w_in, rng, stddev);
    fill_normal(layer.ffn.w_out, rng, stddev);
  };
  fill_normal(p.doc_embed.word, rng, stddev);
  fill_normal(p.doc_embed.position, rng, stddev);
  for (auto& layer : p.doc_layers) init_encoder(layer);
  fill_normal(p.qry_embed.word, rng, stddev);
  fill_normal(p.qry_embed.position, rng, stddev);
  for (auto& layer : p.qry_layers) init_encoder(layer);
  for (auto& ib : p.ib_layers) {
    init_attention(ib.cross_attn, rng, stddev);
    init_attention(ib.self_attn, rng, stddev);
    fill_normal(ib.ffn.w_in, rng, stddev);
    fill_normal(ib.ffn.w_out, rng, stddev);
  }
  fill_normal(p.score_w, rng, stddev);
  return p;
}

Tensor encode_document(std::span<const TokenId> tokens, const ModelParams& params,
                       const Tensor* mask, std::vector<Tensor>* attention) {
  check_length(tokens.size(), params.hp.max_positions, "document");
  Tensor hidden = embed(tokens, params.doc_embed, params.hp);
  for (const auto& layer : params.doc_layers) {
    hidden = encoder_layer(hidden, layer, mask, attention);
  }
  return hidden;
}

Tensor encode_query(std::span<const TokenId> tokens, const ModelParams& params,
                    const Tensor* mask, std::vector<Tensor>* attention) {
  if (tokens.empty()) throw LengthError("query has no tokens");
  check_length(tokens.size() + 1, params.hp.max_positions, "query with [CLS]");
  std::vector<TokenId> with_cls;
  with_cls.reserve(tokens.size() + 1);
  with_cls.push_back(kClsId);
  with_cls.insert(with_cls.end(), tokens.begin(), tokens.end());

  Tensor full_mask;
  const Tensor* row_mask = nullptr;
  if (mask != nullptr) {
    if (mask->size() != tokens.size()) {
      throw ShapeError("query mask " + format_dims(mask->dims()) + " for " +
                       std::to_string(tokens.size()) + " tokens");
    }
    full_mask = Tensor({with_cls.size()}, 1.0);
    for (std::size_t i = 0; i < tokens.size(); ++i) full_mask[i + 1] = (*mask)[i];
    row_mask = &full_mask;
  }
  Tensor hidden = embed(with_cls, params.qry_embed, params.hp);
  for (const auto& layer : params.qry_layers) {
    hidden = encoder_layer(hidden, layer, row_mask, attention);
  }
  return hidden;
}

std::vector<ProjectedKV> project_document(const Tensor& doc, const ModelParams& params) {
  std::vector<ProjectedKV> out;
  out.reserve(params.ib_layers.size());
  for (const auto& ib : params.ib_layers) out.push_back(project_kv(doc, ib.cross_attn));
  return out;
}

Tensor score(const Tensor& query, const Tensor& doc, const ModelParams& params,
             const Tensor* d_mask, const Tensor* q_mask,
             std::vector<InteractionAttention>* attention) {
  Tensor hidden = query;
  for (const auto& ib : params.ib_layers) {
    InteractionAttention weights;
    hidden = interaction_block(hidden, doc, ib, d_mask, q_mask,
                               attention != nullptr ? &weights : nullptr);
    if (attention != nullptr) attention->push_back(std::move(weights));
  }
  return project_cls(hidden, params.score_w, params.score_b);
}

Tensor score(const Tensor& query, std::span<const ProjectedKV> doc_kv, const ModelParams& params,
             const Tensor* d_mask, const Tensor* q_mask,
             std::vector<InteractionAttention>* attention) {
  if (doc_kv.size() != params.ib_layers.size()) {
    throw ShapeError("got projections for " + std::to_string(doc_kv.size()) +
                     " blocks, model has " + std::to_string(params.ib_layers.size()));
  }
  Tensor hidden = query;
  for (std::size_t i = 0; i < params.ib_layers.size(); ++i) {
    InteractionAttention weights;
    hidden = interaction_block(hidden, doc_kv[i], params.ib_layers[i], d_mask, q_mask,
                               attention != nullptr ? &weights : nullptr);
    if (attention != nullptr) attention->push_back(std::move(weights));
  }
  return project_cls(hidden, params.score_w, params.score_b);
}

Tensor score_pair(std::span<const TokenId> query, std::span<const TokenId> doc,
                  const ModelParams& params) {
  return score(encode_query(query, params), encode_document(doc, params), params);
}

Tensor monolithic_score(std::span<const TokenId> query, std::span<const TokenId> doc,
                        const RankerParams& params, const Tensor* q_mask, const Tensor* d_mask) {
  if (query.empty()) throw LengthError("query has no tokens");
  if (doc.empty()) throw LengthError("document has no tokens");
  const std::size_t total = query.size() + doc.size() + 2;
  check_length(total, params.hp.max_positions, "[CLS] query [SEP] document");

  std::vector<TokenId> seq;
  seq.reserve(total);
  seq.push_back(kClsId);
  seq.insert(seq.end(), query.begin(), query.end());
  seq.push_back(kSepId);
  seq.insert(seq.end(), doc.begin(), doc.end());

  Tensor full_mask;
  const Tensor* mask = nullptr;
  if (q_mask != nullptr || d_mask != nullptr) {
    if ((q_mask != nullptr && q_mask->size() != query.size()) ||
        (d_mask != nullptr && d_mask->size() != doc.size())) {
      throw ShapeError("monolithic_score: mask length does not match tokens");
    }
    full_mask = Tensor({total}, 1.0);
    for (std::size_t i = 0; q_mask != nullptr && i < query.size(); ++i) {
      full_mask[1 + i] = (*q_mask)[i];
    }
    for (std::size_t i = 0; d_mask != nullptr && i < doc.size(); ++i) {
      full_mask[2 + query.size() + i] = (*d_mask)[i];
    }
    mask = &full_mask;
  }

  Tensor hidden = embed(seq, params.embed, params.hp);
  for (const auto& layer : params.layers) hidden = encoder_layer(hidden, layer, mask);
  return project_cls(hidden, params.score_w, params.score_b);
}

namespace {

void check_tensor_dims(const Tensor& t, const Dims& expected, const std::string& name) {
  if (t.dims() != expected) {
    throw ConfigError("donor tensor " + name + " has dims " + format_dims(t.dims()) +
                      ", expected " + format_dims(expected));
  }
}

void check_donor(const RankerParams& donor) {
  donor.hp.validate_ranker();
  if (donor.layers.size() != donor.hp.source_layers) {
    throw ConfigError("donor has " + std::to_string(donor.layers.size()) +
                      " layers, header says " + std::to_string(donor.hp.source_layers));
  }
  const RankerParams shape = zero_ranker(donor.hp);
  std::vector<Dims> expected;
  visit_params(shape, [&](const std::string&, const Tensor& t, ParamGroup) {
    expected.push_back(t.dims());
  });
  std::size_t i = 0;
  visit_params(donor, [&](const std::string& name, const Tensor& t, ParamGroup) {
    check_tensor_dims(t, expected[i++], name);
  });
  for (const auto& layer : donor.layers) {
    if (layer.attn.heads != donor.hp.heads) throw ConfigError("donor head count mismatch");
  }
}

}  // namespace

ModelParams split_initialize(const RankerParams& donor, std::uint32_t K, CrossInit cross_init,
                             std::uint64_t seed) {
  check_donor(donor);
  const std::uint32_t layers = donor.hp.source_layers;
  if (K < 1 || K >= layers) {
    throw ConfigError("K = " + std::to_string(K) + " must lie in [1, " +
                      std::to_string(layers - 1) + "] for a " + std::to_string(layers) +
                      "-layer donor");
  }
  HyperParams hp = donor.hp;
  hp.M = layers;
  hp.N = layers - K;
  hp.K = K;

  ModelParams p;
  p.hp = hp;
  p.doc_embed = donor.embed;
  p.doc_layers = donor.layers;
  p.qry_embed = donor.embed;
  p.qry_layers.assign(donor.layers.begin(), donor.layers.begin() + hp.N);

  std::mt19937_64 rng(seed);
  p.ib_layers.reserve(K);
  for (std::uint32_t i = 0; i < K; ++i) {
    const EncoderLayerParams& src = donor.layers[hp.N + i];
    InteractionBlockParams ib;
    ib.self_attn = src.attn;
    ib.ln_self = src.ln_attn;
    ib.ffn = src.ffn;
    ib.ln_ffn = src.ln_ffn;
    if (cross_init == CrossInit::copy) {
      ib.cross_attn = src.attn;
      ib.ln_cross = src.ln_attn;
    } else {
      ib.cross_attn = zero_attention(hp.n, hp.heads);
      init_attention(ib.cross_attn, rng, kInitStd);
      ib.ln_cross = unit_layer_norm(hp.n);
    }
    p.ib_layers.push_back(std::move(ib));
  }
  p.score_w = Tensor({hp.n});
  fill_normal(p.score_w, rng, kInitStd);
  p.score_b = Tensor({1});
  return p;
}

}  // namespace mores
