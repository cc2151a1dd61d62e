// Copyright 2026 The mores-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mores/model.hpp"
#include "mores/reuse.hpp"

namespace mores {

enum class OptimizerKind : std::uint8_t { sgd, adam };

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// adapt-interaction trains only the interaction blocks and scoring head;
/// adapt-representation trains only the document and query modules.
enum class FreezeMode : std::uint8_t { none, adapt_interaction, adapt_representation };

const char* freeze_mode_name(FreezeMode mode);
/// Accepts "none", "adapt-interaction", "adapt-representation".
FreezeMode parse_freeze_mode(std::string_view text);
OptimizerKind parse_optimizer(std::string_view text);

bool is_frozen(FreezeMode mode, ParamGroup group);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 8;
  std::size_t steps = 200;
  OptimizerKind optimizer = OptimizerKind::adam;
  AdamConfig adam;
  FreezeMode freeze = FreezeMode::none;
  std::uint64_t seed = 1;

  /// Throws ConfigError unless learning_rate ≥ 0, batch_size ≥ 1, steps ≥ 1.
  void validate() const;
};

struct ToyExample {
  std::vector<TokenId> query;
  std::vector<TokenId> doc;
  double label = 0.0;
};

/// Sigmoid cross-entropy in log-sum-exp form; differentiable.
Tensor pointwise_loss(const Tensor& score, double label);

/// Forward pass and loss for one example, no tape.
double example_loss(const ModelParams& model, const ToyExample& example);

/// Mean batch loss of each optimizer step, in order.
struct TrainResult {
  std::vector<double> loss_trace;
};

/// Trains `model` in place. Each step draws the next batch_size examples from
/// a per-epoch shuffle seeded by cfg.seed; frozen tensors are never placed on
/// the tape and stay bitwise unchanged. Throws ConfigError on empty data.
TrainResult train(ModelParams& model, std::span<const ToyExample> data, const TrainConfig& cfg);

/// CSV with header "step,loss", steps numbered from 1.
void write_loss_trace(const std::filesystem::path& path, std::span<const double> trace);

/// Mean of trace[first, first + count).
double window_mean(std::span<const double> trace, std::size_t first, std::size_t count);

struct GroupCheck {
  ParamGroup group = ParamGroup::doc_representation;
  bool frozen = false;
  std::size_t elements = 0;
  /// max |tape − fd| / max(1, |fd|); for frozen groups, max |tape gradient|.
  double max_error = 0.0;
  std::string worst_tensor;
};

struct GradCheckReport {
  std::vector<GroupCheck> groups;  // one per ParamGroup, in enum order
  double tolerance = 0.0;
  bool passed = false;
};

/// Central differences with step h over every element of every parameter
/// tensor, against tape gradients of pointwise_loss on `example`. Groups frozen
/// under `freeze` are left off the tape; they pass when their tape gradients
/// are exactly zero.
GradCheckReport grad_check(const ModelParams& model, const ToyExample& example, double h,
                           double tol, FreezeMode freeze = FreezeMode::none);

/// Balanced pointwise data: even-indexed examples are relevant. Query tokens
/// are distinct non-reserved ids; a relevant document contains at least
/// ⌈q_len/2⌉ of them, an irrelevant one none. Throws ConfigError when
/// vocab_size − 4 < 2·q_len or d_len < ⌈q_len/2⌉.
std::vector<ToyExample> gen_toy_data(std::uint32_t vocab_size, std::size_t q_len,
                                     std::size_t d_len, std::size_t count, std::uint64_t seed);

/// Held-out ranking task: each query has one relevant candidate (grade 1) and
/// n_candidates − 1 irrelevant ones, built by the same rules as gen_toy_data.
struct ToyQuery {
  std::string qid;
  std::vector<TokenId> query;
  std::vector<Document> candidates;
  std::map<std::string, int> judged;
};

std::vector<ToyQuery> gen_toy_ranking(std::uint32_t vocab_size, std::size_t q_len,
                                      std::size_t d_len, std::size_t n_queries,
                                      std::size_t n_candidates, std::uint64_t seed);

/// MRR@k of the model's on-the-fly rankings over the toy queries.
double toy_mrr(const ModelParams& model, std::span<const ToyQuery> queries, std::size_t k = 10);

}  // namespace mores
