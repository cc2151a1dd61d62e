// Copyright 2026 The mores-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mores/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <unordered_set>

#include "mores/errors.hpp"
#include "mores/metrics.hpp"
#include "mores/ops.hpp"

namespace mores {

namespace {

struct Slot {
  std::string name;
  Tensor* tensor;
  std::vector<double> m;
  std::vector<double> v;
};

std::vector<Slot> trainable(ModelParams& model, FreezeMode freeze) {
  std::vector<Slot> slots;
  visit_params(model, [&](const std::string& name, Tensor& t, ParamGroup g) {
    if (!is_frozen(freeze, g)) slots.push_back(Slot{name, &t, {}, {}});
  });
  return slots;
}

void clear_handles(ModelParams& model) {
  visit_params(model, [](const std::string&, Tensor& t, ParamGroup) { t.set_grad_handle(std::nullopt); });
}

Tensor batch_loss(const ModelParams& model, std::span<const ToyExample* const> batch) {
  Tensor total;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Tensor loss = pointwise_loss(score_pair(batch[i]->query, batch[i]->doc, model), batch[i]->label);
    total = i == 0 ? loss : add(total, loss);
  }
  return scale(total, 1.0 / static_cast<double>(batch.size()));
}

std::size_t half_up(std::size_t q) { return (q + 1) / 2; }

// Fraction of the remaining positions in a relevant document that repeat one
// of its shared query tokens.
constexpr double kEchoRate = 0.5;

// Token sampling shared by the pointwise and ranking generators.
class ToySampler {
 public:
  ToySampler(std::uint32_t vocab_size, std::size_t q_len, std::size_t d_len, std::uint64_t seed)
      : q_len_(q_len), d_len_(d_len), rng_(seed) {
    if (q_len == 0 || d_len == 0) throw ConfigError("toy lengths must be positive");
    if (vocab_size < kReservedTokens || vocab_size - kReservedTokens < 2 * q_len) {
      throw ConfigError("vocab of " + std::to_string(vocab_size) + " is too small for " +
                        std::to_string(q_len) + "-token queries with disjoint negatives");
    }
    if (d_len < half_up(q_len)) {
      throw ConfigError("documents of " + std::to_string(d_len) + " tokens cannot hold half of a " +
                        std::to_string(q_len) + "-token query");
    }
    pool_.resize(vocab_size - kReservedTokens);
    std::iota(pool_.begin(), pool_.end(), kReservedTokens);
  }

  std::vector<TokenId> query() {
    for (std::size_t i = 0; i < q_len_; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool_.size() - 1);
      std::swap(pool_[i], pool_[pick(rng_)]);
    }
    return {pool_.begin(), pool_.begin() + static_cast<std::ptrdiff_t>(q_len_)};
  }

  std::vector<TokenId> document(const std::vector<TokenId>& query, bool relevant) {
    const std::unordered_set<TokenId> in_query(query.begin(), query.end());
    std::uniform_int_distribution<std::size_t> any(0, pool_.size() - 1);
    std::vector<TokenId> doc(d_len_);
    for (auto& t : doc) {
      do t = pool_[any(rng_)];
      while (in_query.count(t) != 0);
    }
    if (relevant) {
      const std::size_t most = std::min(q_len_, d_len_);
      const std::size_t shared =
          std::uniform_int_distribution<std::size_t>(half_up(q_len_), most)(rng_);
      std::vector<TokenId> picked = query;
      std::shuffle(picked.begin(), picked.end(), rng_);
      std::vector<std::size_t> positions(d_len_);
      std::iota(positions.begin(), positions.end(), std::size_t{0});
      std::shuffle(positions.begin(), positions.end(), rng_);
      for (std::size_t i = 0; i < shared; ++i) doc[positions[i]] = picked[i];
      std::bernoulli_distribution echo(kEchoRate);
      std::uniform_int_distribution<std::size_t> from_shared(0, shared - 1);
      for (std::size_t i = shared; i < d_len_; ++i) {
        if (echo(rng_)) doc[positions[i]] = picked[from_shared(rng_)];
      }
    }
    return doc;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::size_t q_len_;
  std::size_t d_len_;
  std::mt19937_64 rng_;
  std::vector<TokenId> pool_;
};

}  // namespace

const char* freeze_mode_name(FreezeMode mode) {
  switch (mode) {
    case FreezeMode::none: return "none";
    case FreezeMode::adapt_interaction: return "adapt-interaction";
    case FreezeMode::adapt_representation: return "adapt-representation";
  }
  return "unknown";
}

FreezeMode parse_freeze_mode(std::string_view text) {
  if (text == "none") return FreezeMode::none;
  if (text == "adapt-interaction") return FreezeMode::adapt_interaction;
  if (text == "adapt-representation") return FreezeMode::adapt_representation;
  throw ConfigError("unknown freeze mode '" + std::string(text) +
                    "' (expected none, adapt-interaction or adapt-representation)");
}

OptimizerKind parse_optimizer(std::string_view text) {
  if (text == "sgd") return OptimizerKind::sgd;
  if (text == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + std::string(text) + "' (expected sgd or adam)");
}

bool is_frozen(FreezeMode mode, ParamGroup group) {
  const bool representation =
      group == ParamGroup::doc_representation || group == ParamGroup::query_representation;
  switch (mode) {
    case FreezeMode::none: return false;
    case FreezeMode::adapt_interaction: return representation;
    case FreezeMode::adapt_representation: return !representation;
  }
  return false;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be a finite non-negative number");
  }
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  if (steps == 0) throw ConfigError("steps must be at least 1");
}

Tensor pointwise_loss(const Tensor& score, double label) { return bce_with_logits(score, label); }

double example_loss(const ModelParams& model, const ToyExample& example) {
  return pointwise_loss(score_pair(example.query, example.doc, model), example.label).item();
}

TrainResult train(ModelParams& model, std::span<const ToyExample> data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw ConfigError("training data is empty");
  std::vector<Slot> slots = trainable(model, cfg.freeze);
  for (auto& s : slots) {
    if (cfg.optimizer == OptimizerKind::adam) {
      s.m.assign(s.tensor->size(), 0.0);
      s.v.assign(s.tensor->size(), 0.0);
    }
  }

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();

  TrainResult result;
  result.loss_trace.reserve(cfg.steps);
  std::vector<const ToyExample*> batch;
  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    batch.clear();
    while (batch.size() < cfg.batch_size) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(&data[order[cursor++]]);
    }

    GradTape tape;
    for (auto& s : slots) tape.watch(*s.tensor);
    Tensor loss;
    {
      GradTape::Recording recording(tape);
      loss = batch_loss(model, batch);
    }
    const Gradients grads = tape.backward(loss);
    result.loss_trace.push_back(loss.item());

    const double lr = cfg.learning_rate;
    const auto& a = cfg.adam;
    const double c1 = 1.0 - std::pow(a.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(a.beta2, static_cast<double>(step));
    for (auto& s : slots) {
      const Tensor& g = grads.of(*s.tensor);
      std::span<double> w = s.tensor->values();
      if (cfg.optimizer == OptimizerKind::sgd) {
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
        continue;
      }
      for (std::size_t i = 0; i < w.size(); ++i) {
        s.m[i] = a.beta1 * s.m[i] + (1.0 - a.beta1) * g[i];
        s.v[i] = a.beta2 * s.v[i] + (1.0 - a.beta2) * g[i] * g[i];
        w[i] -= lr * (s.m[i] / c1) / (std::sqrt(s.v[i] / c2) + a.eps);
      }
    }
  }
  clear_handles(model);
  return result;
}

void write_loss_trace(const std::filesystem::path& path, std::span<const double> trace) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "step,loss\n";
  char value[40];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(value, sizeof value, "%.17g", trace[i]);
    out << (i + 1) << ',' << value << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

double window_mean(std::span<const double> trace, std::size_t first, std::size_t count) {
  if (count == 0 || first + count > trace.size()) {
    throw ConfigError("window [" + std::to_string(first) + ", " + std::to_string(first + count) +
                      ") outside a trace of " + std::to_string(trace.size()));
  }
  double sum = 0.0;
  for (std::size_t i = first; i < first + count; ++i) sum += trace[i];
  return sum / static_cast<double>(count);
}

GradCheckReport grad_check(const ModelParams& model, const ToyExample& example, double h,
                           double tol, FreezeMode freeze) {
  ModelParams work = model;
  clear_handles(work);

  GradTape tape;
  std::vector<std::pair<Tensor*, ParamGroup>> tensors;
  visit_params(work, [&](const std::string&, Tensor& t, ParamGroup g) {
    if (!is_frozen(freeze, g)) tape.watch(t);
    tensors.emplace_back(&t, g);
  });
  Tensor loss;
  {
    GradTape::Recording recording(tape);
    loss = pointwise_loss(score_pair(example.query, example.doc, work), example.label);
  }
  const Gradients grads = tape.backward(loss);

  GradCheckReport report;
  report.tolerance = tol;
  for (ParamGroup g : {ParamGroup::doc_representation, ParamGroup::query_representation,
                       ParamGroup::interaction, ParamGroup::scoring_head}) {
    report.groups.push_back(GroupCheck{g, is_frozen(freeze, g), 0, 0.0, ""});
  }

  // Gradient values are copied out so perturbing the parameters is harmless.
  std::vector<std::vector<double>> tape_grads;
  for (auto& [t, g] : tensors) {
    if (is_frozen(freeze, g)) {
      tape_grads.emplace_back(t->size(), 0.0);
    } else {
      auto values = grads.of(*t).values();
      tape_grads.emplace_back(values.begin(), values.end());
    }
  }
  clear_handles(work);

  std::size_t index = 0;
  visit_params(work, [&](const std::string& name, Tensor& t, ParamGroup g) {
    GroupCheck& check = report.groups[static_cast<std::size_t>(g)];
    const std::vector<double>& analytic = tape_grads[index++];
    check.elements += t.size();
    for (std::size_t i = 0; i < t.size(); ++i) {
      double error = 0.0;
      if (check.frozen) {
        error = std::abs(analytic[i]);
      } else {
        const double saved = t[i];
        t[i] = saved + h;
        const double up = example_loss(work, example);
        t[i] = saved - h;
        const double down = example_loss(work, example);
        t[i] = saved;
        const double fd = (up - down) / (2.0 * h);
        error = std::abs(analytic[i] - fd) / std::max(1.0, std::abs(fd));
      }
      if (error > check.max_error) {
        check.max_error = error;
        check.worst_tensor = name;
      }
    }
  });
  report.passed = std::all_of(report.groups.begin(), report.groups.end(), [&](const GroupCheck& c) {
    return c.frozen ? c.max_error == 0.0 : c.max_error < tol;
  });
  return report;
}

std::vector<ToyExample> gen_toy_data(std::uint32_t vocab_size, std::size_t q_len,
                                     std::size_t d_len, std::size_t count, std::uint64_t seed) {
  ToySampler sampler(vocab_size, q_len, d_len, seed);
  std::vector<ToyExample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const bool relevant = i % 2 == 0;
    ToyExample ex;
    ex.query = sampler.query();
    ex.doc = sampler.document(ex.query, relevant);
    ex.label = relevant ? 1.0 : 0.0;
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<ToyQuery> gen_toy_ranking(std::uint32_t vocab_size, std::size_t q_len,
                                      std::size_t d_len, std::size_t n_queries,
                                      std::size_t n_candidates, std::uint64_t seed) {
  if (n_candidates == 0) throw ConfigError("toy ranking needs at least one candidate");
  ToySampler sampler(vocab_size, q_len, d_len, seed);
  std::vector<ToyQuery> out;
  out.reserve(n_queries);
  for (std::size_t qi = 0; qi < n_queries; ++qi) {
    ToyQuery tq;
    tq.qid = "q" + std::to_string(qi);
    tq.query = sampler.query();
    const std::size_t relevant =
        std::uniform_int_distribution<std::size_t>(0, n_candidates - 1)(sampler.rng());
    for (std::size_t c = 0; c < n_candidates; ++c) {
      Document doc{tq.qid + "_d" + std::to_string(c), sampler.document(tq.query, c == relevant)};
      tq.judged[doc.id] = c == relevant ? 1 : 0;
      tq.candidates.push_back(std::move(doc));
    }
    out.push_back(std::move(tq));
  }
  return out;
}

double toy_mrr(const ModelParams& model, std::span<const ToyQuery> queries, std::size_t k) {
  Run run;
  Qrels qrels;
  for (const auto& tq : queries) {
    run[tq.qid] = rank_on_the_fly(tq.query, tq.candidates, model);
    qrels[tq.qid] = tq.judged;
  }
  return mrr_at_k(run, qrels, k);
}

}  // namespace mores
