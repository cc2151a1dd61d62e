// Copyright 2026 The mores-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mores/cost.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>

#include "mores/errors.hpp"

namespace mores {

namespace {

std::uint64_t attention_units(const CostQuery& c) {
  const std::uint64_t n = c.n, q = c.q, d = c.d;
  return n * (q * d + q * q);
}

void add_term(CostReport& r, std::string name, std::uint64_t value) {
  r.analytic_total += value;
  r.analytic_terms.push_back(CostTerm{std::move(name), value});
}

void add_kind(MacSnapshot& s, MacKind kind, std::uint64_t value) {
  s.by_kind[static_cast<std::size_t>(kind)] += value;
}

// Adds `times` evaluations of attend(x: rows, y: keys); K/V projections of y
// are skipped when `project_keys` is false.
void attend_macs(MacSnapshot& s, std::uint64_t rows, std::uint64_t keys, std::uint64_t n,
                 bool project_keys, std::uint64_t times) {
  const std::uint64_t kv = project_keys ? 2 * keys * n * n : 0;
  add_kind(s, MacKind::projection, times * (2 * rows * n * n + kv));
  add_kind(s, MacKind::attention_score, times * rows * n * keys);
  add_kind(s, MacKind::attention_context, times * rows * keys * n);
}

void ffn_macs(MacSnapshot& s, std::uint64_t rows, std::uint64_t n, std::uint64_t f,
              std::uint64_t times) {
  add_kind(s, MacKind::feed_forward, times * 2 * rows * n * f);
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 == 1 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

}  // namespace

const char* cost_strategy_name(CostStrategy strategy) {
  switch (strategy) {
    case CostStrategy::monolithic: return "monolithic";
    case CostStrategy::s1: return "s1";
    case CostStrategy::s2: return "s2";
  }
  return "unknown";
}

CostStrategy parse_cost_strategy(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "monolithic") return CostStrategy::monolithic;
  if (lower == "s1") return CostStrategy::s1;
  if (lower == "s2") return CostStrategy::s2;
  throw ConfigError("unknown strategy '" + std::string(text) +
                    "' (expected monolithic, s1 or s2)");
}

CostReport analytic_cost(const CostQuery& cq) {
  if (cq.q == 0 || cq.d == 0 || cq.n == 0 || cq.n_doc == 0) {
    throw ConfigError("cost query sizes must be positive");
  }
  CostReport r;
  r.query = cq;
  const std::uint64_t n = cq.n, q = cq.q, d = cq.d, docs = cq.n_doc;
  const LayerCounts& l = cq.layers;
  if (cq.strategy == CostStrategy::monolithic) {
    const std::uint64_t len = d + q;
    add_term(r, "monolithic.attention", n * len * len * l.source_layers * docs);
    add_term(r, "monolithic.transform", n * n * len * l.source_layers * docs);
  } else {
    add_term(r, "query_rep.attention", n * q * q * l.N);
    add_term(r, "query_rep.transform", n * n * q * l.N);
    add_term(r, "interaction.attention", attention_units(cq) * l.K * docs);
    const std::uint64_t transformed = cq.strategy == CostStrategy::s1 ? q + d : q;
    add_term(r, "interaction.transform", n * n * transformed * l.K * docs);
  }
  r.bytes_per_doc = stored_bytes_per_doc(cq);
  return r;
}

MacSnapshot expected_online_macs(const CostQuery& cq, std::uint64_t f) {
  MacSnapshot s;
  const std::uint64_t n = cq.n, d = cq.d, docs = cq.n_doc;
  const LayerCounts& l = cq.layers;
  if (cq.strategy == CostStrategy::monolithic) {
    const std::uint64_t len = cq.q + d + 2;
    attend_macs(s, len, len, n, true, l.source_layers * docs);
    ffn_macs(s, len, n, f, l.source_layers * docs);
  } else {
    const std::uint64_t a = cq.q + 1;
    attend_macs(s, a, a, n, true, l.N);
    ffn_macs(s, a, n, f, l.N);
    attend_macs(s, a, d, n, cq.strategy == CostStrategy::s1, l.K * docs);
    attend_macs(s, a, a, n, true, l.K * docs);
    ffn_macs(s, a, n, f, l.K * docs);
  }
  add_kind(s, MacKind::scoring_head, n * docs);
  return s;
}

std::uint64_t stored_bytes_per_doc(const CostQuery& cq) {
  switch (cq.strategy) {
    case CostStrategy::monolithic: return 0;
    case CostStrategy::s1: return cq.d * cq.n * 8;
    case CostStrategy::s2: return 2 * std::uint64_t{cq.layers.K} * cq.d * cq.n * 8;
  }
  return 0;
}

RankerParams ranker_from_document_module(const ModelParams& model) {
  HyperParams hp = model.hp;
  hp.source_layers = hp.M;
  hp.M = hp.N = hp.K = 0;
  RankerParams r;
  r.hp = hp;
  r.embed = model.doc_embed;
  r.layers = model.doc_layers;
  r.score_w = model.score_w;
  r.score_b = model.score_b;
  return r;
}

BenchCorpus synthetic_corpus(std::size_t q, std::size_t d, std::size_t n_doc,
                             std::uint32_t vocab_size, std::uint64_t seed) {
  if (vocab_size <= kReservedTokens) throw ConfigError("vocab too small for a synthetic corpus");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<TokenId> token(kReservedTokens, vocab_size - 1);
  BenchCorpus c;
  c.query.resize(q);
  for (auto& t : c.query) t = token(rng);
  const int width = static_cast<int>(std::to_string(n_doc).size());
  for (std::size_t i = 0; i < n_doc; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "D%0*zu", width, i);
    Document doc{id, std::vector<TokenId>(d)};
    for (auto& t : doc.tokens) t = token(rng);
    c.ids.push_back(doc.id);
    c.docs.push_back(std::move(doc));
  }
  return c;
}

CostReport measure(const CostQuery& cq, const ModelParams& model, const RankerParams* ranker,
                   const RecordSource* index, const BenchCorpus& corpus, unsigned reps) {
  if (reps == 0) throw ConfigError("measure needs at least one repetition");
  if (corpus.docs.empty()) throw ConfigError("measure needs at least one candidate");
  CostReport report = analytic_cost(cq);

  std::function<void(std::size_t)> run;
  std::unique_ptr<Reranker> reranker;
  if (cq.strategy == CostStrategy::monolithic) {
    if (ranker == nullptr) throw ConfigError("monolithic measurement needs a ranker");
    run = [&](std::size_t count) {
      for (std::size_t i = 0; i < count; ++i) {
        (void)monolithic_score(corpus.query, corpus.docs[i].tokens, *ranker);
      }
    };
  } else {
    if (index == nullptr) throw ConfigError("s1/s2 measurement needs an index");
    const auto path = cq.strategy == CostStrategy::s1 ? ReuseStrategy::s1 : ReuseStrategy::s2;
    if (index->header().strategy != path) {
      throw StrategyError(std::string("index holds ") +
                          strategy_name(index->header().strategy) + " records, measuring " +
                          cost_strategy_name(cq.strategy));
    }
    reranker = std::make_unique<Reranker>(model, *index);
    run = [&, path](std::size_t count) {
      (void)reranker->rank(corpus.query,
                           std::span<const std::string>(corpus.ids.data(), count), path);
    };
  }

  run(1);
  for (unsigned rep = 0; rep < reps; ++rep) {
    const MacSnapshot before = MacCounter::snapshot();
    const auto start = std::chrono::steady_clock::now();
    run(corpus.docs.size());
    const auto stop = std::chrono::steady_clock::now();
    report.measured_by_kind = MacCounter::snapshot() - before;
    report.rep_seconds.push_back(std::chrono::duration<double>(stop - start).count());
  }
  report.measured_macs = report.measured_by_kind.total();
  report.wall_time_seconds = median(report.rep_seconds);
  return report;
}

// ---------------------------------------------------------------------------

Bench::Bench(const ModelParams& model, const RankerParams& ranker, unsigned reps,
             std::uint64_t seed)
    : model_(model), ranker_(ranker), reps_(reps), seed_(seed) {}

CostQuery Bench::query_for(std::size_t q, std::size_t d, std::size_t n_doc,
                           CostStrategy strategy) const {
  CostQuery cq;
  cq.q = q;
  cq.d = d;
  cq.n = model_.hp.n;
  cq.layers = LayerCounts{static_cast<std::uint32_t>(ranker_.layers.size()), model_.hp.M,
                          model_.hp.N, model_.hp.K};
  cq.n_doc = n_doc;
  cq.strategy = strategy;
  return cq;
}

Bench::Workload& Bench::workload(const CostQuery& cq) {
  const Key key{cq.q, cq.d, cq.n_doc};
  auto it = workloads_.find(key);
  if (it != workloads_.end()) return it->second;
  Workload w;
  w.corpus = synthetic_corpus(cq.q, cq.d, cq.n_doc, model_.hp.vocab_size, seed_ + cq.d);
  return workloads_.emplace(key, std::move(w)).first->second;
}

const CostReport& Bench::baseline(const CostQuery& cq) {
  const Key key{cq.q, cq.d, cq.n_doc};
  auto it = baselines_.find(key);
  if (it != baselines_.end()) return it->second;
  CostQuery base = cq;
  base.strategy = CostStrategy::monolithic;
  CostReport r = measure(base, model_, &ranker_, nullptr, workload(cq).corpus, reps_);
  r.speedup_vs_baseline = 1.0;
  r.analytic_speedup = 1.0;
  return baselines_.emplace(key, std::move(r)).first->second;
}

CostReport Bench::run(const CostQuery& cq) {
  const CostReport& base = baseline(cq);
  if (cq.strategy == CostStrategy::monolithic) return base;

  Workload& w = workload(cq);
  if (!w.s1) {
    // Both indexes share one pass of the document module.
    w.s1 = std::make_unique<ReuseIndex>(index_header_for(model_, ReuseStrategy::s1));
    w.s2 = std::make_unique<ReuseIndex>(index_header_for(model_, ReuseStrategy::s2));
    for (const auto& doc : w.corpus.docs) {
      DocRecord s1 = make_record(doc, model_, ReuseStrategy::s1);
      DocRecord s2{doc.id, s1.length, Tensor(), project_document(s1.representation, model_)};
      w.s1->insert(std::move(s1));
      w.s2->insert(std::move(s2));
    }
  }
  const RecordSource* index = cq.strategy == CostStrategy::s1 ? w.s1.get() : w.s2.get();
  CostReport r = measure(cq, model_, &ranker_, index, w.corpus, reps_);
  r.speedup_vs_baseline = base.wall_time_seconds / r.wall_time_seconds;
  r.analytic_speedup =
      static_cast<double>(base.analytic_total) / static_cast<double>(r.analytic_total);
  return r;
}

std::vector<CostReport> Bench::table(std::span<const CostQuery> configs) {
  std::vector<CostReport> rows;
  rows.reserve(configs.size());
  for (const auto& cq : configs) rows.push_back(run(cq));
  return rows;
}

std::string format_speedup_csv(std::span<const CostReport> rows) {
  std::string out =
      "d,strategy,median_seconds,measured_macs,analytic_units,analytic_speedup,"
      "measured_speedup,bytes_per_doc\n";
  char line[256];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%llu,%s,%.9g,%llu,%llu,%.9g,%.9g,%llu\n",
                  static_cast<unsigned long long>(r.query.d), cost_strategy_name(r.query.strategy),
                  r.wall_time_seconds, static_cast<unsigned long long>(r.measured_macs),
                  static_cast<unsigned long long>(r.analytic_total), r.analytic_speedup,
                  r.speedup_vs_baseline, static_cast<unsigned long long>(r.bytes_per_doc));
    out += line;
  }
  return out;
}

std::string format_speedup_text(std::span<const CostReport> rows) {
  char line[256];
  std::snprintf(line, sizeof line, "%6s  %-10s  %12s  %16s  %16s  %10s  %10s  %12s\n", "d",
                "strategy", "median_s", "measured_macs", "analytic_units", "analytic_x",
                "measured_x", "bytes/doc");
  std::string out = line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%6llu  %-10s  %12.6f  %16llu  %16llu  %10.2f  %10.2f  %12llu\n",
                  static_cast<unsigned long long>(r.query.d), cost_strategy_name(r.query.strategy),
                  r.wall_time_seconds, static_cast<unsigned long long>(r.measured_macs),
                  static_cast<unsigned long long>(r.analytic_total), r.analytic_speedup,
                  r.speedup_vs_baseline, static_cast<unsigned long long>(r.bytes_per_doc));
    out += line;
  }
  return out;
}

}  // namespace mores
