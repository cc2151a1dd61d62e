// Copyright 2026 The mores-cpp Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Thresholds are fixed here.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdarg>
#include <cstring>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

#include "mores/checkpoint.hpp"
#include "mores/cost.hpp"
#include "mores/metrics.hpp"
#include "mores/ops.hpp"
#include "mores/reuse.hpp"
#include "mores/train.hpp"
#include "support.hpp"

using namespace mores;
using mores::test::random_tensor;
using mores::test::random_tokens;
using mores::test::TempDir;

namespace {

constexpr double kRoundTripRelTol = 1e-10;
constexpr double kGradTol = 1e-6;
constexpr double kGradStep = 1e-5;
constexpr double kMetricTol = 1e-12;
constexpr double kTestStatTol = 1e-9;
constexpr double kSoftmaxTol = 1e-12;
constexpr double kLossRatio = 0.5;
constexpr double kEquivalenceBudget = 60;
constexpr double kGradBudget = 120;
constexpr double kSpeedBudget = 600;
constexpr int kInvariantCases = 100;

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

HyperParams equivalence_hp() {
  HyperParams hp;
  hp.n = 32;
  hp.heads = 4;
  hp.f = 64;
  hp.vocab_size = 1000;
  hp.max_positions = 64;
  hp.M = 2;
  hp.N = 2;
  hp.K = 2;
  hp.source_layers = 4;
  return hp;
}

std::string run_text(const std::vector<std::pair<std::string, std::vector<ScoredDoc>>>& runs) {
  std::ostringstream out;
  for (const auto& [qid, ranking] : runs) write_run(out, qid, ranking, "MORES");
  return out.str();
}

// ---------------------------------------------------------------------------

Outcome strategy_equivalence() {
  const auto start = Clock::now();
  const ModelParams m = synthesize_model(equivalence_hp(), 101, 0.2);
  std::mt19937_64 rng(102);
  std::uniform_int_distribution<std::size_t> doc_len(8, 48), q_len(2, 8);
  std::vector<Document> corpus;
  for (int i = 0; i < 300; ++i) {
    corpus.push_back({fmt("doc%03d", i), random_tokens(doc_len(rng), 1000, rng)});
  }

  TempDir dir("ac1");
  const ReuseIndex s1 = build_index(corpus, m, ReuseStrategy::s1);
  const ReuseIndex s2 = build_index(corpus, m, ReuseStrategy::s2);
  save_index(s1, dir / "s1.idx");
  save_index(s2, dir / "s2.idx");
  const ReuseIndex s1_loaded = load_index(dir / "s1.idx");
  const IndexReader s2_reader(dir / "s2.idx");

  std::vector<std::pair<std::string, std::vector<ScoredDoc>>> fly, r1, r2, r1_disk, r2_disk;
  for (int q = 0; q < 20; ++q) {
    const auto query = random_tokens(q_len(rng), 1000, rng);
    std::vector<std::size_t> pick(corpus.size());
    std::iota(pick.begin(), pick.end(), 0);
    std::shuffle(pick.begin(), pick.end(), rng);
    std::vector<Document> docs;
    std::vector<std::string> ids;
    for (int c = 0; c < 50; ++c) {
      docs.push_back(corpus[pick[c]]);
      ids.push_back(corpus[pick[c]].id);
    }
    const std::string qid = fmt("q%02d", q);
    fly.emplace_back(qid, rank_on_the_fly(query, docs, m));
    r1.emplace_back(qid, Reranker(m, s1).rank(query, ids, ReuseStrategy::s1));
    r2.emplace_back(qid, Reranker(m, s2).rank(query, ids, ReuseStrategy::s2));
    r1_disk.emplace_back(qid, Reranker(m, s1_loaded).rank(query, ids, ReuseStrategy::s1));
    r2_disk.emplace_back(qid, Reranker(m, s2_reader).rank(query, ids, ReuseStrategy::s2));
  }
  const std::string t_fly = run_text(fly);
  const bool identical = t_fly == run_text(r1) && t_fly == run_text(r2);

  double worst = 0.0;
  for (const auto* disk : {&r1_disk, &r2_disk}) {
    for (std::size_t q = 0; q < fly.size(); ++q) {
      std::map<std::string, double> ref;
      for (const auto& s : fly[q].second) ref[s.doc_id] = s.score;
      for (const auto& s : (*disk)[q].second) {
        const double want = ref.at(s.doc_id);
        worst = std::max(worst, std::abs(s.score - want) / std::max(std::abs(want), 1e-300));
      }
    }
  }
  const double elapsed = seconds_since(start);
  Outcome o;
  o.pass = identical && worst <= kRoundTripRelTol && elapsed < kEquivalenceBudget;
  o.detail = fmt("20x50 run files identical=%s, round-trip max rel diff=%.3g (tol %.0e), %.1fs",
                 identical ? "yes" : "no", worst, kRoundTripRelTol, elapsed);
  return o;
}

Outcome gradient_verification() {
  const auto start = Clock::now();
  HyperParams hp = test::tiny_hp();
  // Weights at std 0.5 keep every nonlinearity away from its linear regime.
  const ModelParams m = synthesize_model(hp, 201, 0.5);
  const ToyExample ex{{5, 9, 14}, {7, 5, 20, 11, 9}, 1.0};
  const GradCheckReport r = grad_check(m, ex, kGradStep, kGradTol);
  const double elapsed = seconds_since(start);
  Outcome o;
  o.pass = r.passed && elapsed < kGradBudget;
  std::string groups;
  for (const auto& g : r.groups) {
    groups += fmt(" %s=%.2e", param_group_name(g.group), g.max_error);
    o.pass = o.pass && g.max_error < kGradTol;
  }
  o.detail = fmt("max rel error per group (tol %.0e, h=%.0e):%s, %.1fs", kGradTol, kGradStep,
                 groups.c_str(), elapsed);
  return o;
}

bool same_tensors(const AttentionParams& a, const AttentionParams& b) {
  return bitwise_equal(a.wq, b.wq) && bitwise_equal(a.wk, b.wk) && bitwise_equal(a.wv, b.wv) &&
         bitwise_equal(a.wo, b.wo) && bitwise_equal(a.bq, b.bq) && bitwise_equal(a.bk, b.bk) &&
         bitwise_equal(a.bv, b.bv) && bitwise_equal(a.bo, b.bo);
}

bool same_layer(const EncoderLayerParams& a, const EncoderLayerParams& b) {
  return same_tensors(a.attn, b.attn) && bitwise_equal(a.ffn.w_in, b.ffn.w_in) &&
         bitwise_equal(a.ffn.b_in, b.ffn.b_in) && bitwise_equal(a.ffn.w_out, b.ffn.w_out) &&
         bitwise_equal(a.ffn.b_out, b.ffn.b_out) && bitwise_equal(a.ln_attn.gain, b.ln_attn.gain) &&
         bitwise_equal(a.ln_attn.bias, b.ln_attn.bias) &&
         bitwise_equal(a.ln_ffn.gain, b.ln_ffn.gain) && bitwise_equal(a.ln_ffn.bias, b.ln_ffn.bias);
}

Outcome initialization_contract() {
  HyperParams hp;
  hp.n = 16;
  hp.heads = 2;
  hp.f = 32;
  hp.vocab_size = 100;
  hp.max_positions = 16;
  hp.source_layers = 12;
  const RankerParams donor = synthesize_donor(hp, 301);
  Outcome o;
  int failures = 0;
  for (std::uint32_t K = 1; K <= 4; ++K) {
    const ModelParams m = split_initialize(donor, K, CrossInit::copy, 302);
    bool a = m.qry_layers.size() == 12 - K;
    for (std::size_t i = 0; a && i < m.qry_layers.size(); ++i) a = same_layer(m.qry_layers[i], donor.layers[i]);
    a = a && bitwise_equal(m.qry_embed.word, donor.embed.word) &&
        bitwise_equal(m.qry_embed.position, donor.embed.position);
    bool b = m.ib_layers.size() == K;
    for (std::size_t i = 0; b && i < K; ++i) {
      const auto& src = donor.layers[12 - K + i].attn;
      b = same_tensors(m.ib_layers[i].self_attn, src) && same_tensors(m.ib_layers[i].cross_attn, src);
    }
    bool c = m.doc_layers.size() == 12 && bitwise_equal(m.doc_embed.word, donor.embed.word) &&
             bitwise_equal(m.doc_embed.position, donor.embed.position);
    for (std::size_t i = 0; c && i < 12; ++i) c = same_layer(m.doc_layers[i], donor.layers[i]);
    if (!(a && b && c)) ++failures;
    o.detail += fmt(" K=%u:%s%s%s", K, a ? "a" : "-", b ? "b" : "-", c ? "c" : "-");
  }
  o.pass = failures == 0;
  o.detail = "bitwise query/IB/doc copies from a 12-layer donor," + o.detail;
  return o;
}

// Closed forms, derived by hand from the matmul inventory.
std::uint64_t inventory_total(CostStrategy s, std::uint64_t q, std::uint64_t d, std::uint64_t n,
                              std::uint64_t f, const LayerCounts& l, std::uint64_t docs) {
  auto attend = [&](std::uint64_t r, std::uint64_t c, bool kv) {
    return 2 * r * n * n + (kv ? 2 * c * n * n : 0) + 2 * r * c * n;
  };
  auto ffn = [&](std::uint64_t r) { return 2 * r * n * f; };
  if (s == CostStrategy::monolithic) {
    const std::uint64_t L = q + d + 2;
    return docs * (l.source_layers * (attend(L, L, true) + ffn(L)) + n);
  }
  const std::uint64_t a = q + 1;
  return l.N * (attend(a, a, true) + ffn(a)) +
         docs * (l.K * (attend(a, d, s == CostStrategy::s1) + attend(a, a, true) + ffn(a)) + n);
}

Outcome complexity_identities() {
  constexpr std::uint64_t q = 16, n = 64, f = 128, docs = 2;
  Outcome o;
  int checks = 0, failures = 0;
  for (std::uint32_t K : {1u, 2u}) {
    HyperParams hp;
    hp.n = n;
    hp.heads = 2;
    hp.f = f;
    hp.vocab_size = 500;
    hp.max_positions = 160;
    hp.M = 2;
    hp.N = 2;
    hp.K = K;
    hp.source_layers = 2;
    const ModelParams m = synthesize_model(hp, 400 + K);
    const RankerParams ranker = ranker_from_document_module(m);
    const LayerCounts layers{2, 2, 2, K};
    for (std::uint64_t d : {32u, 128u}) {
      const BenchCorpus corpus = synthetic_corpus(q, d, docs, hp.vocab_size, 410);
      const ReuseIndex s1 = build_index(corpus.docs, m, ReuseStrategy::s1);
      const ReuseIndex s2 = build_index(corpus.docs, m, ReuseStrategy::s2);
      std::map<CostStrategy, std::uint64_t> measured;
      for (auto s : {CostStrategy::monolithic, CostStrategy::s1, CostStrategy::s2}) {
        CostQuery cq;
        cq.q = q;
        cq.d = d;
        cq.n = n;
        cq.layers = layers;
        cq.n_doc = docs;
        cq.strategy = s;
        const RecordSource* index = s == CostStrategy::s1 ? &s1 : s == CostStrategy::s2 ? &s2 : nullptr;
        const CostReport rep = measure(cq, m, &ranker, index, corpus, 1);
        measured[s] = rep.measured_macs;
        const MacSnapshot want = expected_online_macs(cq, f);
        ++checks;
        if (rep.measured_macs != inventory_total(s, q, d, n, f, layers, docs) ||
            rep.measured_by_kind.by_kind != want.by_kind) {
          ++failures;
        }
      }
      ++checks;
      const std::uint64_t per_doc = (measured[CostStrategy::s1] - measured[CostStrategy::s2]) / docs;
      if (per_doc != 2 * K * d * n * n ||
          (measured[CostStrategy::s1] - measured[CostStrategy::s2]) % docs != 0) {
        ++failures;
      }
      if (K == 2 && d == 128) {
        o.detail += fmt(" [K=2,d=128: S1-S2 per doc=%llu, 2Kdn^2=%llu]",
                        static_cast<unsigned long long>(per_doc),
                        static_cast<unsigned long long>(2 * K * d * n * n));
      }
    }
  }
  o.pass = failures == 0;
  o.detail = fmt("%d/%d exact integer identities hold", checks - failures, checks) + o.detail;
  return o;
}

Outcome speed_ordering() {
  const auto start = Clock::now();
  HyperParams hp;
  hp.n = 64;
  hp.heads = 2;
  hp.f = 256;
  hp.vocab_size = 1000;
  hp.max_positions = 544;
  hp.source_layers = 12;
  const RankerParams donor = synthesize_donor(hp, 501);
  const ModelParams m = split_initialize(donor, 2, CrossInit::copy, 502);
  const RankerParams baseline = ranker_from_document_module(m);
  Bench bench(m, baseline, 3, 503);
  std::vector<CostQuery> configs;
  for (std::size_t d : {128u, 512u}) {
    for (auto s : {CostStrategy::monolithic, CostStrategy::s1, CostStrategy::s2}) {
      configs.push_back(bench.query_for(16, d, 200, s));
    }
  }
  const auto rows = bench.table(configs);
  std::map<std::pair<std::uint64_t, CostStrategy>, const CostReport*> at;
  for (const auto& r : rows) at[{r.query.d, r.query.strategy}] = &r;
  bool ordered = true;
  for (std::uint64_t d : {128u, 512u}) {
    const double mono = at[{d, CostStrategy::monolithic}]->wall_time_seconds;
    const double s1 = at[{d, CostStrategy::s1}]->wall_time_seconds;
    const double s2 = at[{d, CostStrategy::s2}]->wall_time_seconds;
    ordered = ordered && s2 <= s1 && s1 < mono;
  }
  const double x128 = at[{128, CostStrategy::s1}]->speedup_vs_baseline;
  const double x512 = at[{512, CostStrategy::s1}]->speedup_vs_baseline;
  const double elapsed = seconds_since(start);
  Outcome o;
  o.pass = ordered && x512 > x128 && elapsed < kSpeedBudget;
  o.detail = fmt(
      "medians d=128 mono/s1/s2=%.3f/%.4f/%.4fs, d=512 mono/s1/s2=%.3f/%.4f/%.4fs, "
      "S1 speedup %.1fx -> %.1fx, %.0fs",
      at[{128, CostStrategy::monolithic}]->wall_time_seconds,
      at[{128, CostStrategy::s1}]->wall_time_seconds, at[{128, CostStrategy::s2}]->wall_time_seconds,
      at[{512, CostStrategy::monolithic}]->wall_time_seconds,
      at[{512, CostStrategy::s1}]->wall_time_seconds, at[{512, CostStrategy::s2}]->wall_time_seconds,
      x128, x512, elapsed);
  return o;
}

Outcome learning_signal() {
  const auto start = Clock::now();
  HyperParams hp;
  hp.n = 32;
  hp.heads = 2;
  hp.f = 64;
  hp.vocab_size = 1000;
  hp.max_positions = 64;
  hp.source_layers = 3;
  const RankerParams donor = synthesize_donor(hp, 11, 0.2);
  ModelParams m = split_initialize(donor, 2, CrossInit::copy, 12);
  const auto data = gen_toy_data(hp.vocab_size, 2, 48, 6400, 13);
  const auto held_out = gen_toy_ranking(hp.vocab_size, 2, 48, 20, 10, 14);
  const double mrr_before = toy_mrr(m, held_out);
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 32;
  cfg.steps = 200;
  cfg.optimizer = OptimizerKind::adam;
  cfg.seed = 15;
  const TrainResult r = train(m, data, cfg);
  const double first = window_mean(r.loss_trace, 0, 20);
  const double last = window_mean(r.loss_trace, r.loss_trace.size() - 20, 20);
  const double mrr_after = toy_mrr(m, held_out);
  Outcome o;
  o.pass = last < kLossRatio * first && mrr_after > mrr_before;
  o.detail = fmt("loss %.4f -> %.4f (ratio %.3f, need < %.2f), held-out MRR@10 %.4f -> %.4f, %.0fs",
                 first, last, last / first, kLossRatio, mrr_before, mrr_after,
                 seconds_since(start));
  return o;
}

Outcome freeze_contracts() {
  HyperParams hp = equivalence_hp();
  hp.max_positions = 24;
  const auto data = gen_toy_data(hp.vocab_size, 3, 12, 80, 601);
  Outcome o;
  int frozen_changed = 0, trainable_changed = 0;
  for (auto mode : {FreezeMode::adapt_interaction, FreezeMode::adapt_representation}) {
    ModelParams m = synthesize_model(hp, 602, 0.1);
    const ModelParams before = m;
    TrainConfig cfg;
    cfg.steps = 10;
    cfg.batch_size = 8;
    cfg.freeze = mode;
    cfg.seed = 603;
    train(m, data, cfg);
    std::vector<std::pair<ParamGroup, const Tensor*>> a;
    std::vector<const Tensor*> b;
    visit_params(before, [&](const std::string&, const Tensor& t, ParamGroup g) { a.emplace_back(g, &t); });
    visit_params(m, [&](const std::string&, const Tensor& t, ParamGroup) { b.push_back(&t); });
    int frozen = 0, moved = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const bool same = bitwise_equal(*a[i].second, *b[i]);
      if (is_frozen(mode, a[i].first)) {
        ++frozen;
        if (!same) ++frozen_changed;
      } else if (!same) {
        ++moved;
      }
    }
    trainable_changed += moved > 0;
    o.detail += fmt(" %s: %d frozen tensors, %d trainable tensors moved;", freeze_mode_name(mode),
                    frozen, moved);
  }
  o.pass = frozen_changed == 0 && trainable_changed == 2;
  o.detail = fmt("frozen tensors changed=%d after 10 steps;", frozen_changed) + o.detail;
  return o;
}

Outcome metric_oracles() {
  int failures = 0;
  auto expect = [&](double got, double want, double tol) {
    if (!(std::abs(got - want) <= tol)) ++failures;
  };
  auto ranked = [](std::initializer_list<const char*> ids) {
    std::vector<ScoredDoc> out;
    double s = 10;
    for (const char* id : ids) out.push_back({id, s--});
    return out;
  };
  expect(reciprocal_rank(ranked({"x", "r"}), {{"r", 1}}), 0.5, kMetricTol);
  const Run run{{"a", ranked({"r", "x"})}, {"b", ranked({"x", "y", "z", "r"})}};
  const Qrels qrels{{"a", {{"r", 1}}}, {"b", {{"r", 1}}}};
  expect(mrr_at_k(run, qrels), 0.625, kMetricTol);
  expect(ndcg(ranked({"g1", "g2"}), {{"g1", 1}, {"g2", 2}}),
         (1 + 3 / std::log2(3.0)) / (3 + 1 / std::log2(3.0)), kMetricTol);
  expect(average_precision(ranked({"r1", "x", "r2"}), {{"r1", 1}, {"r2", 1}}), 5.0 / 6.0, kMetricTol);
  std::vector<ScoredDoc> twenty;
  std::map<std::string, int> five;
  for (int i = 0; i < 20; ++i) {
    twenty.push_back({fmt("d%02d", i), 100.0 - i});
    if (i % 4 == 1) five[fmt("d%02d", i)] = 1;
  }
  expect(precision(twenty, five, 20), 0.25, kMetricTol);

  // t and p from scipy.stats.t, computed independently.
  const auto ni = noninferiority_test(std::vector<double>{0.6, 0.7, 0.8},
                                      std::vector<double>{0.58, 0.70, 0.78}, 0.05);
  expect(ni.t, -3.249999999999995, kTestStatTol);
  expect(ni.p, 0.04152534969191124, kTestStatTol);
  const bool direction =
      ni.reject &&
      !noninferiority_test(std::vector<double>{0.6, 0.7, 0.8}, std::vector<double>{0.3, 0.45, 0.5}, 0.05)
           .reject &&
      noninferiority_test(std::vector<double>(30, 0.5), std::vector<double>(30, 0.5), 0.05).reject;
  Outcome o;
  o.pass = failures == 0 && direction;
  o.detail = fmt("%d oracle mismatches; t=%.15g p=%.15g; direction checks %s", failures, ni.t, ni.p,
                 direction ? "hold" : "fail");
  return o;
}

std::uint64_t checksum(const Tensor& t) {
  std::uint64_t h = 1469598103934665603ULL;
  for (double v : t.values()) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xff;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

Outcome invariant_suite() {
  const ModelParams m = synthesize_model(equivalence_hp(), 901, 0.2);
  std::mt19937_64 rng(902);
  std::uniform_int_distribution<std::size_t> q_len(1, 8), d_len(1, 40), extra(1, 20);
  int padding = 0, immutable = 0, softmax = 0, masking = 0, order = 0;
  for (int c = 0; c < kInvariantCases; ++c) {
    const auto q = random_tokens(q_len(rng), 1000, rng);
    const auto d = random_tokens(d_len(rng), 1000, rng);
    const Tensor Q = encode_query(q, m);
    const double base = score(Q, encode_document(d, m), m).item();

    std::vector<TokenId> padded = d;
    padded.resize(std::min<std::size_t>(d.size() + extra(rng), 64), kPadId);
    Tensor mask({padded.size()}, 0.0);
    for (std::size_t i = 0; i < d.size(); ++i) mask[i] = 1.0;
    const Tensor Dp = encode_document(padded, m, &mask);
    if (score(Q, Dp, m, &mask).item() == base) ++padding;

    std::vector<TokenId> noisy = padded;
    for (std::size_t i = d.size(); i < noisy.size(); ++i) {
      noisy[i] = random_tokens(1, 1000, rng)[0];
    }
    const Tensor Dn = encode_document(noisy, m, &mask);
    if (score(Q, Dn, m, &mask).item() == base) ++masking;

    const Tensor D = encode_document(d, m);
    const std::uint64_t before = checksum(D);
    score(Q, D, m);
    score(Q, project_document(D, m), m);
    if (checksum(D) == before) ++immutable;

    const std::size_t rows = 1 + rng() % 6, cols = 1 + rng() % 30;
    const Tensor x = random_tensor({rows, cols}, rng, 5.0);
    Tensor keep({cols}, 1.0);
    for (std::size_t j = 1; j < cols; ++j) keep[j] = rng() % 3 == 0 ? 0.0 : 1.0;
    const Tensor s = softmax_rows(x, c % 2 ? &keep : nullptr);
    bool rows_ok = true;
    for (std::size_t i = 0; i < rows; ++i) {
      double total = 0.0;
      for (std::size_t j = 0; j < cols; ++j) total += s.at(i, j);
      rows_ok = rows_ok && std::abs(total - 1.0) <= kSoftmaxTol;
    }
    softmax += rows_ok;

    std::vector<Document> cands;
    for (int k = 0; k < 8; ++k) cands.push_back({fmt("c%d", k), random_tokens(d_len(rng), 1000, rng)});
    const auto ranked = rank_on_the_fly(q, cands, m);
    std::shuffle(cands.begin(), cands.end(), rng);
    const auto reranked = rank_on_the_fly(q, cands, m);
    bool same = ranked.size() == reranked.size();
    for (std::size_t k = 0; same && k < ranked.size(); ++k) {
      same = ranked[k].doc_id == reranked[k].doc_id && ranked[k].score == reranked[k].score;
    }
    order += same;
  }
  Outcome o;
  const int n = kInvariantCases;
  o.pass = padding == n && immutable == n && softmax == n && masking == n && order == n;
  o.detail = fmt("padding %d/%d, D-immutability %d/%d, softmax sums %d/%d, mask insensitivity "
                 "%d/%d, candidate order %d/%d",
                 padding, n, immutable, n, softmax, n, masking, n, order, n);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    const char* name;
    std::function<Outcome()> fn;
  };
  const std::vector<Criterion> criteria{
      {"strategy equivalence", strategy_equivalence},
      {"gradient verification", gradient_verification},
      {"initialization contract", initialization_contract},
      {"complexity identities", complexity_identities},
      {"speed ordering", speed_ordering},
      {"learning signal", learning_signal},
      {"freeze contracts", freeze_contracts},
      {"metric oracles", metric_oracles},
      {"invariant suite", invariant_suite},
  };
  // Optional argument: comma-separated criterion numbers to run.
  std::set<int> only;
  if (argc > 1) {
    std::stringstream list(argv[1]);
    for (std::string item; std::getline(list, item, ',');) only.insert(std::stoi(item));
  }
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::printf("AC%d %s %s: %s\n", id, o.pass ? "PASS" : "FAIL", criteria[i].name,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
