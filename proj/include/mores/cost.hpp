// Copyright 2026 The mores-cpp Authors
// SPDX-License-Identifier: Apache-2.0

// Cost accounting for the online reranking paths.
//
// Two unrelated units live here and are never mixed:
//
//  * Analytic units evaluate the asymptotic per-layer cost expressions with
//    constants dropped:
//      monolithic layer     n(d+q)² + n²(d+q)
//      query layer          n·q² + n²·q
//      S1 interaction block n(qd+q²) + n²(q+d)
//      S2 interaction block n(qd+q²) + n²·q
//    multiplied by the layer count of each module, and by N_doc for every
//    per-document term. The document module runs offline and costs nothing
//    online.
//
//  * Measured MACs are exact counts of scalar multiply-accumulates executed
//    by matmul. The online paths execute this matmul inventory, writing
//    a = query rows + 1 (the [CLS] row), L = q + d + 2 and f for the FFN
//    width:
//      attend(x: r rows, y: c rows)   projections  Q r·n², K c·n², V c·n²,
//                                                  output r·n²
//                                     scores       r·n·c (summed over heads)
//                                     context      r·c·n
//      FFN over r rows                2·r·n·f
//      scoring head                   n
//      monolithic, per document       source_layers × (attend(L, L) + FFN(L)) + n
//      S1/S2, once per query          N × (attend(a, a) + FFN(a))
//      S1, per document               K × (attend(a, d) + attend(a, a) + FFN(a)) + n
//      S2, per document               as S1 without the K and V projections of d
//    so S1 − S2 = 2·K·d·n² per scored document.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "mores/model.hpp"
#include "mores/reuse.hpp"
#include "mores/tensor.hpp"

namespace mores {

enum class CostStrategy : std::uint8_t { monolithic, s1, s2 };

const char* cost_strategy_name(CostStrategy strategy);
/// Accepts "monolithic", "s1", "s2" in either case; throws ConfigError otherwise.
CostStrategy parse_cost_strategy(std::string_view text);

struct LayerCounts {
  std::uint32_t source_layers = 12;
  std::uint32_t M = 12;
  std::uint32_t N = 10;
  std::uint32_t K = 2;
};

struct CostQuery {
  std::uint64_t q = 0;
  std::uint64_t d = 0;
  std::uint64_t n = 0;
  LayerCounts layers;
  std::uint64_t n_doc = 1;
  CostStrategy strategy = CostStrategy::monolithic;
};

struct CostTerm {
  std::string name;
  std::uint64_t value = 0;
};

struct CostReport {
  CostQuery query;
  std::vector<CostTerm> analytic_terms;
  std::uint64_t analytic_total = 0;

  // Filled by measurement.
  std::uint64_t measured_macs = 0;
  MacSnapshot measured_by_kind;
  std::vector<double> rep_seconds;
  double wall_time_seconds = 0.0;  // median of rep_seconds
  double speedup_vs_baseline = 0.0;
  double analytic_speedup = 0.0;
  std::uint64_t bytes_per_doc = 0;
};

/// Analytic fields only. Throws ConfigError on a zero-valued size.
CostReport analytic_cost(const CostQuery& cq);

/// Closed-form MAC inventory of the online path, split by MacKind.
MacSnapshot expected_online_macs(const CostQuery& cq, std::uint64_t ffn_width);

/// Payload bytes stored per document (0 for the monolithic path).
std::uint64_t stored_bytes_per_doc(const CostQuery& cq);

/// A monolithic ranker assembled from the model's document module: its
/// embeddings and M layers, with the model's scoring head.
RankerParams ranker_from_document_module(const ModelParams& model);

/// Seeded synthetic workload: one query of q tokens and n_doc documents of
/// exactly d tokens, drawn uniformly from the non-reserved ids.
struct BenchCorpus {
  std::vector<TokenId> query;
  std::vector<Document> docs;
  std::vector<std::string> ids;
};

BenchCorpus synthetic_corpus(std::size_t q, std::size_t d, std::size_t n_doc,
                             std::uint32_t vocab_size, std::uint64_t seed);

/// Runs the online path once on a single candidate (warm-up, untimed), then
/// `reps` timed repetitions over all candidates. MACs are taken from the
/// final repetition. `ranker` is used for the monolithic path, `index` for
/// S1/S2.
CostReport measure(const CostQuery& cq, const ModelParams& model, const RankerParams* ranker,
                   const RecordSource* index, const BenchCorpus& corpus, unsigned reps = 3);

/// Speed-table driver. Corpora, indexes and baseline timings are cached per
/// (q, d, n_doc) so each configuration list pays for them once.
class Bench {
 public:
  Bench(const ModelParams& model, const RankerParams& ranker, unsigned reps = 3,
        std::uint64_t seed = 7);

  CostQuery query_for(std::size_t q, std::size_t d, std::size_t n_doc,
                      CostStrategy strategy) const;

  /// Measures one configuration, filling both speedup columns relative to the
  /// monolithic path at the same (q, d, n_doc).
  CostReport run(const CostQuery& cq);

  std::vector<CostReport> table(std::span<const CostQuery> configs);

 private:
  struct Workload {
    BenchCorpus corpus;
    std::unique_ptr<ReuseIndex> s1;
    std::unique_ptr<ReuseIndex> s2;
  };
  using Key = std::tuple<std::uint64_t, std::uint64_t, std::uint64_t>;

  Workload& workload(const CostQuery& cq);
  const CostReport& baseline(const CostQuery& cq);

  const ModelParams& model_;
  const RankerParams& ranker_;
  unsigned reps_;
  std::uint64_t seed_;
  std::map<Key, Workload> workloads_;
  std::map<Key, CostReport> baselines_;
};

/// CSV with header d,strategy,median_seconds,measured_macs,analytic_units,
/// analytic_speedup,measured_speedup,bytes_per_doc.
std::string format_speedup_csv(std::span<const CostReport> rows);
/// Aligned plain-text rendering of the same columns.
std::string format_speedup_text(std::span<const CostReport> rows);

}  // namespace mores
