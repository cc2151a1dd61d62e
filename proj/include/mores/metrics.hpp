// Copyright 2026 The mores-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mores/ranking.hpp"

namespace mores {

/// query id → doc id → grade (≥ 0). Text form: `qid 0 docid grade`.
using Qrels = std::map<std::string, std::map<std::string, int>>;

/// query id → ranking, best first (descending score, ties by ascending doc
/// id). Text form: `qid Q0 docid rank score tag`.
using Run = std::map<std::string, std::vector<ScoredDoc>>;

Qrels parse_qrels(std::istream& in);
Qrels read_qrels(const std::filesystem::path& path);

/// Rankings are re-sorted by score, so the rank column is informational.
/// Duplicate doc ids within a query are rejected.
Run parse_run(std::istream& in);
Run read_run(const std::filesystem::path& path);

/// Appends one query's ranking; scores are printed with 17 significant digits.
void write_run(std::ostream& out, const std::string& qid, std::span<const ScoredDoc> ranking,
               std::string_view tag);

inline constexpr std::size_t kNoCutoff = std::numeric_limits<std::size_t>::max();

// Per-query metrics over one ranking. `judged` maps doc id to grade; docs
// absent from it count as grade 0.
double reciprocal_rank(std::span<const ScoredDoc> ranking, const std::map<std::string, int>& judged,
                       std::size_t k = kNoCutoff);
/// Gain 2^g − 1, discount 1/log2(rank + 1); ideal from every judged doc. 0
/// when no judged doc has a positive grade.
double ndcg(std::span<const ScoredDoc> ranking, const std::map<std::string, int>& judged,
            std::size_t k = kNoCutoff);
/// Denominator is the number of judged docs with grade ≥ 1.
double average_precision(std::span<const ScoredDoc> ranking,
                         const std::map<std::string, int>& judged, std::size_t k = kNoCutoff);
/// Relevant docs in the top k, divided by k.
double precision(std::span<const ScoredDoc> ranking, const std::map<std::string, int>& judged,
                 std::size_t k);

enum class MetricKind : std::uint8_t { mrr, ndcg, map, precision };

struct MetricSpec {
  MetricKind kind = MetricKind::mrr;
  std::size_t k = kNoCutoff;

  /// Canonical label such as "mrr@10", "ndcg@10", "map", "p@20".
  std::string label() const;
};

/// Parses "mrr", "mrr@10", "ndcg@10", "map", "map@1000", "p@20" or
/// "prec@20". Precision requires a cutoff. Throws ConfigError otherwise.
MetricSpec parse_metric(std::string_view text);

/// One value per query of the run, in query id order. Queries absent from
/// the qrels score 0.
std::vector<double> per_query(const MetricSpec& metric, const Run& run, const Qrels& qrels);

/// Mean of per_query(); 0 for an empty run.
double evaluate(const MetricSpec& metric, const Run& run, const Qrels& qrels);

double mrr_at_k(const Run& run, const Qrels& qrels, std::size_t k = kNoCutoff);
double ndcg_at_k(const Run& run, const Qrels& qrels, std::size_t k = kNoCutoff);
double map_at_k(const Run& run, const Qrels& qrels, std::size_t k = kNoCutoff);
double prec_at_k(const Run& run, const Qrels& qrels, std::size_t k);

struct NoninferiorityResult {
  double mean_diff = 0.0;
  double delta = 0.0;
  double sd = 0.0;
  double t = 0.0;
  double p = 0.0;
  /// True when H0 (mean(a − b) > delta) is rejected at the 0.05 level, i.e.
  /// b is declared non-inferior to a.
  bool reject = false;
};

/// One-sided paired t-test of a − b against delta = delta_fraction · mean(a),
/// with N − 1 degrees of freedom. When every difference is equal the
/// statistic is undefined and the decision is mean(diff) ≤ delta (reported as
/// t = −inf, p = 0 or t = +inf, p = 1).
NoninferiorityResult noninferiority_test(std::span<const double> a, std::span<const double> b,
                                         double delta_fraction);

/// Paired per-query values for two runs over the union of their query ids;
/// a query missing from one run scores 0 there.
void paired_per_query(const MetricSpec& metric, const Run& a, const Run& b, const Qrels& qrels,
                      std::vector<double>& out_a, std::vector<double>& out_b);

}  // namespace mores
