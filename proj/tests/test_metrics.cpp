// Copyright 2026 The mores-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "mores/errors.hpp"
#include "mores/metrics.hpp"

using namespace mores;

namespace {

std::vector<ScoredDoc> ranking(std::initializer_list<const char*> ids) {
  std::vector<ScoredDoc> out;
  double s = 100.0;
  for (const char* id : ids) out.push_back({id, s--});
  return out;
}

}  // namespace

TEST_CASE("reciprocal rank") {
  const std::map<std::string, int> judged{{"b", 1}};
  CHECK(reciprocal_rank(ranking({"a", "b", "c"}), judged) == 0.5);
  CHECK(reciprocal_rank(ranking({"a", "c", "b"}), judged, 2) == 0.0);

  Run run{{"q1", ranking({"x", "y"})}, {"q2", ranking({"a", "b", "c", "d"})}};
  Qrels qrels{{"q1", {{"x", 1}}}, {"q2", {{"d", 2}}}};
  CHECK(std::abs(mrr_at_k(run, qrels) - 0.625) <= 1e-12);
  CHECK(mrr_at_k(run, qrels, 3) == 0.5);
}

TEST_CASE("ndcg with exponential gain") {
  const std::map<std::string, int> judged{{"a", 1}, {"b", 2}};
  const double want = (1 + 3 / std::log2(3.0)) / (3 + 1 / std::log2(3.0));
  CHECK(std::abs(ndcg(ranking({"a", "b"}), judged) - want) <= 1e-12);
  CHECK(std::abs(ndcg(ranking({"b", "a"}), judged) - 1.0) <= 1e-12);
  CHECK(ndcg(ranking({"a", "b"}), {{"a", 0}, {"b", 0}}) == 0.0);
  // ideal ordering counts judged docs the run never retrieved
  CHECK(ndcg(ranking({"b"}), judged) < 1.0);
}

TEST_CASE("average precision and precision") {
  const std::map<std::string, int> judged{{"a", 1}, {"c", 1}};
  CHECK(std::abs(average_precision(ranking({"a", "b", "c"}), judged) - 5.0 / 6.0) <= 1e-12);
  CHECK(average_precision(ranking({"a"}), {{"a", 1}}) == 1.0);
  CHECK(std::abs(average_precision(ranking({"a", "b", "c"}), judged, 2) - 0.5) <= 1e-12);

  std::vector<ScoredDoc> top;
  std::map<std::string, int> rel;
  for (int i = 0; i < 30; ++i) {
    top.push_back({"d" + std::to_string(i), 100.0 - i});
    if (i % 4 == 0 && i < 20) rel["d" + std::to_string(i)] = 1;
  }
  CHECK(rel.size() == 5);
  CHECK(std::abs(precision(top, rel, 20) - 0.25) <= 1e-12);
}

TEST_CASE("queries without judgments count as zero") {
  Run run{{"q1", ranking({"x"})}, {"q2", ranking({"y"})}};
  Qrels qrels{{"q1", {{"x", 1}}}};
  CHECK(mrr_at_k(run, qrels) == 0.5);
  CHECK(map_at_k(run, qrels) == 0.5);
}

TEST_CASE("metric names parse") {
  CHECK(parse_metric("mrr@10").label() == "mrr@10");
  CHECK(parse_metric("ndcg@10").kind == MetricKind::ndcg);
  CHECK(parse_metric("map").k == kNoCutoff);
  CHECK(parse_metric("prec@20").label() == "p@20");
  CHECK_THROWS_AS(parse_metric("p"), ConfigError);
  CHECK_THROWS_AS(parse_metric("bleu"), ConfigError);
  CHECK_THROWS_AS(parse_metric("mrr@x"), ConfigError);
}

TEST_CASE("run and qrels text formats") {
  std::istringstream q("q1 0 d1 2\nq1 0 d2 0\n\nq2 0 d9 1\n");
  const Qrels qrels = parse_qrels(q);
  CHECK(qrels.at("q1").at("d1") == 2);
  CHECK(qrels.at("q2").size() == 1);
  std::istringstream bad_q("q1 0 d1\n");
  CHECK_THROWS_AS(parse_qrels(bad_q), IoError);

  std::ostringstream out;
  const std::vector<ScoredDoc> r{{"d2", 0.1}, {"d1", 1.0 / 3.0}};
  write_run(out, "q1", r, "T");
  CHECK(out.str() == "q1 Q0 d2 1 0.10000000000000001 T\nq1 Q0 d1 2 0.33333333333333331 T\n");

  std::istringstream in(out.str());
  const Run run = parse_run(in);
  CHECK(run.at("q1")[0].doc_id == "d1");
  CHECK(run.at("q1")[0].score == 1.0 / 3.0);

  std::istringstream dup("q1 Q0 d1 1 0.5 T\nq1 Q0 d1 2 0.4 T\n");
  CHECK_THROWS_AS(parse_run(dup), IoError);
}

TEST_CASE("non-inferiority test against an independent statistics oracle") {
  // t and p below come from scipy.stats.t with the same formula.
  const std::vector<double> a{0.6, 0.7, 0.8}, b{0.58, 0.70, 0.78};
  const auto r = noninferiority_test(a, b, 0.05);
  CHECK(std::abs(r.delta - 0.035) <= 1e-12);
  CHECK(std::abs(r.t - -3.249999999999995) <= 1e-9);
  CHECK(std::abs(r.p - 0.04152534969191124) <= 1e-9);
  CHECK(r.reject);

  const std::vector<double> g{0.9, 0.7, 0.65, 0.8, 0.75, 0.6, 0.85, 0.7, 0.66, 0.72};
  const std::vector<double> off{0.01, 0.0, 0.03, -0.02, 0.02, 0.01, 0.0, 0.015, 0.005, 0.01};
  std::vector<double> h(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) h[i] = g[i] - off[i];
  const auto r10 = noninferiority_test(g, h, 0.02);
  CHECK(std::abs(r10.t - -1.57464459166572) <= 1e-9);
  CHECK(std::abs(r10.p - 0.07489547754224252) <= 1e-9);
  CHECK_FALSE(r10.reject);
}

TEST_CASE("non-inferiority direction and degenerate cases") {
  const std::vector<double> same(30, 0.5);
  const auto eq = noninferiority_test(same, same, 0.05);
  CHECK(eq.reject);
  CHECK(eq.p == 0.0);

  const std::vector<double> a{0.6, 0.7, 0.8}, flat{0.59, 0.69, 0.79};
  CHECK(noninferiority_test(a, flat, 0.05).reject);

  const std::vector<double> worse{0.3, 0.45, 0.5};
  const auto w = noninferiority_test(a, worse, 0.05);
  CHECK_FALSE(w.reject);
  CHECK(w.t > 0);

  const std::vector<double> x{0.2, 0.5, 0.9, 0.4}, y{0.3, 0.35, 0.8, 0.6};
  CHECK(std::abs(noninferiority_test(x, y, 0.0).t + noninferiority_test(y, x, 0.0).t) <= 1e-12);

  CHECK_THROWS_AS(noninferiority_test(a, std::vector<double>{0.5, 0.5}, 0.05), ConfigError);
  CHECK_THROWS_AS(noninferiority_test(std::vector<double>{0.5}, std::vector<double>{0.5}, 0.05),
                  ConfigError);
}

TEST_CASE("paired per-query values cover the union of queries") {
  Run a{{"q1", ranking({"x"})}, {"q2", ranking({"y"})}};
  Run b{{"q2", ranking({"y"})}, {"q3", ranking({"z"})}};
  Qrels qrels{{"q1", {{"x", 1}}}, {"q2", {{"y", 1}}}, {"q3", {{"z", 1}}}};
  std::vector<double> va, vb;
  paired_per_query(MetricSpec{MetricKind::mrr, 10}, a, b, qrels, va, vb);
  CHECK(va == std::vector<double>{1, 1, 0});
  CHECK(vb == std::vector<double>{0, 1, 1});
}
