// Copyright 2026 The mores-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mores/metrics.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "mores/errors.hpp"

namespace mores {

namespace {

std::vector<std::string> fields(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string f; in >> f;) out.push_back(std::move(f));
  return out;
}

std::string where(std::size_t line_no) { return "line " + std::to_string(line_no) + ": "; }

int grade_of(const std::map<std::string, int>& judged, const std::string& doc_id) {
  auto it = judged.find(doc_id);
  return it == judged.end() ? 0 : it->second;
}

std::size_t depth(std::span<const ScoredDoc> ranking, std::size_t k) {
  return std::min(ranking.size(), k);
}

const std::map<std::string, int>& judgments_for(const Qrels& qrels, const std::string& qid) {
  static const std::map<std::string, int> kNone;
  auto it = qrels.find(qid);
  return it == qrels.end() ? kNone : it->second;
}

double metric_value(const MetricSpec& m, std::span<const ScoredDoc> ranking,
                    const std::map<std::string, int>& judged) {
  switch (m.kind) {
    case MetricKind::mrr: return reciprocal_rank(ranking, judged, m.k);
    case MetricKind::ndcg: return ndcg(ranking, judged, m.k);
    case MetricKind::map: return average_precision(ranking, judged, m.k);
    case MetricKind::precision: return precision(ranking, judged, m.k);
  }
  return 0.0;
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

Qrels parse_qrels(std::istream& in) {
  Qrels qrels;
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    auto f = fields(line);
    if (f.empty()) continue;
    if (f.size() != 4) throw IoError(where(no) + "qrels needs 4 fields, got " + std::to_string(f.size()));
    int grade = 0;
    auto [ptr, ec] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), grade);
    if (ec != std::errc() || ptr != f[3].data() + f[3].size() || grade < 0) {
      throw IoError(where(no) + "bad relevance grade '" + f[3] + "'");
    }
    qrels[f[0]][f[2]] = grade;
  }
  return qrels;
}

Qrels read_qrels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_qrels(in);
}

Run parse_run(std::istream& in) {
  Run run;
  std::map<std::string, std::set<std::string>> seen;
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    auto f = fields(line);
    if (f.empty()) continue;
    if (f.size() != 6) throw IoError(where(no) + "run needs 6 fields, got " + std::to_string(f.size()));
    double score = 0.0;
    try {
      std::size_t used = 0;
      score = std::stod(f[4], &used);
      if (used != f[4].size()) throw std::invalid_argument(f[4]);
    } catch (const std::exception&) {
      throw IoError(where(no) + "bad score '" + f[4] + "'");
    }
    if (!std::isfinite(score)) throw IoError(where(no) + "non-finite score");
    if (!seen[f[0]].insert(f[2]).second) {
      throw IoError(where(no) + "doc " + f[2] + " repeated for query " + f[0]);
    }
    run[f[0]].push_back(ScoredDoc{f[2], score});
  }
  for (auto& [qid, ranking] : run) sort_ranking(ranking);
  return run;
}

Run read_run(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_run(in);
}

void write_run(std::ostream& out, const std::string& qid, std::span<const ScoredDoc> ranking,
               std::string_view tag) {
  char score[40];
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    std::snprintf(score, sizeof score, "%.17g", ranking[i].score);
    out << qid << " Q0 " << ranking[i].doc_id << ' ' << (i + 1) << ' ' << score << ' ' << tag
        << '\n';
  }
}

double reciprocal_rank(std::span<const ScoredDoc> ranking, const std::map<std::string, int>& judged,
                       std::size_t k) {
  for (std::size_t i = 0; i < depth(ranking, k); ++i) {
    if (grade_of(judged, ranking[i].doc_id) >= 1) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

double ndcg(std::span<const ScoredDoc> ranking, const std::map<std::string, int>& judged,
            std::size_t k) {
  auto gain = [](int g) { return std::exp2(static_cast<double>(g)) - 1.0; };
  auto discount = [](std::size_t i) { return 1.0 / std::log2(static_cast<double>(i) + 2.0); };

  std::vector<int> ideal;
  for (const auto& [doc, g] : judged) {
    if (g > 0) ideal.push_back(g);
  }
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(ideal.size(), k); ++i) idcg += gain(ideal[i]) * discount(i);
  if (idcg == 0.0) return 0.0;

  double dcg = 0.0;
  for (std::size_t i = 0; i < depth(ranking, k); ++i) {
    dcg += gain(grade_of(judged, ranking[i].doc_id)) * discount(i);
  }
  return dcg / idcg;
}

double average_precision(std::span<const ScoredDoc> ranking,
                         const std::map<std::string, int>& judged, std::size_t k) {
  const auto relevant = std::count_if(judged.begin(), judged.end(),
                                      [](const auto& kv) { return kv.second >= 1; });
  if (relevant == 0) return 0.0;
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < depth(ranking, k); ++i) {
    if (grade_of(judged, ranking[i].doc_id) >= 1) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(relevant);
}

double precision(std::span<const ScoredDoc> ranking, const std::map<std::string, int>& judged,
                 std::size_t k) {
  if (k == 0 || k == kNoCutoff) throw ConfigError("precision needs a finite cutoff");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < depth(ranking, k); ++i) {
    if (grade_of(judged, ranking[i].doc_id) >= 1) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(k);
}

std::string MetricSpec::label() const {
  static const char* names[] = {"mrr", "ndcg", "map", "p"};
  std::string out = names[static_cast<int>(kind)];
  if (k != kNoCutoff) out += "@" + std::to_string(k);
  return out;
}

MetricSpec parse_metric(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  const auto at = lower.find('@');
  const std::string name = lower.substr(0, at);
  MetricSpec spec;
  if (name == "mrr") {
    spec.kind = MetricKind::mrr;
  } else if (name == "ndcg") {
    spec.kind = MetricKind::ndcg;
  } else if (name == "map") {
    spec.kind = MetricKind::map;
  } else if (name == "p" || name == "prec") {
    spec.kind = MetricKind::precision;
  } else {
    throw ConfigError("unknown metric '" + std::string(text) + "'");
  }
  if (at != std::string::npos) {
    const std::string cut = lower.substr(at + 1);
    std::size_t k = 0;
    auto [ptr, ec] = std::from_chars(cut.data(), cut.data() + cut.size(), k);
    if (ec != std::errc() || ptr != cut.data() + cut.size() || k == 0) {
      throw ConfigError("bad cutoff in metric '" + std::string(text) + "'");
    }
    spec.k = k;
  } else if (spec.kind == MetricKind::precision) {
    throw ConfigError("precision needs a cutoff, e.g. p@20");
  }
  return spec;
}

std::vector<double> per_query(const MetricSpec& metric, const Run& run, const Qrels& qrels) {
  std::vector<double> out;
  out.reserve(run.size());
  for (const auto& [qid, ranking] : run) {
    out.push_back(metric_value(metric, ranking, judgments_for(qrels, qid)));
  }
  return out;
}

double evaluate(const MetricSpec& metric, const Run& run, const Qrels& qrels) {
  return mean(per_query(metric, run, qrels));
}

double mrr_at_k(const Run& run, const Qrels& qrels, std::size_t k) {
  return evaluate(MetricSpec{MetricKind::mrr, k}, run, qrels);
}
double ndcg_at_k(const Run& run, const Qrels& qrels, std::size_t k) {
  return evaluate(MetricSpec{MetricKind::ndcg, k}, run, qrels);
}
double map_at_k(const Run& run, const Qrels& qrels, std::size_t k) {
  return evaluate(MetricSpec{MetricKind::map, k}, run, qrels);
}
double prec_at_k(const Run& run, const Qrels& qrels, std::size_t k) {
  return evaluate(MetricSpec{MetricKind::precision, k}, run, qrels);
}

NoninferiorityResult noninferiority_test(std::span<const double> a, std::span<const double> b,
                                         double delta_fraction) {
  if (a.size() != b.size()) {
    throw ConfigError("paired lists differ in length: " + std::to_string(a.size()) + " vs " +
                      std::to_string(b.size()));
  }
  if (a.size() < 2) throw ConfigError("non-inferiority test needs at least 2 pairs");
  const std::size_t n = a.size();
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = a[i] - b[i];

  NoninferiorityResult r;
  r.mean_diff = mean(diff);
  r.delta = delta_fraction * mean(a);
  const bool constant = std::all_of(diff.begin(), diff.end(), [&](double x) { return x == diff[0]; });
  if (constant) {
    r.sd = 0.0;
    r.reject = r.mean_diff <= r.delta;
    r.t = r.reject ? -std::numeric_limits<double>::infinity()
                   : std::numeric_limits<double>::infinity();
    r.p = r.reject ? 0.0 : 1.0;
    return r;
  }
  double ss = 0.0;
  for (double x : diff) ss += (x - r.mean_diff) * (x - r.mean_diff);
  r.sd = std::sqrt(ss / static_cast<double>(n - 1));
  r.t = (r.mean_diff - r.delta) / (r.sd / std::sqrt(static_cast<double>(n)));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  r.p = boost::math::cdf(dist, r.t);
  r.reject = r.p < 0.05;
  return r;
}

void paired_per_query(const MetricSpec& metric, const Run& a, const Run& b, const Qrels& qrels,
                      std::vector<double>& out_a, std::vector<double>& out_b) {
  std::set<std::string> qids;
  for (const auto& [qid, _] : a) qids.insert(qid);
  for (const auto& [qid, _] : b) qids.insert(qid);
  out_a.clear();
  out_b.clear();
  for (const auto& qid : qids) {
    const auto& judged = judgments_for(qrels, qid);
    auto ia = a.find(qid);
    auto ib = b.find(qid);
    out_a.push_back(ia == a.end() ? 0.0 : metric_value(metric, ia->second, judged));
    out_b.push_back(ib == b.end() ? 0.0 : metric_value(metric, ib->second, judged));
  }
}

}  // namespace mores
