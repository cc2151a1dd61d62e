// Copyright 2026 The mores-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mores/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>

#include "mores/attn_dump.hpp"
#include "mores/checkpoint.hpp"
#include "mores/cost.hpp"
#include "mores/errors.hpp"
#include "mores/metrics.hpp"
#include "mores/reuse.hpp"
#include "mores/text.hpp"
#include "mores/train.hpp"

namespace mores::cli {

namespace {

ModelParams load_model(const std::string& path) {
  return model_from_checkpoint(load_checkpoint(path));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  for (char c : text) {
    if (c == ',') {
      if (!item.empty()) out.push_back(item);
      item.clear();
    } else if (c != ' ') {
      item += c;
    }
  }
  if (!item.empty()) out.push_back(item);
  return out;
}

std::size_t parse_size(const std::string& text, const char* what) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) {
    throw ConfigError(std::string("bad ") + what + " '" + text + "'");
  }
  return static_cast<std::size_t>(v);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

std::vector<Document> read_corpus(const std::string& path, const Vocab& vocab,
                                  std::size_t max_len) {
  std::vector<Document> docs;
  std::set<std::string> seen;
  for (auto& [id, text] : read_tsv(path)) {
    if (!seen.insert(id).second) throw IndexError("duplicate document id " + id + " in " + path);
    Tokenized t = tokenize(text, vocab, max_len);
    if (t.ids.empty()) throw LengthError("document " + id + " has no tokens");
    docs.push_back(Document{id, std::move(t.ids)});
  }
  return docs;
}

// ---------------------------------------------------------------------------

struct InitOptions {
  std::string donor;
  bool synthesize_donor = false;
  bool synthesize_model = false;
  std::string donor_out;
  HyperParams hp{64, 2, 256, 1000, 512, 0, 0, 0, 12};
  double init_std = kInitStd;
  std::uint32_t M = 2;
  std::uint32_t N = 2;
  std::uint32_t K = 2;
  std::string cross_init = "copy";
  std::uint64_t seed = 1;
  std::string out;
};

void cmd_init_weights(const InitOptions& o, std::ostream& out) {
  const int sources = (o.donor.empty() ? 0 : 1) + o.synthesize_donor + o.synthesize_model;
  if (sources != 1) {
    throw ConfigError("give exactly one of --donor, --synthesize-donor, --synthesize-model");
  }
  ModelParams model;
  if (o.synthesize_model) {
    HyperParams hp = o.hp;
    hp.M = o.M;
    hp.N = o.N;
    hp.K = o.K;
    model = synthesize_model(hp, o.seed, o.init_std);
  } else {
    CrossInit mode;
    if (o.cross_init == "copy") {
      mode = CrossInit::copy;
    } else if (o.cross_init == "random") {
      mode = CrossInit::random;
    } else {
      throw ConfigError("--cross-init must be copy or random");
    }
    RankerParams donor;
    if (o.synthesize_donor) {
      donor = synthesize_donor(o.hp, o.seed, o.init_std);
      if (!o.donor_out.empty()) save_checkpoint(donor, o.donor_out);
    } else {
      donor = ranker_from_checkpoint(load_checkpoint(o.donor));
    }
    model = split_initialize(donor, o.K, mode, o.seed);
  }
  save_checkpoint(model, o.out);
  const HyperParams& hp = model.hp;
  out << "wrote " << o.out << ": n=" << hp.n << " heads=" << hp.heads << " f=" << hp.f
      << " M=" << hp.M << " N=" << hp.N << " K=" << hp.K << '\n';
}

struct PrecomputeOptions {
  std::string model, corpus, vocab, strategy = "s2", out;
  std::size_t workers = 1;
};

void cmd_precompute(const PrecomputeOptions& o, std::ostream& out) {
  const ModelParams model = load_model(o.model);
  const Vocab vocab = Vocab::load(o.vocab);
  const ReuseStrategy strategy = parse_strategy(o.strategy);
  const auto docs = read_corpus(o.corpus, vocab, model.hp.max_positions);
  const ReuseIndex index = build_index(docs, model, strategy, o.workers);
  save_index(index, o.out);
  out << "indexed " << index.size() << " documents (" << strategy_name(strategy) << ") into "
      << o.out << '\n';
}

struct RankOptions {
  std::string model, vocab, index, corpus, queries, candidates, out, strategy, tag = "MORES";
};

void cmd_rank(const RankOptions& o, std::ostream& out) {
  if (o.index.empty() == o.corpus.empty()) throw ConfigError("give exactly one of --index, --corpus");
  const ModelParams model = load_model(o.model);
  const Vocab vocab = Vocab::load(o.vocab);

  std::vector<std::pair<std::string, std::vector<TokenId>>> queries;
  std::map<std::string, std::size_t> query_slot;
  for (auto& [qid, text] : read_tsv(o.queries)) {
    if (!query_slot.emplace(qid, queries.size()).second) throw IoError("duplicate query id " + qid);
    Tokenized t = tokenize(text, vocab, model.hp.max_positions - 1);
    if (t.ids.empty()) throw LengthError("query " + qid + " has no tokens");
    queries.emplace_back(qid, std::move(t.ids));
  }
  std::vector<std::vector<std::string>> candidates(queries.size());
  for (auto& [qid, docid] : read_tsv(o.candidates)) {
    auto it = query_slot.find(qid);
    if (it == query_slot.end()) throw IoError("candidate for unknown query " + qid);
    candidates[it->second].push_back(docid);
  }

  std::unique_ptr<IndexReader> reader;
  std::unique_ptr<Reranker> reranker;
  std::map<std::string, Document> corpus;
  ReuseStrategy path = ReuseStrategy::s1;
  if (!o.index.empty()) {
    reader = std::make_unique<IndexReader>(o.index);
    path = o.strategy.empty() ? reader->header().strategy : parse_strategy(o.strategy);
    reranker = std::make_unique<Reranker>(model, *reader);
  } else {
    for (auto& d : read_corpus(o.corpus, vocab, model.hp.max_positions)) {
      corpus.emplace(d.id, std::move(d));
    }
  }

  std::ofstream run = open_out(o.out);
  std::size_t lines = 0;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    if (candidates[i].empty()) continue;
    std::vector<ScoredDoc> ranked;
    if (reranker) {
      ranked = reranker->rank(queries[i].second, candidates[i], path);
    } else {
      std::vector<Document> docs;
      std::string missing;
      std::set<std::string> seen;
      for (const auto& id : candidates[i]) {
        if (!seen.insert(id).second) throw LookupError("duplicate candidate id " + id);
        auto it = corpus.find(id);
        if (it == corpus.end()) {
          missing += (missing.empty() ? "" : ", ") + id;
        } else {
          docs.push_back(it->second);
        }
      }
      if (!missing.empty()) throw LookupError("candidates missing from corpus: " + missing);
      ranked = rank_on_the_fly(queries[i].second, docs, model);
    }
    write_run(run, queries[i].first, ranked, o.tag);
    lines += ranked.size();
  }
  if (!run) throw IoError("failed writing " + o.out);
  out << "ranked " << lines << " candidates into " << o.out << '\n';
}

struct BenchOptions {
  std::string model, d = "128,512", strategies = "monolithic,s1,s2", out;
  std::size_t q = 16, n_doc = 100;
  unsigned reps = 3;
  std::uint64_t seed = 7;
};

void cmd_bench(const BenchOptions& o, std::ostream& out) {
  const ModelParams model = load_model(o.model);
  const RankerParams ranker = ranker_from_document_module(model);
  Bench bench(model, ranker, o.reps, o.seed);
  std::vector<CostQuery> configs;
  for (const auto& d : split_list(o.d)) {
    for (const auto& s : split_list(o.strategies)) {
      configs.push_back(bench.query_for(o.q, parse_size(d, "document length"), o.n_doc,
                                        parse_cost_strategy(s)));
    }
  }
  const auto rows = bench.table(configs);
  out << format_speedup_text(rows);
  if (!o.out.empty()) {
    std::ofstream csv = open_out(o.out);
    csv << format_speedup_csv(rows);
    if (!csv) throw IoError("failed writing " + o.out);
  }
}

struct TrainOptions {
  std::string model, out, data = "toy", vocab, loss_trace, optimizer = "adam", freeze = "none";
  double lr = 1e-3;
  std::size_t batch_size = 32, steps = 200;
  std::uint64_t seed = 1;
  std::size_t toy_count = 6400, toy_q_len = 2, toy_d_len = 48;
  std::uint64_t toy_seed = 13;
};

std::vector<ToyExample> read_labelled_pairs(const std::string& path, const Vocab& vocab,
                                            const HyperParams& hp) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<ToyExample> data;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto a = line.find('\t');
    const auto b = a == std::string::npos ? a : line.find('\t', a + 1);
    if (b == std::string::npos) {
      throw IoError(path + ":" + std::to_string(line_no) + ": expected label<TAB>query<TAB>doc");
    }
    const std::string label = line.substr(0, a);
    if (label != "0" && label != "1") {
      throw IoError(path + ":" + std::to_string(line_no) + ": label must be 0 or 1");
    }
    ToyExample ex;
    ex.label = label == "1" ? 1.0 : 0.0;
    ex.query = tokenize(line.substr(a + 1, b - a - 1), vocab, hp.max_positions - 1).ids;
    ex.doc = tokenize(line.substr(b + 1), vocab, hp.max_positions).ids;
    if (ex.query.empty() || ex.doc.empty()) {
      throw LengthError(path + ":" + std::to_string(line_no) + ": empty query or document");
    }
    data.push_back(std::move(ex));
  }
  return data;
}

void cmd_train(const TrainOptions& o, std::ostream& out) {
  ModelParams model = load_model(o.model);
  std::vector<ToyExample> data;
  if (o.data == "toy") {
    data = gen_toy_data(model.hp.vocab_size, o.toy_q_len, o.toy_d_len, o.toy_count, o.toy_seed);
  } else {
    if (o.vocab.empty()) throw ConfigError("--vocab is required with a TSV training file");
    data = read_labelled_pairs(o.data, Vocab::load(o.vocab), model.hp);
  }
  TrainConfig cfg;
  cfg.learning_rate = o.lr;
  cfg.batch_size = o.batch_size;
  cfg.steps = o.steps;
  cfg.optimizer = parse_optimizer(o.optimizer);
  cfg.freeze = parse_freeze_mode(o.freeze);
  cfg.seed = o.seed;
  const TrainResult result = train(model, data, cfg);
  save_checkpoint(model, o.out);
  if (!o.loss_trace.empty()) write_loss_trace(o.loss_trace, result.loss_trace);
  const std::size_t window = std::min<std::size_t>(20, result.loss_trace.size());
  char line[160];
  std::snprintf(line, sizeof line, "steps=%zu first-%zu mean loss=%.6f last-%zu mean loss=%.6f\n",
                result.loss_trace.size(), window, window_mean(result.loss_trace, 0, window),
                window,
                window_mean(result.loss_trace, result.loss_trace.size() - window, window));
  out << line;
}

struct EvalOptions {
  std::string run, qrels, metrics = "mrr@10,ndcg@10,map", baseline;
  double delta = 0.05;
};

void cmd_eval(const EvalOptions& o, std::ostream& out) {
  const Run run = read_run(o.run);
  const Qrels qrels = read_qrels(o.qrels);
  std::optional<Run> baseline;
  if (!o.baseline.empty()) baseline = read_run(o.baseline);
  char line[256];
  for (const auto& name : split_list(o.metrics)) {
    const MetricSpec metric = parse_metric(name);
    std::snprintf(line, sizeof line, "%-10s %.4f\n", metric.label().c_str(),
                  evaluate(metric, run, qrels));
    out << line;
    if (baseline) {
      std::vector<double> a, b;
      paired_per_query(metric, *baseline, run, qrels, a, b);
      const NoninferiorityResult r = noninferiority_test(a, b, o.delta);
      std::snprintf(line, sizeof line,
                    "%-10s baseline=%.4f delta=%.6f t=%.6g p=%.6g %s\n", metric.label().c_str(),
                    evaluate(metric, *baseline, qrels), r.delta, r.t, r.p,
                    r.reject ? "non-inferior" : "inconclusive");
      out << line;
    }
  }
}

struct AttnOptions {
  std::string model, vocab, query, doc, out;
};

void cmd_attn_dump(const AttnOptions& o, std::ostream& out) {
  const ModelParams model = load_model(o.model);
  const Vocab vocab = Vocab::load(o.vocab);
  const Tokenized q = tokenize(o.query, vocab, model.hp.max_positions - 1);
  const Tokenized d = tokenize(o.doc, vocab, model.hp.max_positions);
  if (q.ids.empty()) throw LengthError("query has no tokens");
  if (d.ids.empty()) throw LengthError("document has no tokens");
  const auto paths = dump_attention(model, q, d, o.out);
  out << "wrote " << paths.size() << " attention maps to " << o.out << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Modular transformer reranker: weights, indexes, ranking, benchmarks, training"};
  app.name("mores");
  app.require_subcommand(1);

  InitOptions init;
  auto* c_init = app.add_subcommand("init-weights", "build a modular model checkpoint");
  c_init->add_option("--donor", init.donor, "monolithic donor checkpoint");
  c_init->add_flag("--synthesize-donor", init.synthesize_donor, "generate a seeded donor");
  c_init->add_flag("--synthesize-model", init.synthesize_model,
                   "generate a seeded modular model with --M/--N/--K layers");
  c_init->add_option("--donor-out", init.donor_out, "also save the synthesized donor");
  c_init->add_option("--n", init.hp.n, "hidden width");
  c_init->add_option("--heads", init.hp.heads, "attention heads");
  c_init->add_option("--f", init.hp.f, "feed-forward width");
  c_init->add_option("--vocab-size", init.hp.vocab_size, "vocabulary size");
  c_init->add_option("--max-positions", init.hp.max_positions, "position table size");
  c_init->add_option("--source-layers", init.hp.source_layers, "donor layers");
  c_init->add_option("--init-std", init.init_std, "normal init standard deviation");
  c_init->add_option("--M", init.M, "document layers (--synthesize-model)");
  c_init->add_option("--N", init.N, "query layers (--synthesize-model)");
  c_init->add_option("--K", init.K, "interaction blocks");
  c_init->add_option("--cross-init", init.cross_init, "copy or random");
  c_init->add_option("--seed", init.seed, "random seed");
  c_init->add_option("--out", init.out, "output checkpoint")->required();

  PrecomputeOptions pre;
  auto* c_pre = app.add_subcommand("precompute", "encode a corpus into a reuse index");
  c_pre->add_option("--model", pre.model)->required();
  c_pre->add_option("--corpus", pre.corpus, "id<TAB>text")->required();
  c_pre->add_option("--vocab", pre.vocab)->required();
  c_pre->add_option("--strategy", pre.strategy, "s1 or s2");
  c_pre->add_option("--workers", pre.workers, "encoding threads");
  c_pre->add_option("--out", pre.out)->required();

  RankOptions rank;
  auto* c_rank = app.add_subcommand("rank", "rerank candidates into a TREC run");
  c_rank->add_option("--model", rank.model)->required();
  c_rank->add_option("--vocab", rank.vocab)->required();
  c_rank->add_option("--index", rank.index, "reuse index");
  c_rank->add_option("--corpus", rank.corpus, "score on the fly from id<TAB>text");
  c_rank->add_option("--strategy", rank.strategy, "scoring path, defaults to the index's");
  c_rank->add_option("--queries", rank.queries, "qid<TAB>text")->required();
  c_rank->add_option("--candidates", rank.candidates, "qid<TAB>docid")->required();
  c_rank->add_option("--tag", rank.tag, "run tag");
  c_rank->add_option("--out", rank.out)->required();

  BenchOptions bench;
  auto* c_bench = app.add_subcommand("bench", "time online scoring paths");
  c_bench->add_option("--model", bench.model)->required();
  c_bench->add_option("--q", bench.q, "query length");
  c_bench->add_option("--d", bench.d, "comma-separated document lengths");
  c_bench->add_option("--n-doc", bench.n_doc, "candidates per query");
  c_bench->add_option("--strategies", bench.strategies, "monolithic,s1,s2");
  c_bench->add_option("--reps", bench.reps, "timed repetitions");
  c_bench->add_option("--seed", bench.seed, "corpus seed");
  c_bench->add_option("--out", bench.out, "CSV output");

  TrainOptions tr;
  auto* c_train = app.add_subcommand("train", "pointwise training");
  c_train->add_option("--model", tr.model)->required();
  c_train->add_option("--out", tr.out)->required();
  c_train->add_option("--data", tr.data, "toy, or label<TAB>query<TAB>doc file");
  c_train->add_option("--vocab", tr.vocab, "needed for a TSV data file");
  c_train->add_option("--lr", tr.lr);
  c_train->add_option("--batch-size", tr.batch_size);
  c_train->add_option("--steps", tr.steps);
  c_train->add_option("--optimizer", tr.optimizer, "sgd or adam");
  c_train->add_option("--freeze", tr.freeze, "none, adapt-interaction, adapt-representation");
  c_train->add_option("--seed", tr.seed);
  c_train->add_option("--loss-trace", tr.loss_trace, "CSV step,loss");
  c_train->add_option("--toy-count", tr.toy_count);
  c_train->add_option("--toy-q-len", tr.toy_q_len);
  c_train->add_option("--toy-d-len", tr.toy_d_len);
  c_train->add_option("--toy-seed", tr.toy_seed);

  EvalOptions ev;
  auto* c_eval = app.add_subcommand("eval", "ranking metrics");
  c_eval->add_option("--run", ev.run)->required();
  c_eval->add_option("--qrels", ev.qrels)->required();
  c_eval->add_option("--metrics", ev.metrics, "e.g. mrr@10,ndcg@10,map,p@20");
  c_eval->add_option("--noninferiority", ev.baseline, "baseline run to test against");
  c_eval->add_option("--delta", ev.delta, "margin as a fraction of the baseline mean");

  AttnOptions at;
  auto* c_attn = app.add_subcommand("attn-dump", "write per-head attention maps as CSV");
  c_attn->add_option("--model", at.model)->required();
  c_attn->add_option("--vocab", at.vocab)->required();
  c_attn->add_option("--query", at.query)->required();
  c_attn->add_option("--doc", at.doc)->required();
  c_attn->add_option("--out", at.out)->required();

  std::string vocab_out;
  auto* c_vocab = app.add_subcommand("make-vocab", "write the demo vocabulary");
  c_vocab->add_option("--out", vocab_out)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*c_init) cmd_init_weights(init, out);
    else if (*c_pre) cmd_precompute(pre, out);
    else if (*c_rank) cmd_rank(rank, out);
    else if (*c_bench) cmd_bench(bench, out);
    else if (*c_train) cmd_train(tr, out);
    else if (*c_eval) cmd_eval(ev, out);
    else if (*c_attn) cmd_attn_dump(at, out);
    else if (*c_vocab) {
      Vocab::from_tokens(demo_vocab_tokens()).save(vocab_out);
      out << "wrote " << vocab_out << '\n';
    }
  } catch (const StalenessError& e) {
    err << "error: " << e.what() << '\n';
    return kExitStale;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace mores::cli
