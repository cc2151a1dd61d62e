// Copyright 2026 The mores-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mores/attn_dump.hpp"

#include <cstdio>
#include <fstream>

#include "mores/errors.hpp"
#include "mores/ops.hpp"

namespace mores {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void add_heads(std::vector<AttentionMap>& out, const std::string& prefix, const Tensor& weights,
               const std::vector<std::string>& rows, const std::vector<std::string>& cols) {
  for (std::size_t h = 0; h < weights.dim(0); ++h) {
    out.push_back(AttentionMap{prefix + "_head" + std::to_string(h + 1), rows, cols,
                               slice0(weights, h)});
  }
}

}  // namespace

std::vector<AttentionMap> collect_attention(const ModelParams& model, const Tokenized& query,
                                            const Tokenized& doc) {
  std::vector<Tensor> doc_weights;
  std::vector<Tensor> qry_weights;
  std::vector<InteractionAttention> ib_weights;
  const Tensor d = encode_document(doc.ids, model, nullptr, &doc_weights);
  const Tensor q = encode_query(query.ids, model, nullptr, &qry_weights);
  (void)score(q, d, model, nullptr, nullptr, &ib_weights);

  std::vector<std::string> q_tokens{"[CLS]"};
  q_tokens.insert(q_tokens.end(), query.tokens.begin(), query.tokens.end());

  std::vector<AttentionMap> out;
  for (std::size_t m = 0; m < doc_weights.size(); ++m) {
    add_heads(out, "doc_layer" + std::to_string(m + 1) + "_self", doc_weights[m], doc.tokens,
              doc.tokens);
  }
  for (std::size_t n = 0; n < qry_weights.size(); ++n) {
    add_heads(out, "qry_layer" + std::to_string(n + 1) + "_self", qry_weights[n], q_tokens,
              q_tokens);
  }
  for (std::size_t k = 0; k < ib_weights.size(); ++k) {
    const std::string ib = "ib" + std::to_string(k + 1);
    add_heads(out, ib + "_cross", ib_weights[k].cross, q_tokens, doc.tokens);
    add_heads(out, ib + "_self", ib_weights[k].self, q_tokens, q_tokens);
  }
  return out;
}

void write_attention_csv(const AttentionMap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "\"\"";
  for (const auto& t : map.col_tokens) out << ',' << csv_field(t);
  out << '\n';
  char value[40];
  for (std::size_t r = 0; r < map.row_tokens.size(); ++r) {
    out << csv_field(map.row_tokens[r]);
    for (std::size_t c = 0; c < map.col_tokens.size(); ++c) {
      std::snprintf(value, sizeof value, "%.17g", map.weights.at(r, c));
      out << ',' << value;
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<std::filesystem::path> dump_attention(const ModelParams& model, const Tokenized& query,
                                                  const Tokenized& doc,
                                                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths;
  for (const auto& map : collect_attention(model, query, doc)) {
    paths.push_back(dir / (map.name + ".csv"));
    write_attention_csv(map, paths.back());
  }
  return paths;
}

}  // namespace mores
