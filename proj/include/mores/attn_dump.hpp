// Copyright 2026 The mores-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mores/model.hpp"
#include "mores/text.hpp"

namespace mores {

/// One head's attention map with token labels. Rows are queries, columns keys.
struct AttentionMap {
  std::string name;  // e.g. "doc_layer1_self_head2", "ib1_cross_head1"
  std::vector<std::string> row_tokens;
  std::vector<std::string> col_tokens;
  Tensor weights;  // [rows×cols]
};

/// Every head of every document layer, query layer and interaction block
/// (cross and self paths) for one query/document pair: (M + N + 2K)·h maps.
/// Query rows start with [CLS].
std::vector<AttentionMap> collect_attention(const ModelParams& model, const Tokenized& query,
                                            const Tokenized& doc);

/// Header row "" followed by the column tokens; each data row is the row
/// token followed by its weights at 17 significant digits. Fields holding a
/// comma or quote are quoted.
void write_attention_csv(const AttentionMap& map, const std::filesystem::path& path);

/// Writes one `<name>.csv` per map into `dir` (created if needed) and returns
/// the paths in collection order.
std::vector<std::filesystem::path> dump_attention(const ModelParams& model, const Tokenized& query,
                                                  const Tokenized& doc,
                                                  const std::filesystem::path& dir);

}  // namespace mores
