// Copyright 2026 The mores-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <string>
#include <vector>

namespace mores {

struct ScoredDoc {
  std::string doc_id;
  double score = 0.0;
};

/// Descending score; equal scores in ascending doc_id order.
inline bool ranks_before(const ScoredDoc& a, const ScoredDoc& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.doc_id < b.doc_id;
}

inline void sort_ranking(std::vector<ScoredDoc>& docs) {
  std::sort(docs.begin(), docs.end(), ranks_before);
}

}  // namespace mores
