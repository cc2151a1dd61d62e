// Copyright 2026 The mores-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mores/model.hpp"

namespace mores {

/// Token ↔ id map. Ids 0..3 are [PAD], [UNK], [CLS], [SEP]; the vocab file
/// lists the remaining tokens one per line, so line i holds id i + 4.
class Vocab {
 public:
  /// Reserved tokens only.
  Vocab();

  /// Throws VocabError on a duplicate, empty or reserved token.
  static Vocab from_tokens(const std::vector<std::string>& tokens);
  static Vocab load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  /// [UNK] for unknown tokens.
  TokenId id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;
  std::size_t size() const { return tokens_.size(); }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

/// Lowercases ASCII letters and splits on whitespace; every other
/// non-alphanumeric ASCII character becomes a token of its own. Bytes ≥ 0x80
/// are kept inside words.
std::vector<std::string> split_words(std::string_view text);

struct Tokenized {
  std::vector<TokenId> ids;
  std::vector<std::string> tokens;  // normalized surface forms, one per id
  std::vector<double> mask;         // 1 for every kept token
  bool truncated = false;
};

Tokenized tokenize(std::string_view text, const Vocab& vocab, std::size_t max_len);

/// 996 tokens (ids 4..999): common English words followed by seeded
/// pronounceable filler.
std::vector<std::string> demo_vocab_tokens();

/// `key<TAB>value` lines. Blank lines are skipped; a line without a tab or
/// with an empty key is an IoError naming the line.
std::vector<std::pair<std::string, std::string>> read_tsv(const std::filesystem::path& path);

}  // namespace mores
