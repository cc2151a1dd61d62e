// Copyright 2026 The mores-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mores/model.hpp"
#include "mores/ranking.hpp"

namespace mores {

/// S1 stores the document module output D; S2 stores every interaction
/// block's cross-attention key/value projections of D.
enum class ReuseStrategy : std::uint8_t { s1 = 1, s2 = 2 };

const char* strategy_name(ReuseStrategy strategy);
/// Accepts "s1"/"S1"/"s2"/"S2"; throws ConfigError otherwise.
ReuseStrategy parse_strategy(std::string_view text);

struct Document {
  std::string id;
  std::vector<TokenId> tokens;
};

struct DocRecord {
  std::string doc_id;
  std::size_t length = 0;
  Tensor representation;                 // S1: [d×n]
  std::vector<ProjectedKV> projections;  // S2: one per interaction block

  /// Number of f64 values in the stored payload.
  std::size_t payload_values() const;
};

struct IndexHeader {
  ReuseStrategy strategy = ReuseStrategy::s1;
  std::uint64_t fingerprint = 0;
  std::uint32_t K = 0;
  std::uint32_t n = 0;
  std::uint32_t heads = 0;

  bool operator==(const IndexHeader&) const = default;
};

/// Read access to precomputed records, in memory or on disk.
class RecordSource {
 public:
  virtual ~RecordSource() = default;
  virtual const IndexHeader& header() const = 0;
  /// Null when the id is absent.
  virtual std::shared_ptr<const DocRecord> fetch(const std::string& doc_id) const = 0;
  virtual bool contains(const std::string& doc_id) const = 0;
};

/// In-memory index. Immutable once built; concurrent readers are safe.
class ReuseIndex final : public RecordSource {
 public:
  explicit ReuseIndex(IndexHeader header) : header_(header) {}

  /// Throws IndexError on a duplicate id and ShapeError on a record whose
  /// dims disagree with the header.
  void insert(DocRecord record);

  const IndexHeader& header() const override { return header_; }
  std::shared_ptr<const DocRecord> fetch(const std::string& doc_id) const override;
  bool contains(const std::string& doc_id) const override;

  std::size_t size() const { return records_.size(); }
  std::vector<std::string> ids() const;

 private:
  IndexHeader header_;
  std::map<std::string, std::shared_ptr<const DocRecord>> records_;
};

IndexHeader index_header_for(const ModelParams& params, ReuseStrategy strategy);

/// Offline work for one document under the given strategy.
DocRecord make_record(const Document& doc, const ModelParams& params, ReuseStrategy strategy);

/// Encodes every document independently, optionally on `workers` threads.
ReuseIndex build_index(std::span<const Document> corpus, const ModelParams& params,
                       ReuseStrategy strategy, std::size_t workers = 1);

/// Index file layout (little-endian):
///   "MORI" | u32 version=1 | u8 strategy | u64 fingerprint | u32 K | u32 n |
///   u32 heads | u64 doc_count | per doc: u16 id_len, id, u64 absolute offset |
///   per record: u32 d, payload f64 (S1: D row-major; S2: K_1, V_1, …, K_K,
///   V_K, each head-major).
/// Records are written in ascending doc_id order.
void save_index(const ReuseIndex& index, const std::filesystem::path& path);
ReuseIndex load_index(const std::filesystem::path& path);

/// Random-access reader: opening reads only the header and offset table;
/// fetch() reads a single record.
class IndexReader final : public RecordSource {
 public:
  explicit IndexReader(const std::filesystem::path& path);

  const IndexHeader& header() const override { return header_; }
  std::shared_ptr<const DocRecord> fetch(const std::string& doc_id) const override;
  bool contains(const std::string& doc_id) const override;

  std::vector<std::string> ids() const;
  std::uint64_t bytes_read() const;

 private:
  std::vector<std::uint8_t> read_exact(std::size_t len) const;

  std::filesystem::path path_;
  IndexHeader header_;
  std::vector<std::pair<std::string, std::uint64_t>> table_;
  std::map<std::string, std::uint64_t> offsets_;
  std::uint64_t file_size_ = 0;
  mutable std::ifstream in_;
  mutable std::mutex mutex_;
  mutable std::uint64_t bytes_read_ = 0;
};

/// Online scoring against precomputed records. Construction verifies that
/// the index was built for `params` (StalenessError otherwise).
class Reranker {
 public:
  Reranker(const ModelParams& params, const RecordSource& index);

  /// Encodes the query once, scores every candidate through `path`, and
  /// returns them best first. Throws StrategyError when `path` differs from
  /// the index strategy and LookupError naming every missing id.
  std::vector<ScoredDoc> rank(std::span<const TokenId> query,
                              std::span<const std::string> candidates,
                              ReuseStrategy path) const;

  /// Scores one stored record against an encoded query.
  double score_record(const Tensor& query_repr, const DocRecord& record) const;

 private:
  const ModelParams& params_;
  const RecordSource& index_;
};

std::vector<ScoredDoc> rank_candidates(std::span<const TokenId> query,
                                       std::span<const std::string> candidates,
                                       const RecordSource& index, const ModelParams& params,
                                       ReuseStrategy path);

/// Reference path without an index: each candidate's D is computed on the spot.
std::vector<ScoredDoc> rank_on_the_fly(std::span<const TokenId> query,
                                       std::span<const Document> candidates,
                                       const ModelParams& params);

}  // namespace mores
