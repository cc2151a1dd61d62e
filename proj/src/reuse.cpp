// Copyright 2026 The mores-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mores/reuse.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <set>
#include <thread>

#include "binary_io.hpp"
#include "mores/checkpoint.hpp"
#include "mores/errors.hpp"

namespace mores {

namespace {

constexpr char kMagic[] = "MORI";
constexpr std::uint32_t kIndexVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 4 + 1 + 8 + 4 + 4 + 4 + 8;

std::size_t record_values(const IndexHeader& h, std::size_t length) {
  const std::size_t per_copy = length * h.n;
  return h.strategy == ReuseStrategy::s1 ? per_copy : 2 * std::size_t{h.K} * per_copy;
}

void check_record(const IndexHeader& h, const DocRecord& r) {
  const std::size_t d = r.length;
  auto fail = [&](const std::string& why) {
    throw ShapeError("record " + r.doc_id + " does not match index: " + why);
  };
  if (d == 0) fail("empty document");
  if (h.strategy == ReuseStrategy::s1) {
    if (r.representation.dims() != Dims{d, h.n}) fail("representation dims");
    if (!r.projections.empty()) fail("S1 record carries projections");
  } else {
    if (r.projections.size() != h.K) fail("expected " + std::to_string(2 * h.K) + " projections");
    const Dims expected{h.heads, d, h.n / h.heads};
    for (const auto& kv : r.projections) {
      if (kv.keys.dims() != expected || kv.values.dims() != expected) fail("projection dims");
    }
  }
}

void write_record_payload(binary::Writer& w, const DocRecord& r, ReuseStrategy strategy) {
  w.u32(static_cast<std::uint32_t>(r.length));
  if (strategy == ReuseStrategy::s1) {
    w.f64s(r.representation.values());
  } else {
    for (const auto& kv : r.projections) {
      w.f64s(kv.keys.values());
      w.f64s(kv.values.values());
    }
  }
}

DocRecord read_record_payload(binary::Reader& r, const IndexHeader& h, std::string doc_id) {
  DocRecord rec;
  rec.doc_id = std::move(doc_id);
  rec.length = r.u32();
  if (rec.length == 0) throw IoError("record " + rec.doc_id + " has zero length");
  r.need(record_values(h, rec.length) * 8);
  if (h.strategy == ReuseStrategy::s1) {
    rec.representation = Tensor({rec.length, h.n});
    r.f64s(rec.representation.values());
  } else {
    const Dims dims{h.heads, rec.length, h.n / h.heads};
    for (std::uint32_t i = 0; i < h.K; ++i) {
      ProjectedKV kv{Tensor(dims), Tensor(dims)};
      r.f64s(kv.keys.values());
      r.f64s(kv.values.values());
      rec.projections.push_back(std::move(kv));
    }
  }
  return rec;
}

IndexHeader read_header(binary::Reader& r) {
  if (r.remaining() < 4 || r.raw(4) != std::string_view(kMagic, 4)) {
    throw MagicError("not a reuse index: bad magic");
  }
  const std::uint32_t version = r.u32();
  if (version != kIndexVersion) {
    throw VersionError("unsupported index version " + std::to_string(version));
  }
  IndexHeader h;
  const std::uint8_t strategy = r.u8();
  if (strategy != 1 && strategy != 2) {
    throw IoError("unknown index strategy byte " + std::to_string(strategy));
  }
  h.strategy = static_cast<ReuseStrategy>(strategy);
  h.fingerprint = r.u64();
  h.K = r.u32();
  h.n = r.u32();
  h.heads = r.u32();
  if (h.heads == 0 || h.n == 0 || h.n % h.heads != 0) {
    throw IoError("index header has invalid n/heads");
  }
  return h;
}

}  // namespace

const char* strategy_name(ReuseStrategy strategy) {
  return strategy == ReuseStrategy::s1 ? "s1" : "s2";
}

ReuseStrategy parse_strategy(std::string_view text) {
  if (text == "s1" || text == "S1") return ReuseStrategy::s1;
  if (text == "s2" || text == "S2") return ReuseStrategy::s2;
  throw ConfigError("unknown reuse strategy '" + std::string(text) + "' (expected s1 or s2)");
}

std::size_t DocRecord::payload_values() const {
  if (!projections.empty()) {
    std::size_t total = 0;
    for (const auto& kv : projections) total += kv.keys.size() + kv.values.size();
    return total;
  }
  return length == 0 ? 0 : representation.size();
}

void ReuseIndex::insert(DocRecord record) {
  check_record(header_, record);
  const std::string id = record.doc_id;
  auto shared = std::make_shared<const DocRecord>(std::move(record));
  if (!records_.emplace(id, std::move(shared)).second) {
    throw IndexError("duplicate document id " + id);
  }
}

std::shared_ptr<const DocRecord> ReuseIndex::fetch(const std::string& doc_id) const {
  auto it = records_.find(doc_id);
  return it == records_.end() ? nullptr : it->second;
}

bool ReuseIndex::contains(const std::string& doc_id) const { return records_.count(doc_id) != 0; }

std::vector<std::string> ReuseIndex::ids() const {
  std::vector<std::string> out;
  out.reserve(records_.size());
  for (const auto& [id, _] : records_) out.push_back(id);
  return out;
}

IndexHeader index_header_for(const ModelParams& params, ReuseStrategy strategy) {
  return IndexHeader{strategy, model_fingerprint(params), params.hp.K, params.hp.n,
                     params.hp.heads};
}

DocRecord make_record(const Document& doc, const ModelParams& params, ReuseStrategy strategy) {
  DocRecord rec;
  rec.doc_id = doc.id;
  rec.length = doc.tokens.size();
  Tensor repr = encode_document(doc.tokens, params);
  if (strategy == ReuseStrategy::s1) {
    rec.representation = std::move(repr);
  } else {
    rec.projections = project_document(repr, params);
  }
  return rec;
}

ReuseIndex build_index(std::span<const Document> corpus, const ModelParams& params,
                       ReuseStrategy strategy, std::size_t workers) {
  ReuseIndex index(index_header_for(params, strategy));
  std::set<std::string_view> seen;
  for (const auto& doc : corpus) {
    if (!seen.insert(doc.id).second) throw IndexError("duplicate document id " + doc.id);
  }

  std::vector<DocRecord> records(corpus.size());
  if (workers <= 1 || corpus.size() < 2) {
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      records[i] = make_record(corpus[i], params, strategy);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (std::size_t i = next++; i < corpus.size(); i = next++) {
              records[i] = make_record(corpus[i], params, strategy);
            }
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  for (auto& rec : records) index.insert(std::move(rec));
  return index;
}

void save_index(const ReuseIndex& index, const std::filesystem::path& path) {
  const IndexHeader& h = index.header();
  const std::vector<std::string> ids = index.ids();

  binary::Writer head;
  head.raw(std::string_view(kMagic, 4));
  head.u32(kIndexVersion);
  head.u8(static_cast<std::uint8_t>(h.strategy));
  head.u64(h.fingerprint);
  head.u32(h.K);
  head.u32(h.n);
  head.u32(h.heads);
  head.u64(ids.size());

  std::uint64_t offset = kHeaderBytes;
  for (const auto& id : ids) offset += 2 + id.size() + 8;
  for (const auto& id : ids) {
    if (id.size() > 0xffff) throw IoError("document id too long: " + id);
    head.u16(static_cast<std::uint16_t>(id.size()));
    head.raw(id);
    head.u64(offset);
    offset += 4 + record_values(h, index.fetch(id)->length) * 8;
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(head.bytes().data()),
            static_cast<std::streamsize>(head.size()));
  for (const auto& id : ids) {
    binary::Writer rec;
    write_record_payload(rec, *index.fetch(id), h.strategy);
    out.write(reinterpret_cast<const char*>(rec.bytes().data()),
              static_cast<std::streamsize>(rec.size()));
  }
  if (!out) throw IoError("failed writing " + path.string());
}

ReuseIndex load_index(const std::filesystem::path& path) {
  IndexReader reader(path);
  ReuseIndex index(reader.header());
  for (const auto& id : reader.ids()) index.insert(DocRecord(*reader.fetch(id)));
  return index;
}

// ---------------------------------------------------------------------------

IndexReader::IndexReader(const std::filesystem::path& path) : path_(path) {
  in_.open(path, std::ios::binary);
  if (!in_) throw IoError("cannot open " + path.string());
  in_.seekg(0, std::ios::end);
  file_size_ = static_cast<std::uint64_t>(in_.tellg());
  in_.seekg(0);

  const std::size_t head_len = std::min<std::uint64_t>(kHeaderBytes, file_size_);
  auto head_bytes = read_exact(head_len);
  binary::Reader head(head_bytes);
  header_ = read_header(head);
  const std::uint64_t count = head.u64();

  for (std::uint64_t i = 0; i < count; ++i) {
    auto len_bytes = read_exact(2);
    const std::size_t id_len = binary::Reader(len_bytes).u16();
    auto entry = read_exact(id_len + 8);
    binary::Reader r(entry);
    std::string id = r.raw(id_len);
    const std::uint64_t offset = r.u64();
    if (offset >= file_size_) throw TruncationError("record offset beyond end of " + path.string());
    if (!offsets_.emplace(id, offset).second) throw IndexError("duplicate document id " + id);
    table_.emplace_back(std::move(id), offset);
  }
}

std::vector<std::uint8_t> IndexReader::read_exact(std::size_t len) const {
  std::vector<std::uint8_t> buf(len);
  in_.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(len));
  if (static_cast<std::size_t>(in_.gcount()) != len) {
    in_.clear();
    throw TruncationError("unexpected end of " + path_.string());
  }
  bytes_read_ += len;
  return buf;
}

std::shared_ptr<const DocRecord> IndexReader::fetch(const std::string& doc_id) const {
  auto it = offsets_.find(doc_id);
  if (it == offsets_.end()) return nullptr;
  std::lock_guard lock(mutex_);
  in_.clear();
  in_.seekg(static_cast<std::streamoff>(it->second));
  auto len_bytes = read_exact(4);
  const std::uint32_t d = binary::Reader(len_bytes).u32();
  const std::uint64_t payload = std::uint64_t{record_values(header_, d)} * 8;
  if (it->second + 4 + payload > file_size_) {
    throw TruncationError("record " + doc_id + " runs past end of " + path_.string());
  }
  std::vector<std::uint8_t> bytes(4 + payload);
  std::copy(len_bytes.begin(), len_bytes.end(), bytes.begin());
  auto body = read_exact(payload);
  std::copy(body.begin(), body.end(), bytes.begin() + 4);
  binary::Reader r(bytes);
  return std::make_shared<const DocRecord>(read_record_payload(r, header_, doc_id));
}

bool IndexReader::contains(const std::string& doc_id) const { return offsets_.count(doc_id) != 0; }

std::vector<std::string> IndexReader::ids() const {
  std::vector<std::string> out;
  out.reserve(table_.size());
  for (const auto& [id, _] : table_) out.push_back(id);
  return out;
}

std::uint64_t IndexReader::bytes_read() const {
  std::lock_guard lock(mutex_);
  return bytes_read_;
}

// ---------------------------------------------------------------------------

Reranker::Reranker(const ModelParams& params, const RecordSource& index)
    : params_(params), index_(index) {
  const IndexHeader& h = index.header();
  const IndexHeader expected = index_header_for(params, h.strategy);
  if (h.fingerprint != expected.fingerprint) {
    throw StalenessError("index fingerprint does not match the loaded model");
  }
  if (h.K != expected.K || h.n != expected.n || h.heads != expected.heads) {
    throw StalenessError("index dims do not match the loaded model");
  }
}

double Reranker::score_record(const Tensor& query_repr, const DocRecord& record) const {
  if (index_.header().strategy == ReuseStrategy::s1) {
    return score(query_repr, record.representation, params_).item();
  }
  return score(query_repr, std::span<const ProjectedKV>(record.projections), params_).item();
}

std::vector<ScoredDoc> Reranker::rank(std::span<const TokenId> query,
                                      std::span<const std::string> candidates,
                                      ReuseStrategy path) const {
  if (path != index_.header().strategy) {
    throw StrategyError(std::string("index holds ") + strategy_name(index_.header().strategy) +
                        " records, cannot serve the " + strategy_name(path) + " path");
  }
  std::string missing;
  std::set<std::string_view> seen;
  for (const auto& id : candidates) {
    if (!seen.insert(id).second) throw LookupError("duplicate candidate id " + id);
    if (!index_.contains(id)) missing += (missing.empty() ? "" : ", ") + id;
  }
  if (!missing.empty()) throw LookupError("candidates missing from index: " + missing);

  const Tensor query_repr = encode_query(query, params_);
  std::vector<ScoredDoc> ranked;
  ranked.reserve(candidates.size());
  for (const auto& id : candidates) {
    ranked.push_back(ScoredDoc{id, score_record(query_repr, *index_.fetch(id))});
  }
  sort_ranking(ranked);
  return ranked;
}

std::vector<ScoredDoc> rank_candidates(std::span<const TokenId> query,
                                       std::span<const std::string> candidates,
                                       const RecordSource& index, const ModelParams& params,
                                       ReuseStrategy path) {
  return Reranker(params, index).rank(query, candidates, path);
}

std::vector<ScoredDoc> rank_on_the_fly(std::span<const TokenId> query,
                                       std::span<const Document> candidates,
                                       const ModelParams& params) {
  const Tensor query_repr = encode_query(query, params);
  std::vector<ScoredDoc> ranked;
  ranked.reserve(candidates.size());
  for (const auto& doc : candidates) {
    ranked.push_back(
        ScoredDoc{doc.id, score(query_repr, encode_document(doc.tokens, params), params).item()});
  }
  sort_ranking(ranked);
  return ranked;
}

}  // namespace mores
