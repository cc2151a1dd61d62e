// Copyright 2026 The mores-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mores/checkpoint.hpp"

#include <fstream>
#include <limits>
#include <unordered_map>

#include "binary_io.hpp"
#include "mores/errors.hpp"

namespace mores {

namespace binary {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace binary

namespace {

constexpr char kMagic[] = "MORS";

void write_hyper(binary::Writer& w, const HyperParams& hp) {
  for (std::uint32_t v : {hp.n, hp.heads, hp.f, hp.vocab_size, hp.max_positions, hp.M, hp.N, hp.K,
                          hp.source_layers}) {
    w.u32(v);
  }
}

HyperParams read_hyper(binary::Reader& r) {
  HyperParams hp;
  hp.n = r.u32();
  hp.heads = r.u32();
  hp.f = r.u32();
  hp.vocab_size = r.u32();
  hp.max_positions = r.u32();
  hp.M = r.u32();
  hp.N = r.u32();
  hp.K = r.u32();
  hp.source_layers = r.u32();
  return hp;
}

template <class Params>
Checkpoint collect(const Params& params) {
  Checkpoint ckpt;
  ckpt.hp = params.hp;
  visit_params(params, [&](const std::string& name, const Tensor& t, ParamGroup) {
    ckpt.tensors.emplace_back(name, t);
  });
  return ckpt;
}

template <class Params>
void fill_from(Params& params, const Checkpoint& ckpt) {
  std::unordered_map<std::string, const Tensor*> by_name;
  for (const auto& [name, t] : ckpt.tensors) {
    if (!by_name.emplace(name, &t).second) throw IoError("duplicate tensor " + name);
  }
  std::size_t expected = 0;
  visit_params(params, [&](const std::string& name, Tensor& t, ParamGroup) {
    ++expected;
    auto it = by_name.find(name);
    if (it == by_name.end()) throw IoError("checkpoint is missing tensor " + name);
    if (it->second->dims() != t.dims()) {
      throw IoError("tensor " + name + " has dims " + format_dims(it->second->dims()) +
                    ", expected " + format_dims(t.dims()));
    }
    t = *it->second;
    t.set_grad_handle(std::nullopt);
  });
  if (expected != ckpt.tensors.size()) {
    throw IoError("checkpoint holds " + std::to_string(ckpt.tensors.size()) +
                  " tensors, model expects " + std::to_string(expected));
  }
}

}  // namespace

const Tensor& Checkpoint::get(const std::string& name) const {
  for (const auto& [key, t] : tensors) {
    if (key == name) return t;
  }
  throw IoError("checkpoint has no tensor named " + name);
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  binary::Writer w;
  w.raw(std::string_view(kMagic, 4));
  w.u32(ckpt.version);
  write_hyper(w, ckpt.hp);
  w.u32(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    if (name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw IoError("tensor name too long: " + name);
    }
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.raw(name);
    w.u8(static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.dims()) w.u64(d);
    w.f64s(t.values());
  }
  return std::move(w.bytes());
}

Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes) {
  binary::Reader r(bytes);
  if (r.remaining() < 4 || r.raw(4) != std::string_view(kMagic, 4)) {
    throw MagicError("not a checkpoint: bad magic");
  }
  Checkpoint ckpt;
  ckpt.version = r.u32();
  if (ckpt.version != kCheckpointVersion) {
    throw VersionError("unsupported checkpoint version " + std::to_string(ckpt.version));
  }
  ckpt.hp = read_hyper(r);
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t name_len = r.u16();
    std::string name = r.raw(name_len);
    const std::uint8_t rank = r.u8();
    if (rank == 0) throw IoError("tensor " + name + " has rank 0");
    Dims dims(rank);
    std::uint64_t product = 1;
    for (auto& d : dims) {
      const std::uint64_t extent = r.u64();
      if (extent == 0) throw IoError("tensor " + name + " has a zero extent");
      if (__builtin_mul_overflow(product, extent, &product) ||
          product > std::numeric_limits<std::uint64_t>::max() / 8 ||
          extent > std::numeric_limits<std::size_t>::max()) {
        throw DimOverflowError("tensor " + name + " dims overflow");
      }
      d = static_cast<std::size_t>(extent);
    }
    r.need(product * 8);
    std::vector<double> values(product);
    r.f64s(values);
    ckpt.tensors.emplace_back(std::move(name), Tensor(std::move(dims), std::move(values)));
  }
  if (r.remaining() != 0) {
    throw IoError("trailing " + std::to_string(r.remaining()) + " bytes after checkpoint");
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  binary::write_file(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(binary::read_file(path));
}

Checkpoint to_checkpoint(const ModelParams& params) { return collect(params); }
Checkpoint to_checkpoint(const RankerParams& params) { return collect(params); }

ModelParams model_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.hp.is_ranker()) {
    throw ConfigError("checkpoint holds a monolithic ranker, not a modular model");
  }
  ModelParams params = zero_model(ckpt.hp);
  fill_from(params, ckpt);
  return params;
}

RankerParams ranker_from_checkpoint(const Checkpoint& ckpt) {
  if (!ckpt.hp.is_ranker()) {
    throw ConfigError("checkpoint holds a modular model, not a monolithic ranker");
  }
  RankerParams params = zero_ranker(ckpt.hp);
  fill_from(params, ckpt);
  return params;
}

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  save_checkpoint(to_checkpoint(params), path);
}

void save_checkpoint(const RankerParams& params, const std::filesystem::path& path) {
  save_checkpoint(to_checkpoint(params), path);
}

std::uint64_t fingerprint_bytes(std::span<const std::uint8_t> bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    hash ^= b;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t model_fingerprint(const ModelParams& params) {
  return fingerprint_bytes(serialize_checkpoint(to_checkpoint(params)));
}

}  // namespace mores
