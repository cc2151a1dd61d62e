// Copyright 2026 The mores-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mores/model.hpp"

namespace mores {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Header plus named tensors, in file order.
///
/// File layout (all integers little-endian):
///   "MORS" | u32 version | u32×9 (n, heads, f, vocab_size, max_positions,
///   M, N, K, source_layers) | u32 tensor_count | per tensor: u16 name_len,
///   name bytes, u8 rank, rank×u64 dims, product(dims)×f64.
struct Checkpoint {
  HyperParams hp;
  std::uint32_t version = kCheckpointVersion;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor& get(const std::string& name) const;
};

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);

/// Throws MagicError, VersionError, TruncationError or DimOverflowError on
/// malformed input.
Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint to_checkpoint(const ModelParams& params);
Checkpoint to_checkpoint(const RankerParams& params);
ModelParams model_from_checkpoint(const Checkpoint& ckpt);
RankerParams ranker_from_checkpoint(const Checkpoint& ckpt);

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
void save_checkpoint(const RankerParams& params, const std::filesystem::path& path);

/// 64-bit FNV-1a.
std::uint64_t fingerprint_bytes(std::span<const std::uint8_t> bytes);

/// Fingerprint of the model's serialized checkpoint bytes.
std::uint64_t model_fingerprint(const ModelParams& params);

}  // namespace mores
