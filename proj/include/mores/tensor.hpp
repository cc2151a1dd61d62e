// Copyright 2026 The mores-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mores {

using Dims = std::vector<std::size_t>;

std::string format_dims(const Dims& dims);

// Position of a tensor on a specific GradTape.
struct GradHandle {
  std::uint64_t tape_id = 0;
  std::uint32_t index = 0;
};

/// Dense row-major array of doubles. Every extent is at least one; a scalar
/// has dims {1}.
class Tensor {
 public:
  Tensor();
  explicit Tensor(Dims dims, double fill = 0.0);
  Tensor(Dims dims, std::vector<double> values);

  static Tensor scalar(double value);
  static Tensor from_values(std::initializer_list<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  const Dims& dims() const noexcept { return dims_; }
  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t rows() const { return dim(0); }
  std::size_t cols() const { return dim(1); }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }
  const double* data() const noexcept { return data_.data(); }
  double* data() noexcept { return data_.data(); }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double at(std::size_t row, std::size_t col) const;
  double& at(std::size_t row, std::size_t col);
  /// Value of a single-element tensor.
  double item() const;

  const std::optional<GradHandle>& grad_handle() const noexcept { return grad_; }
  void set_grad_handle(std::optional<GradHandle> handle) noexcept { grad_ = handle; }

 private:
  Dims dims_;
  std::vector<double> data_;
  std::optional<GradHandle> grad_;
};

/// Same dims and identical bit patterns in every element.
bool bitwise_equal(const Tensor& a, const Tensor& b);

// ---------------------------------------------------------------------------
// Multiply-accumulate accounting.

enum class MacKind : std::uint8_t {
  projection,         // Q/K/V/output projections
  attention_score,    // Q·Kᵀ per head
  attention_context,  // softmax(·)·V per head
  feed_forward,
  scoring_head,
  other,
};
inline constexpr std::size_t kMacKindCount = 6;

const char* mac_kind_name(MacKind kind);

struct MacSnapshot {
  std::array<std::uint64_t, kMacKindCount> by_kind{};

  std::uint64_t total() const;
  std::uint64_t operator[](MacKind kind) const {
    return by_kind[static_cast<std::size_t>(kind)];
  }
  MacSnapshot operator-(const MacSnapshot& earlier) const;
};

/// Process-wide count of scalar multiply-accumulates performed by matmul.
/// Counts are attributed to the MacKind of the innermost MacScope on the
/// calling thread (MacKind::other outside any scope).
class MacCounter {
 public:
  static void add(std::uint64_t macs);
  static std::uint64_t total();
  static MacSnapshot snapshot();
  static void reset();
};

class MacScope {
 public:
  explicit MacScope(MacKind kind);
  ~MacScope();
  MacScope(const MacScope&) = delete;
  MacScope& operator=(const MacScope&) = delete;

 private:
  MacKind previous_;
};

MacKind current_mac_kind();

// ---------------------------------------------------------------------------
// Reverse-mode differentiation.

class Gradients;

/// Records differentiable operations whose inputs are watched (directly or
/// transitively) while a Recording for this tape is active on the thread.
/// One tape belongs to one training step; it is not thread-safe.
class GradTape {
 public:
  using BackwardFn =
      std::function<void(const Tensor& grad_out, std::span<Tensor* const> grad_in)>;

  GradTape();
  GradTape(const GradTape&) = delete;
  GradTape& operator=(const GradTape&) = delete;

  std::uint64_t id() const noexcept { return id_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }

  /// Registers `leaf` as a differentiable input and stamps its handle.
  void watch(Tensor& leaf);

  /// Makes the tape the recording target for operations on this thread.
  class Recording {
   public:
    explicit Recording(GradTape& tape);
    ~Recording();
    Recording(const Recording&) = delete;
    Recording& operator=(const Recording&) = delete;

   private:
    GradTape* previous_;
  };

  /// Active tape if any input carries a handle from it, else nullptr.
  static GradTape* active_for(std::initializer_list<const Tensor*> inputs);
  static GradTape* active_for(std::span<const Tensor> inputs);

  /// Appends a node producing `out`. grad_in[i] is null for inputs that are
  /// not on this tape.
  void record(Tensor& out, std::span<const Tensor* const> inputs, BackwardFn fn);
  void record(Tensor& out, std::initializer_list<const Tensor*> inputs, BackwardFn fn);

  Gradients backward(const Tensor& loss) const;

 private:
  struct Node {
    bool leaf = false;
    Dims dims;
    std::vector<std::int64_t> inputs;
    BackwardFn fn;
  };

  std::uint64_t id_;
  std::vector<Node> nodes_;
};

/// Leaf gradients produced by GradTape::backward.
class Gradients {
 public:
  /// Gradient for a watched leaf; zeros if the loss does not depend on it.
  const Tensor& of(const Tensor& leaf) const;
  std::size_t leaf_count() const noexcept { return leaf_grads_.size(); }

 private:
  friend class GradTape;
  std::uint64_t tape_id_ = 0;
  std::vector<std::int64_t> slot_of_index_;
  std::vector<Tensor> leaf_grads_;
};

/// Gradients of a scalar `loss` with respect to every leaf watched on `tape`.
/// A loss without a handle is constant and yields all-zero gradients; a loss
/// from another tape or a non-scalar loss raises TapeError.
Gradients backward(const GradTape& tape, const Tensor& loss);

}  // namespace mores
