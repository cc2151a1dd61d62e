// Copyright 2026 The mores-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mores/tensor.hpp"

#include <atomic>
#include <bit>
#include <sstream>

#include "mores/errors.hpp"

namespace mores {

std::string format_dims(const Dims& dims) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i != 0) out << 'x';
    out << dims[i];
  }
  out << ']';
  return out.str();
}

namespace {

std::size_t checked_product(const Dims& dims) {
  if (dims.empty()) throw ShapeError("tensor needs at least one dimension");
  std::size_t product = 1;
  for (std::size_t extent : dims) {
    if (extent == 0) throw ShapeError("zero extent in dims " + format_dims(dims));
    product *= extent;
  }
  return product;
}

}  // namespace

Tensor::Tensor() : dims_{1}, data_(1, 0.0) {}

Tensor::Tensor(Dims dims, double fill) : dims_(std::move(dims)) {
  data_.assign(checked_product(dims_), fill);
}

Tensor::Tensor(Dims dims, std::vector<double> values)
    : dims_(std::move(dims)), data_(std::move(values)) {
  if (checked_product(dims_) != data_.size()) {
    throw ShapeError("dims " + format_dims(dims_) + " do not match " +
                     std::to_string(data_.size()) + " values");
  }
}

Tensor Tensor::scalar(double value) { return Tensor({1}, std::vector<double>{value}); }

Tensor Tensor::from_values(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged matrix literal");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(values));
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= dims_.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for dims " +
                     format_dims(dims_));
  }
  return dims_[axis];
}

double Tensor::at(std::size_t row, std::size_t col) const {
  return data_[row * dims_.back() + col];
}

double& Tensor::at(std::size_t row, std::size_t col) {
  return data_[row * dims_.back() + col];
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw ShapeError("item() on non-scalar tensor " + format_dims(dims_));
  }
  return data_[0];
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (a.dims() != b.dims()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------

namespace {

std::array<std::atomic<std::uint64_t>, kMacKindCount> g_macs{};
thread_local MacKind t_mac_kind = MacKind::other;

}  // namespace

const char* mac_kind_name(MacKind kind) {
  switch (kind) {
    case MacKind::projection: return "projection";
    case MacKind::attention_score: return "attention_score";
    case MacKind::attention_context: return "attention_context";
    case MacKind::feed_forward: return "feed_forward";
    case MacKind::scoring_head: return "scoring_head";
    case MacKind::other: return "other";
  }
  return "unknown";
}

std::uint64_t MacSnapshot::total() const {
  std::uint64_t sum = 0;
  for (auto v : by_kind) sum += v;
  return sum;
}

MacSnapshot MacSnapshot::operator-(const MacSnapshot& earlier) const {
  MacSnapshot diff;
  for (std::size_t i = 0; i < kMacKindCount; ++i) diff.by_kind[i] = by_kind[i] - earlier.by_kind[i];
  return diff;
}

void MacCounter::add(std::uint64_t macs) {
  g_macs[static_cast<std::size_t>(t_mac_kind)].fetch_add(macs, std::memory_order_relaxed);
}

std::uint64_t MacCounter::total() { return snapshot().total(); }

MacSnapshot MacCounter::snapshot() {
  MacSnapshot snap;
  for (std::size_t i = 0; i < kMacKindCount; ++i) {
    snap.by_kind[i] = g_macs[i].load(std::memory_order_relaxed);
  }
  return snap;
}

void MacCounter::reset() {
  for (auto& counter : g_macs) counter.store(0, std::memory_order_relaxed);
}

MacScope::MacScope(MacKind kind) : previous_(t_mac_kind) { t_mac_kind = kind; }
MacScope::~MacScope() { t_mac_kind = previous_; }

MacKind current_mac_kind() { return t_mac_kind; }

// ---------------------------------------------------------------------------

namespace {

std::atomic<std::uint64_t> g_next_tape_id{1};
thread_local GradTape* t_active_tape = nullptr;

bool on_tape(const Tensor& t, std::uint64_t tape_id) {
  return t.grad_handle() && t.grad_handle()->tape_id == tape_id;
}

}  // namespace

GradTape::GradTape() : id_(g_next_tape_id.fetch_add(1)) {}

void GradTape::watch(Tensor& leaf) {
  Node node;
  node.leaf = true;
  node.dims = leaf.dims();
  leaf.set_grad_handle(GradHandle{id_, static_cast<std::uint32_t>(nodes_.size())});
  nodes_.push_back(std::move(node));
}

GradTape::Recording::Recording(GradTape& tape) : previous_(t_active_tape) {
  t_active_tape = &tape;
}

GradTape::Recording::~Recording() { t_active_tape = previous_; }

GradTape* GradTape::active_for(std::initializer_list<const Tensor*> inputs) {
  GradTape* tape = t_active_tape;
  if (tape == nullptr) return nullptr;
  for (const Tensor* t : inputs) {
    if (on_tape(*t, tape->id_)) return tape;
  }
  return nullptr;
}

GradTape* GradTape::active_for(std::span<const Tensor> inputs) {
  GradTape* tape = t_active_tape;
  if (tape == nullptr) return nullptr;
  for (const Tensor& t : inputs) {
    if (on_tape(t, tape->id_)) return tape;
  }
  return nullptr;
}

void GradTape::record(Tensor& out, std::span<const Tensor* const> inputs, BackwardFn fn) {
  Node node;
  node.dims = out.dims();
  node.fn = std::move(fn);
  node.inputs.reserve(inputs.size());
  for (const Tensor* t : inputs) {
    node.inputs.push_back(on_tape(*t, id_) ? static_cast<std::int64_t>(t->grad_handle()->index)
                                           : -1);
  }
  out.set_grad_handle(GradHandle{id_, static_cast<std::uint32_t>(nodes_.size())});
  nodes_.push_back(std::move(node));
}

void GradTape::record(Tensor& out, std::initializer_list<const Tensor*> inputs, BackwardFn fn) {
  record(out, std::span<const Tensor* const>(inputs.begin(), inputs.size()), std::move(fn));
}

Gradients GradTape::backward(const Tensor& loss) const {
  if (loss.size() != 1) {
    throw TapeError("backward needs a scalar loss, got dims " + format_dims(loss.dims()));
  }
  Gradients result;
  result.tape_id_ = id_;
  result.slot_of_index_.assign(nodes_.size(), -1);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].leaf) {
      result.slot_of_index_[i] = static_cast<std::int64_t>(result.leaf_grads_.size());
      result.leaf_grads_.emplace_back(nodes_[i].dims, 0.0);
    }
  }
  if (!loss.grad_handle()) return result;  // constant loss
  if (loss.grad_handle()->tape_id != id_ || loss.grad_handle()->index >= nodes_.size()) {
    throw TapeError("loss was not recorded on this tape");
  }

  std::vector<std::optional<Tensor>> grads(nodes_.size());
  const std::size_t root = loss.grad_handle()->index;
  grads[root] = Tensor(nodes_[root].dims, 1.0);

  std::vector<Tensor*> grad_in;
  for (std::size_t i = root + 1; i-- > 0;) {
    const Node& node = nodes_[i];
    if (node.leaf || !grads[i]) continue;
    grad_in.assign(node.inputs.size(), nullptr);
    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
      const std::int64_t src = node.inputs[k];
      if (src < 0) continue;
      auto& slot = grads[static_cast<std::size_t>(src)];
      if (!slot) slot = Tensor(nodes_[static_cast<std::size_t>(src)].dims, 0.0);
      grad_in[k] = &*slot;
    }
    node.fn(*grads[i], grad_in);
    grads[i].reset();
  }

  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].leaf && grads[i]) {
      result.leaf_grads_[static_cast<std::size_t>(result.slot_of_index_[i])] =
          std::move(*grads[i]);
    }
  }
  return result;
}

const Tensor& Gradients::of(const Tensor& leaf) const {
  const auto& handle = leaf.grad_handle();
  if (!handle || handle->tape_id != tape_id_ || handle->index >= slot_of_index_.size() ||
      slot_of_index_[handle->index] < 0) {
    throw TapeError("tensor is not a watched leaf of this tape");
  }
  return leaf_grads_[static_cast<std::size_t>(slot_of_index_[handle->index])];
}

Gradients backward(const GradTape& tape, const Tensor& loss) { return tape.backward(loss); }

}  // namespace mores
