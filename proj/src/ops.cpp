// Copyright 2026 The mores-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mores/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>

#include "mores/errors.hpp"

namespace mores {

namespace {

// C[m×p] = A[m×k]·B[k×p]. Rows are processed four at a time so each B row is
// loaded once per block; every C element still sums over k in order.
void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
          std::size_t p) {
  std::memset(c, 0, sizeof(double) * m * p);
  constexpr std::size_t kColBlock = 64;
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    double* c0 = c + i * p;
    double* c1 = c0 + p;
    double* c2 = c1 + p;
    double* c3 = c2 + p;
    const double* a0 = a + i * k;
    const double* a1 = a0 + k;
    const double* a2 = a1 + k;
    const double* a3 = a2 + k;
    for (std::size_t j0 = 0; j0 < p; j0 += kColBlock) {
      const std::size_t j1 = std::min(p, j0 + kColBlock);
      for (std::size_t t = 0; t < k; ++t) {
        const double* bt = b + t * p;
        const double x0 = a0[t], x1 = a1[t], x2 = a2[t], x3 = a3[t];
        for (std::size_t j = j0; j < j1; ++j) {
          const double bv = bt[j];
          c0[j] += x0 * bv;
          c1[j] += x1 * bv;
          c2[j] += x2 * bv;
          c3[j] += x3 * bv;
        }
      }
    }
  }
  for (; i < m; ++i) {
    double* ci = c + i * p;
    const double* ai = a + i * k;
    for (std::size_t t = 0; t < k; ++t) {
      const double av = ai[t];
      const double* bt = b + t * p;
      for (std::size_t j = 0; j < p; ++j) ci[j] += av * bt[j];
    }
  }
}

Tensor raw_transpose(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  Tensor out({n, m});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a[i * n + j];
  }
  return out;
}

// Uncounted product for backward passes.
Tensor raw_matmul(const Tensor& a, const Tensor& b) {
  Tensor out({a.rows(), b.cols()});
  gemm(a.data(), b.data(), out.data(), a.rows(), a.cols(), b.cols());
  return out;
}

void accumulate(Tensor* target, const Tensor& delta) {
  if (target == nullptr) return;
  double* t = target->data();
  const double* d = delta.data();
  for (std::size_t i = 0; i < delta.size(); ++i) t[i] += d[i];
}

void require_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(what) + " expects a matrix, got dims " + format_dims(t.dims()));
  }
}

void require_same_dims(const Tensor& a, const Tensor& b, const char* what) {
  if (a.dims() != b.dims()) {
    throw ShapeError(std::string(what) + ": dims " + format_dims(a.dims()) + " vs " +
                     format_dims(b.dims()));
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
    throw ShapeError("matmul dimension mismatch: " + format_dims(a.dims()) + " · " +
                     format_dims(b.dims()));
  }
  const std::size_t m = a.rows(), k = a.cols(), p = b.cols();
  Tensor out({m, p});
  gemm(a.data(), b.data(), out.data(), m, k, p);
  MacCounter::add(static_cast<std::uint64_t>(m) * k * p);

  if (GradTape* tape = GradTape::active_for({&a, &b})) {
    tape->record(out, {&a, &b}, [a, b](const Tensor& g, std::span<Tensor* const> gin) {
      if (gin[0]) accumulate(gin[0], raw_matmul(g, raw_transpose(b)));
      if (gin[1]) accumulate(gin[1], raw_matmul(raw_transpose(a), g));
    });
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  require_matrix(a, "transpose");
  Tensor out = raw_transpose(a);
  if (GradTape* tape = GradTape::active_for({&a})) {
    tape->record(out, {&a}, [](const Tensor& g, std::span<Tensor* const> gin) {
      accumulate(gin[0], raw_transpose(g));
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_dims(a, b, "add");
  Tensor out = a;
  out.set_grad_handle(std::nullopt);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  if (GradTape* tape = GradTape::active_for({&a, &b})) {
    tape->record(out, {&a, &b}, [](const Tensor& g, std::span<Tensor* const> gin) {
      accumulate(gin[0], g);
      accumulate(gin[1], g);
    });
  }
  return out;
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  require_matrix(x, "add_bias");
  const std::size_t m = x.rows(), n = x.cols();
  if (bias.size() != n) {
    throw ShapeError("add_bias: bias " + format_dims(bias.dims()) + " for rows of width " +
                     std::to_string(n));
  }
  Tensor out = x;
  out.set_grad_handle(std::nullopt);
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) row[j] += bias[j];
  }
  if (GradTape* tape = GradTape::active_for({&x, &bias})) {
    tape->record(out, {&x, &bias}, [m, n](const Tensor& g, std::span<Tensor* const> gin) {
      accumulate(gin[0], g);
      if (gin[1]) {
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < n; ++j) (*gin[1])[j] += g[i * n + j];
        }
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_dims(a, b, "mul");
  Tensor out(a.dims());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  if (GradTape* tape = GradTape::active_for({&a, &b})) {
    tape->record(out, {&a, &b}, [a, b](const Tensor& g, std::span<Tensor* const> gin) {
      if (gin[0]) {
        for (std::size_t i = 0; i < g.size(); ++i) (*gin[0])[i] += g[i] * b[i];
      }
      if (gin[1]) {
        for (std::size_t i = 0; i < g.size(); ++i) (*gin[1])[i] += g[i] * a[i];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& x, double factor) {
  Tensor out(x.dims());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * factor;
  if (GradTape* tape = GradTape::active_for({&x})) {
    tape->record(out, {&x}, [factor](const Tensor& g, std::span<Tensor* const> gin) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gin[0])[i] += g[i] * factor;
    });
  }
  return out;
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.values()) total += v;
  Tensor out = Tensor::scalar(total);
  if (GradTape* tape = GradTape::active_for({&x})) {
    tape->record(out, {&x}, [](const Tensor& g, std::span<Tensor* const> gin) {
      const double gv = g[0];
      for (double& v : gin[0]->values()) v += gv;
    });
  }
  return out;
}

Tensor softmax_rows(const Tensor& x, const Tensor* mask) {
  require_matrix(x, "softmax_rows");
  const std::size_t m = x.rows(), k = x.cols();
  bool broadcast = false;
  if (mask != nullptr) {
    if (mask->size() == m * k) {
      broadcast = false;
    } else if (mask->size() == k) {
      broadcast = true;
    } else {
      throw ShapeError("softmax_rows: mask " + format_dims(mask->dims()) + " for logits " +
                       format_dims(x.dims()));
    }
  }
  Tensor out({m, k});
  for (std::size_t i = 0; i < m; ++i) {
    const double* xi = x.data() + i * k;
    const double* mi =
        mask == nullptr ? nullptr : mask->data() + (broadcast ? 0 : i * k);
    double* oi = out.data() + i * k;
    double row_max = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t j = 0; j < k; ++j) {
      if (mi != nullptr && mi[j] == 0.0) continue;
      row_max = any ? std::max(row_max, xi[j]) : xi[j];
      any = true;
    }
    if (!any) throw MaskError("softmax_rows: row " + std::to_string(i) + " is fully masked");
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (mi != nullptr && mi[j] == 0.0) {
        oi[j] = 0.0;
        continue;
      }
      oi[j] = std::exp(xi[j] - row_max);
      total += oi[j];
    }
    const double inv = 1.0 / total;
    for (std::size_t j = 0; j < k; ++j) oi[j] *= inv;
  }
  if (GradTape* tape = GradTape::active_for({&x})) {
    tape->record(out, {&x}, [out, m, k](const Tensor& g, std::span<Tensor* const> gin) {
      for (std::size_t i = 0; i < m; ++i) {
        const double* pi = out.data() + i * k;
        const double* gi = g.data() + i * k;
        double dot = 0.0;
        for (std::size_t j = 0; j < k; ++j) dot += pi[j] * gi[j];
        double* di = gin[0]->data() + i * k;
        for (std::size_t j = 0; j < k; ++j) di[j] += pi[j] * (gi[j] - dot);
      }
    });
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  require_matrix(x, "layer_norm");
  const std::size_t m = x.rows(), n = x.cols();
  if (gain.size() != n || bias.size() != n) {
    throw ShapeError("layer_norm: gain/bias " + format_dims(gain.dims()) + "/" +
                     format_dims(bias.dims()) + " for width " + std::to_string(n));
  }
  Tensor out({m, n});
  Tensor normalized({m, n});
  std::vector<double> inv_std(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double* xi = x.data() + i * n;
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += xi[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (xi[j] - mean) * (xi[j] - mean);
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      const double xh = (xi[j] - mean) * inv_std[i];
      normalized[i * n + j] = xh;
      out[i * n + j] = xh * gain[j] + bias[j];
    }
  }
  if (GradTape* tape = GradTape::active_for({&x, &gain, &bias})) {
    tape->record(out, {&x, &gain, &bias},
                 [normalized, inv_std, gain, m, n](const Tensor& g,
                                                   std::span<Tensor* const> gin) {
                   for (std::size_t i = 0; i < m; ++i) {
                     const double* gi = g.data() + i * n;
                     const double* xh = normalized.data() + i * n;
                     if (gin[1]) {
                       for (std::size_t j = 0; j < n; ++j) (*gin[1])[j] += gi[j] * xh[j];
                     }
                     if (gin[2]) {
                       for (std::size_t j = 0; j < n; ++j) (*gin[2])[j] += gi[j];
                     }
                     if (gin[0]) {
                       double mean_dxh = 0.0, mean_dxh_xh = 0.0;
                       for (std::size_t j = 0; j < n; ++j) {
                         const double dxh = gi[j] * gain[j];
                         mean_dxh += dxh;
                         mean_dxh_xh += dxh * xh[j];
                       }
                       mean_dxh /= static_cast<double>(n);
                       mean_dxh_xh /= static_cast<double>(n);
                       double* di = gin[0]->data() + i * n;
                       for (std::size_t j = 0; j < n; ++j) {
                         const double dxh = gi[j] * gain[j];
                         di[j] += inv_std[i] * (dxh - mean_dxh - xh[j] * mean_dxh_xh);
                       }
                     }
                   }
                 });
  }
  return out;
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

double gelu_value(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
}

Tensor gelu(const Tensor& x) {
  Tensor out(x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = gelu_value(x[i]);
  if (GradTape* tape = GradTape::active_for({&x})) {
    tape->record(out, {&x}, [x](const Tensor& g, std::span<Tensor* const> gin) {
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = x[i];
        const double t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
        const double d =
            0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * v * v);
        (*gin[0])[i] += g[i] * d;
      }
    });
  }
  return out;
}

Tensor gather_rows(const Tensor& table, std::span<const std::uint32_t> ids) {
  require_matrix(table, "gather_rows");
  if (ids.empty()) throw ShapeError("gather_rows: empty id list");
  const std::size_t vocab = table.rows(), n = table.cols();
  Tensor out({ids.size(), n});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= vocab) {
      throw ShapeError("gather_rows: row " + std::to_string(ids[i]) + " outside table of " +
                       std::to_string(vocab) + " rows");
    }
    std::memcpy(out.data() + i * n, table.data() + std::size_t{ids[i]} * n, sizeof(double) * n);
  }
  if (GradTape* tape = GradTape::active_for({&table})) {
    std::vector<std::uint32_t> saved(ids.begin(), ids.end());
    tape->record(out, {&table}, [saved, n](const Tensor& g, std::span<Tensor* const> gin) {
      for (std::size_t i = 0; i < saved.size(); ++i) {
        double* dst = gin[0]->data() + std::size_t{saved[i]} * n;
        for (std::size_t j = 0; j < n; ++j) dst[j] += g[i * n + j];
      }
    });
  }
  return out;
}

namespace {

// [L×(h·w)] ↔ [h×L×w] index permutation; `to_heads` picks the direction.
void permute_heads(const double* src, double* dst, std::size_t heads, std::size_t len,
                   std::size_t width, bool to_heads) {
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < len; ++i) {
      const std::size_t flat = i * heads * width + h * width;
      const std::size_t headed = (h * len + i) * width;
      if (to_heads) {
        std::memcpy(dst + headed, src + flat, sizeof(double) * width);
      } else {
        std::memcpy(dst + flat, src + headed, sizeof(double) * width);
      }
    }
  }
}

}  // namespace

Tensor split_heads(const Tensor& x, std::size_t heads) {
  require_matrix(x, "split_heads");
  const std::size_t len = x.rows(), n = x.cols();
  if (heads == 0 || n % heads != 0) {
    throw ShapeError("split_heads: width " + std::to_string(n) + " not divisible by " +
                     std::to_string(heads) + " heads");
  }
  const std::size_t width = n / heads;
  Tensor out({heads, len, width});
  permute_heads(x.data(), out.data(), heads, len, width, true);
  if (GradTape* tape = GradTape::active_for({&x})) {
    tape->record(out, {&x}, [heads, len, width](const Tensor& g, std::span<Tensor* const> gin) {
      Tensor back({len, heads * width});
      permute_heads(g.data(), back.data(), heads, len, width, false);
      accumulate(gin[0], back);
    });
  }
  return out;
}

Tensor merge_heads(const Tensor& x) {
  if (x.rank() != 3) throw ShapeError("merge_heads expects rank 3, got " + format_dims(x.dims()));
  const std::size_t heads = x.dim(0), len = x.dim(1), width = x.dim(2);
  Tensor out({len, heads * width});
  permute_heads(x.data(), out.data(), heads, len, width, false);
  if (GradTape* tape = GradTape::active_for({&x})) {
    tape->record(out, {&x}, [heads, len, width](const Tensor& g, std::span<Tensor* const> gin) {
      Tensor back({heads, len, width});
      permute_heads(g.data(), back.data(), heads, len, width, true);
      accumulate(gin[0], back);
    });
  }
  return out;
}

Tensor slice0(const Tensor& x, std::size_t index) {
  if (x.rank() < 2) throw ShapeError("slice0 expects rank ≥ 2, got " + format_dims(x.dims()));
  if (index >= x.dim(0)) {
    throw ShapeError("slice0: index " + std::to_string(index) + " outside " +
                     format_dims(x.dims()));
  }
  Dims inner(x.dims().begin() + 1, x.dims().end());
  if (x.rank() == 2) inner.insert(inner.begin(), 1);
  const std::size_t stride = x.size() / x.dim(0);
  std::vector<double> values(x.data() + index * stride, x.data() + (index + 1) * stride);
  Tensor out(std::move(inner), std::move(values));
  if (GradTape* tape = GradTape::active_for({&x})) {
    tape->record(out, {&x}, [index, stride](const Tensor& g, std::span<Tensor* const> gin) {
      double* dst = gin[0]->data() + index * stride;
      for (std::size_t i = 0; i < stride; ++i) dst[i] += g[i];
    });
  }
  return out;
}

Tensor reshape(const Tensor& x, Dims dims) {
  Tensor out(std::move(dims), std::vector<double>(x.values().begin(), x.values().end()));
  if (GradTape* tape = GradTape::active_for({&x})) {
    tape->record(out, {&x}, [](const Tensor& g, std::span<Tensor* const> gin) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gin[0])[i] += g[i];
    });
  }
  return out;
}

Tensor stack(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("stack of zero tensors");
  const Dims& inner = parts.front().dims();
  Dims dims{parts.size()};
  dims.insert(dims.end(), inner.begin(), inner.end());
  const std::size_t stride = parts.front().size();
  Tensor out(dims);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    require_same_dims(parts[i], parts.front(), "stack");
    std::memcpy(out.data() + i * stride, parts[i].data(), sizeof(double) * stride);
  }
  if (GradTape* tape = GradTape::active_for(parts)) {
    std::vector<const Tensor*> inputs;
    for (const Tensor& t : parts) inputs.push_back(&t);
    tape->record(out, inputs, [stride](const Tensor& g, std::span<Tensor* const> gin) {
      for (std::size_t i = 0; i < gin.size(); ++i) {
        if (!gin[i]) continue;
        for (std::size_t j = 0; j < stride; ++j) (*gin[i])[j] += g[i * stride + j];
      }
    });
  }
  return out;
}

Tensor bce_with_logits(const Tensor& score, double label) {
  const double s = score.item();
  const double loss = std::max(s, 0.0) - s * label + std::log1p(std::exp(-std::abs(s)));
  Tensor out = Tensor::scalar(loss);
  if (GradTape* tape = GradTape::active_for({&score})) {
    tape->record(out, {&score}, [s, label](const Tensor& g, std::span<Tensor* const> gin) {
      const double sig = s >= 0.0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s));
      (*gin[0])[0] += g[0] * (sig - label);
    });
  }
  return out;
}

}  // namespace mores
