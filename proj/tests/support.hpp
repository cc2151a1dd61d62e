// Copyright 2026 The mores-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "mores/model.hpp"
#include "mores/ops.hpp"
#include "mores/tensor.hpp"

namespace mores::test {

inline Tensor random_tensor(Dims dims, std::mt19937_64& rng, double scale = 1.0) {
  Tensor t(std::move(dims));
  std::normal_distribution<double> dist(0.0, scale);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

inline std::vector<TokenId> random_tokens(std::size_t len, std::uint32_t vocab,
                                          std::mt19937_64& rng) {
  std::uniform_int_distribution<TokenId> dist(kReservedTokens, vocab - 1);
  std::vector<TokenId> out(len);
  for (auto& t : out) t = dist(rng);
  return out;
}

// Triple loop with the same k-ascending accumulation order as matmul.
inline Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  Tensor c({a.rows(), b.cols()});
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a.at(i, k) * b.at(k, j);
      c.at(i, j) = acc;
    }
  }
  return c;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

// Tape gradient of a scalar function of x, compared with central differences.
inline double fd_gradient_error(const std::function<Tensor(const Tensor&)>& fn, Tensor x,
                                double h = 1e-6) {
  GradTape tape;
  tape.watch(x);
  Tensor loss;
  {
    GradTape::Recording rec(tape);
    loss = fn(x);
  }
  const Tensor analytic = tape.backward(loss).of(x);
  Tensor plain = x;
  plain.set_grad_handle(std::nullopt);
  double worst = 0.0;
  for (std::size_t i = 0; i < plain.size(); ++i) {
    const double saved = plain[i];
    plain[i] = saved + h;
    const double up = fn(plain).item();
    plain[i] = saved - h;
    const double down = fn(plain).item();
    plain[i] = saved;
    const double fd = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(analytic[i] - fd) / std::max(1.0, std::abs(fd)));
  }
  return worst;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("mores_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline HyperParams tiny_hp() {
  HyperParams hp;
  hp.n = 8;
  hp.heads = 2;
  hp.f = 16;
  hp.vocab_size = 24;
  hp.max_positions = 12;
  hp.M = 1;
  hp.N = 1;
  hp.K = 2;
  hp.source_layers = 3;
  return hp;
}

inline HyperParams small_hp() {
  HyperParams hp;
  hp.n = 32;
  hp.heads = 4;
  hp.f = 64;
  hp.vocab_size = 1000;
  hp.max_positions = 64;
  hp.M = 2;
  hp.N = 2;
  hp.K = 2;
  hp.source_layers = 4;
  return hp;
}

}  // namespace mores::test
