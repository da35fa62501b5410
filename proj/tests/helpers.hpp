// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared test utilities: finite-difference gradient oracle, an
// independent scalar LSTM step, and temp-dir helpers. Everything here is
// deliberately implementation-independent of the code under test.

#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "autodiff.hpp"

namespace testutil {

// Central finite differences of `loss_fn` w.r.t. every element of
// `param`, perturbing the live tensor in place. loss_fn must recompute
// the forward pass from current tensor values.
inline std::vector<double> finite_difference_grad(
    hydra::ad::Tensor& param, const std::function<double()>& loss_fn,
    double step = 1e-5) {
  std::vector<double> grad(param.values().size());
  auto& vals = param.mutable_values();
  for (size_t i = 0; i < vals.size(); ++i) {
    const double saved = vals[i];
    vals[i] = saved + step;
    const double up = loss_fn();
    vals[i] = saved - step;
    const double down = loss_fn();
    vals[i] = saved;
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

inline double rel_err(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Sums a tensor's entries. Also keeps the argument alive across the
// loop, unlike ranging over `expr.values()` on a temporary.
inline double value_sum(const hydra::ad::Tensor& t) {
  double s = 0.0;
  for (double v : t.values()) s += v;
  return s;
}

inline double max_rel_err(const std::vector<double>& a,
                          const std::vector<double>& b, double floor = 1e-6) {
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, rel_err(a[i], b[i], floor));
  }
  return worst;
}

// Plain-double LSTM cell, written directly from the gate equations with
// no shared code with the implementation under test. Gate blocks in
// [i, f, g, o] order; weights row-major [4H x in] / [4H x H].
inline void reference_lstm_step(const std::vector<double>& W,
                                const std::vector<double>& U,
                                const std::vector<double>& b, int in_size,
                                int hidden, const std::vector<double>& x,
                                std::vector<double>& h, std::vector<double>& c) {
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  std::vector<double> pre(4 * hidden, 0.0);
  for (int r = 0; r < 4 * hidden; ++r) {
    double acc = b[r];
    for (int k = 0; k < in_size; ++k) acc += W[r * in_size + k] * x[k];
    for (int k = 0; k < hidden; ++k) acc += U[r * hidden + k] * h[k];
    pre[r] = acc;
  }
  std::vector<double> h_new(hidden), c_new(hidden);
  for (int j = 0; j < hidden; ++j) {
    const double gi = sig(pre[j]);
    const double gf = sig(pre[hidden + j]);
    const double gg = std::tanh(pre[2 * hidden + j]);
    const double go = sig(pre[3 * hidden + j]);
    c_new[j] = gf * c[j] + gi * gg;
    h_new[j] = go * std::tanh(c_new[j]);
  }
  h = h_new;
  c = c_new;
}

inline hydra::ad::Tensor random_tensor(hydra::ad::Shape shape, std::mt19937_64& rng,
                                       double lo = -2.0, double hi = 2.0,
                                       bool requires_grad = true) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(static_cast<size_t>(hydra::ad::shape_numel(shape)));
  for (auto& x : v) x = dist(rng);
  return hydra::ad::Tensor::leaf(std::move(shape), std::move(v), requires_grad);
}

// Scoped temporary directory under the system temp path.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    auto base = std::filesystem::temp_directory_path();
    path_ = base / ("hydra_test_" + tag + "_" + std::to_string(counter_++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }

 private:
  static inline int counter_ = 0;
  std::filesystem::path path_;
};

}  // namespace testutil
