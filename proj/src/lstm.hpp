// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0
//
// LSTM cell, stacked LSTM with inter-layer dropout, and the 3-quantile
// linear projection head. Gate blocks are ordered [input, forget, cell,
// output] along the 4H axis; that order is part of the checkpoint format.

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "autodiff.hpp"

namespace hydra::rnn {

struct LstmLayerParams {
  std::int64_t input_size = 0;
  std::int64_t hidden_size = 0;
  ad::Tensor W;  // [4H x input]
  ad::Tensor U;  // [4H x H]
  ad::Tensor b;  // [4H]
};

// Uniform init in [-1/sqrt(H), 1/sqrt(H)], forget-gate bias shifted +1.
LstmLayerParams init_lstm_layer(std::int64_t input_size,
                                std::int64_t hidden_size,
                                std::mt19937_64& rng);
LstmLayerParams zero_lstm_layer(std::int64_t input_size,
                                std::int64_t hidden_size);

struct LstmStack {
  std::vector<LstmLayerParams> layers;
  double dropout_rate = 0.0;   // applied between layers only
  bool training_mode = false;  // dropout active only when true

  std::int64_t input_size() const { return layers.front().input_size; }
  std::int64_t output_size() const { return layers.back().hidden_size; }
  void validate() const;
};

LstmStack init_lstm_stack(std::int64_t input_size,
                          const std::vector<std::int64_t>& hidden_sizes,
                          double dropout_rate, std::mt19937_64& rng);

// Joins two stacks into one (their parameters are aliased, not copied).
LstmStack concat_stacks(const LstmStack& a, const LstmStack& b);

struct NamedParam {
  std::string name;
  ad::Tensor tensor;
};

void collect_stack_params(const LstmStack& stack, const std::string& prefix,
                          std::vector<NamedParam>& out);

// One cell update. x_t may be a [B x input] matrix (batched) or a rank-1
// vector; h/c must match. Returns (h_t, c_t) with the same layout.
std::pair<ad::Tensor, ad::Tensor> lstm_step(ad::Tape* tape,
                                            const LstmLayerParams& params,
                                            const ad::Tensor& x_t,
                                            const ad::Tensor& h_prev,
                                            const ad::Tensor& c_prev);

// Inverted-scaling dropout mask, one Bernoulli draw per unit; 1/keep for
// kept units, 0 for dropped ones.
ad::Tensor sample_dropout_mask(std::int64_t width, double dropout_rate,
                               std::mt19937_64& rng);

// Runs the stack over a batch of aligned sequences (time-major: one
// [B x F] matrix per step). Initial states are zero. Dropout masks are
// sampled once per call per layer boundary and held fixed across time.
// Returns the last layer's hidden state at every step.
std::vector<ad::Tensor> run_sequence_batched(ad::Tape* tape,
                                             const LstmStack& stack,
                                             const std::vector<ad::Tensor>& steps,
                                             std::mt19937_64& rng);

// Single-sequence variant: inputs [T x F] -> hidden sequence [T x H_last].
ad::Tensor run_sequence(ad::Tape* tape, const LstmStack& stack,
                        const ad::Tensor& inputs, std::mt19937_64& rng);

// Affine projection onto the three quantile outputs.
struct Projection {
  ad::Tensor W;  // [3 x H]
  ad::Tensor b;  // [3]
};

Projection init_projection(std::int64_t hidden_size, std::mt19937_64& rng);
Projection zero_projection(std::int64_t hidden_size);
void collect_projection_params(const Projection& proj,
                               const std::string& prefix,
                               std::vector<NamedParam>& out);

// h_last may be rank-1 [H] (returns [3]) or [B x H] (returns [B x 3]).
ad::Tensor linear_head(ad::Tape* tape, const Projection& proj,
                       const ad::Tensor& h_last);

// Parameter count of a stack plus projection: sum over layers of
// 4*H*(in + H + 1), plus 3*H_last + 3.
std::int64_t stack_param_count(const std::vector<std::int64_t>& hidden_sizes,
                               std::int64_t input_size);

}  // namespace hydra::rnn
