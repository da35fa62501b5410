// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lstm.hpp"

#include <cmath>

namespace hydra::rnn {

namespace {

using ad::Tensor;

std::vector<double> uniform_values(std::int64_t count, double bound,
                                   std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> v(static_cast<size_t>(count));
  for (auto& x : v) x = dist(rng);
  return v;
}

// One cell update with pre-transposed weights (Wt: [in x 4H], Ut: [H x 4H]).
std::pair<Tensor, Tensor> step_transposed(ad::Tape* tape,
                                          const LstmLayerParams& params,
                                          const Tensor& w_t, const Tensor& u_t,
                                          const Tensor& x_t,
                                          const Tensor& h_prev,
                                          const Tensor& c_prev) {
  const auto h = params.hidden_size;
  Tensor pre = ad::add(tape,
                       ad::add(tape, ad::matmul(tape, x_t, w_t),
                               ad::matmul(tape, h_prev, u_t)),
                       params.b);
  Tensor gate_i = ad::sigmoid(tape, ad::slice_cols(tape, pre, 0, h));
  Tensor gate_f = ad::sigmoid(tape, ad::slice_cols(tape, pre, h, 2 * h));
  Tensor gate_g = ad::tanh(tape, ad::slice_cols(tape, pre, 2 * h, 3 * h));
  Tensor gate_o = ad::sigmoid(tape, ad::slice_cols(tape, pre, 3 * h, 4 * h));

  Tensor c_t = ad::add(tape, ad::mul(tape, gate_f, c_prev),
                       ad::mul(tape, gate_i, gate_g));
  Tensor h_t = ad::mul(tape, gate_o, ad::tanh(tape, c_t));
  return {h_t, c_t};
}

}  // namespace

LstmLayerParams init_lstm_layer(std::int64_t input_size,
                                std::int64_t hidden_size,
                                std::mt19937_64& rng) {
  if (input_size <= 0 || hidden_size <= 0) {
    throw ConfigError("lstm layer sizes must be positive, got input " +
                      std::to_string(input_size) + ", hidden " +
                      std::to_string(hidden_size));
  }
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  LstmLayerParams p;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  p.W = Tensor::leaf({4 * hidden_size, input_size},
                     uniform_values(4 * hidden_size * input_size, bound, rng),
                     /*requires_grad=*/true);
  p.U = Tensor::leaf({4 * hidden_size, hidden_size},
                     uniform_values(4 * hidden_size * hidden_size, bound, rng),
                     /*requires_grad=*/true);
  auto bias = uniform_values(4 * hidden_size, bound, rng);
  for (std::int64_t j = hidden_size; j < 2 * hidden_size; ++j) {
    bias[static_cast<size_t>(j)] += 1.0;  // forget gate starts open
  }
  p.b = Tensor::leaf({4 * hidden_size}, std::move(bias), /*requires_grad=*/true);
  return p;
}

LstmLayerParams zero_lstm_layer(std::int64_t input_size,
                                std::int64_t hidden_size) {
  LstmLayerParams p;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  p.W = Tensor::zeros({4 * hidden_size, input_size}, true);
  p.U = Tensor::zeros({4 * hidden_size, hidden_size}, true);
  p.b = Tensor::zeros({4 * hidden_size}, true);
  return p;
}

void LstmStack::validate() const {
  if (layers.empty()) throw ConfigError("lstm stack has no layers");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw ConfigError("dropout rate must lie in [0,1), got " +
                      format_double(dropout_rate));
  }
  for (size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.input_size <= 0 || l.hidden_size <= 0) {
      throw ConfigError("lstm layer " + std::to_string(i) +
                        " has non-positive sizes");
    }
    if (i > 0 && l.input_size != layers[i - 1].hidden_size) {
      throw DimensionError("lstm layer " + std::to_string(i) + " input size " +
                           std::to_string(l.input_size) +
                           " does not match previous hidden size " +
                           std::to_string(layers[i - 1].hidden_size));
    }
  }
}

LstmStack init_lstm_stack(std::int64_t input_size,
                          const std::vector<std::int64_t>& hidden_sizes,
                          double dropout_rate, std::mt19937_64& rng) {
  LstmStack stack;
  stack.dropout_rate = dropout_rate;
  std::int64_t in = input_size;
  for (auto h : hidden_sizes) {
    stack.layers.push_back(init_lstm_layer(in, h, rng));
    in = h;
  }
  stack.validate();
  return stack;
}

LstmStack concat_stacks(const LstmStack& a, const LstmStack& b) {
  LstmStack joined;
  joined.dropout_rate = a.dropout_rate;
  joined.layers = a.layers;
  joined.layers.insert(joined.layers.end(), b.layers.begin(), b.layers.end());
  joined.validate();
  return joined;
}

void collect_stack_params(const LstmStack& stack, const std::string& prefix,
                          std::vector<NamedParam>& out) {
  for (size_t i = 0; i < stack.layers.size(); ++i) {
    const std::string base = prefix + ".layer" + std::to_string(i);
    out.push_back({base + ".W", stack.layers[i].W});
    out.push_back({base + ".U", stack.layers[i].U});
    out.push_back({base + ".b", stack.layers[i].b});
  }
}

std::pair<Tensor, Tensor> lstm_step(ad::Tape* tape,
                                    const LstmLayerParams& params,
                                    const Tensor& x_t, const Tensor& h_prev,
                                    const Tensor& c_prev) {
  const auto in_dim = x_t.rank() == 1 ? x_t.dim(0) : x_t.dim(1);
  const auto h_dim = h_prev.rank() == 1 ? h_prev.dim(0) : h_prev.dim(1);
  if (in_dim != params.input_size || h_dim != params.hidden_size ||
      c_prev.shape() != h_prev.shape()) {
    throw DimensionError(
        "lstm_step: inputs " + ad::shape_str(x_t.shape()) + ", " +
        ad::shape_str(h_prev.shape()) + ", " + ad::shape_str(c_prev.shape()) +
        " inconsistent with layer (input " + std::to_string(params.input_size) +
        ", hidden " + std::to_string(params.hidden_size) + ")");
  }
  Tensor w_t = ad::transpose(tape, params.W);
  Tensor u_t = ad::transpose(tape, params.U);
  return step_transposed(tape, params, w_t, u_t, x_t, h_prev, c_prev);
}

Tensor sample_dropout_mask(std::int64_t width, double dropout_rate,
                           std::mt19937_64& rng) {
  const double keep = 1.0 - dropout_rate;
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::vector<double> mask(static_cast<size_t>(width));
  for (auto& m : mask) m = dist(rng) < keep ? 1.0 / keep : 0.0;
  return Tensor::leaf({width}, std::move(mask));
}

std::vector<Tensor> run_sequence_batched(ad::Tape* tape, const LstmStack& stack,
                                         const std::vector<Tensor>& steps,
                                         std::mt19937_64& rng) {
  stack.validate();
  if (steps.empty()) {
    throw DimensionError("run_sequence: empty sequence (T = 0)");
  }
  const auto batch = steps[0].dim(0);
  for (const auto& s : steps) {
    if (s.rank() != 2 || s.dim(0) != batch || s.dim(1) != stack.input_size()) {
      throw DimensionError("run_sequence: step shape " + ad::shape_str(s.shape()) +
                           " does not match batch " + std::to_string(batch) +
                           " x features " + std::to_string(stack.input_size()));
    }
  }

  const size_t n_layers = stack.layers.size();
  const bool dropping = stack.training_mode && stack.dropout_rate > 0.0;

  std::vector<Tensor> w_t(n_layers), u_t(n_layers), masks;
  for (size_t l = 0; l < n_layers; ++l) {
    w_t[l] = ad::transpose(tape, stack.layers[l].W);
    u_t[l] = ad::transpose(tape, stack.layers[l].U);
  }
  if (dropping) {
    for (size_t l = 0; l + 1 < n_layers; ++l) {
      masks.push_back(sample_dropout_mask(stack.layers[l].hidden_size,
                                          stack.dropout_rate, rng));
    }
  }

  std::vector<Tensor> h(n_layers), c(n_layers);
  for (size_t l = 0; l < n_layers; ++l) {
    h[l] = Tensor::zeros({batch, stack.layers[l].hidden_size});
    c[l] = Tensor::zeros({batch, stack.layers[l].hidden_size});
  }

  std::vector<Tensor> out;
  out.reserve(steps.size());
  for (const auto& x : steps) {
    Tensor cur = x;
    for (size_t l = 0; l < n_layers; ++l) {
      auto [h_new, c_new] = step_transposed(tape, stack.layers[l], w_t[l],
                                            u_t[l], cur, h[l], c[l]);
      h[l] = h_new;
      c[l] = c_new;
      cur = h_new;
      if (dropping && l + 1 < n_layers) cur = ad::mul(tape, cur, masks[l]);
    }
    out.push_back(h[n_layers - 1]);
  }
  return out;
}

Tensor run_sequence(ad::Tape* tape, const LstmStack& stack,
                    const Tensor& inputs, std::mt19937_64& rng) {
  if (inputs.rank() != 2 || inputs.dim(0) == 0) {
    throw DimensionError("run_sequence: expected a non-empty [T x F] input, got " +
                         ad::shape_str(inputs.shape()));
  }
  const auto t_len = inputs.dim(0);
  std::vector<Tensor> steps;
  steps.reserve(static_cast<size_t>(t_len));
  for (std::int64_t t = 0; t < t_len; ++t) {
    steps.push_back(ad::slice_rows(tape, inputs, t, t + 1));
  }
  auto hidden = run_sequence_batched(tape, stack, steps, rng);
  return ad::concat(tape, hidden, 0);
}

Projection init_projection(std::int64_t hidden_size, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  Projection p;
  p.W = Tensor::leaf({3, hidden_size},
                     uniform_values(3 * hidden_size, bound, rng), true);
  p.b = Tensor::leaf({3}, uniform_values(3, bound, rng), true);
  return p;
}

Projection zero_projection(std::int64_t hidden_size) {
  Projection p;
  p.W = Tensor::zeros({3, hidden_size}, true);
  p.b = Tensor::zeros({3}, true);
  return p;
}

void collect_projection_params(const Projection& proj, const std::string& prefix,
                               std::vector<NamedParam>& out) {
  out.push_back({prefix + ".W", proj.W});
  out.push_back({prefix + ".b", proj.b});
}

Tensor linear_head(ad::Tape* tape, const Projection& proj,
                   const Tensor& h_last) {
  const auto width = h_last.rank() == 1 ? h_last.dim(0) : h_last.dim(1);
  if (width != proj.W.dim(1)) {
    throw DimensionError("linear_head: hidden state " +
                         ad::shape_str(h_last.shape()) +
                         " does not match projection " +
                         ad::shape_str(proj.W.shape()));
  }
  Tensor w_t = ad::transpose(tape, proj.W);
  return ad::add(tape, ad::matmul(tape, h_last, w_t), proj.b);
}

std::int64_t stack_param_count(const std::vector<std::int64_t>& hidden_sizes,
                               std::int64_t input_size) {
  std::int64_t total = 0;
  std::int64_t in = input_size;
  for (auto h : hidden_sizes) {
    total += 4 * h * (in + h + 1);
    in = h;
  }
  total += 3 * in + 3;
  return total;
}

}  // namespace hydra::rnn
