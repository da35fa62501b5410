// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0
//
// ADAM with bias correction and optional global gradient-norm clipping,
// plus the patience-based early stopper.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lstm.hpp"

namespace hydra::train {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // gradients are rescaled when their global L2 norm exceeds this; 0
  // disables clipping
  double clip_norm = 1.0;
};

class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<rnn::NamedParam> params, AdamConfig config);

  struct StepInfo {
    double gradient_norm = 0.0;
    bool clipped = false;
  };

  // Applies one update from the accumulated gradients, then clears
  // them. Parameters that never saw a backward pass count as zero
  // gradient; NaN gradients abort naming the parameter.
  StepInfo step();

  std::int64_t step_count() const { return t_; }
  const std::vector<rnn::NamedParam>& params() const { return params_; }

 private:
  std::vector<rnn::NamedParam> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  AdamConfig config_;
  std::int64_t t_ = 0;
};

class EarlyStopper {
 public:
  EarlyStopper(int patience, int max_epochs);

  // Feed the validation loss of the (1-based) epoch just finished;
  // returns true when training should stop.
  bool observe(int epoch, double validation_loss);

  int best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }
  const std::string& stop_reason() const { return stop_reason_; }

 private:
  int patience_;
  int max_epochs_;
  int best_epoch_ = 0;
  double best_loss_ = 0.0;
  int since_best_ = 0;
  bool has_best_ = false;
  std::string stop_reason_;
};

}  // namespace hydra::train
