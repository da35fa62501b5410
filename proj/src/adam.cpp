// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0

#include "adam.hpp"

#include <cmath>

namespace hydra::train {

AdamOptimizer::AdamOptimizer(std::vector<rnn::NamedParam> params,
                             AdamConfig config)
    : params_(std::move(params)), config_(config) {
  if (config_.learning_rate <= 0.0) {
    throw ConfigError("learning rate must be positive, got " +
                      format_double(config_.learning_rate));
  }
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.tensor.values().size(), 0.0);
    v_.emplace_back(p.tensor.values().size(), 0.0);
  }
}

AdamOptimizer::StepInfo AdamOptimizer::step() {
  StepInfo info;

  double norm_sq = 0.0;
  for (const auto& p : params_) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad()) {
      if (std::isnan(g)) {
        throw TrainingError("NaN gradient on parameter '" + p.name + "'");
      }
      norm_sq += g * g;
    }
  }
  info.gradient_norm = std::sqrt(norm_sq);

  double rescale = 1.0;
  if (config_.clip_norm > 0.0 && info.gradient_norm > config_.clip_norm) {
    rescale = config_.clip_norm / info.gradient_norm;
    info.clipped = true;
  }

  ++t_;
  const double bias1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));

  for (size_t i = 0; i < params_.size(); ++i) {
    auto& values = params_[i].tensor.mutable_values();
    const bool has_grad = params_[i].tensor.has_grad();
    const std::vector<double>* grad =
        has_grad ? &params_[i].tensor.grad() : nullptr;
    for (size_t j = 0; j < values.size(); ++j) {
      const double g = (grad ? (*grad)[j] : 0.0) * rescale;
      m_[i][j] = config_.beta1 * m_[i][j] + (1.0 - config_.beta1) * g;
      v_[i][j] = config_.beta2 * v_[i][j] + (1.0 - config_.beta2) * g * g;
      const double m_hat = m_[i][j] / bias1;
      const double v_hat = v_[i][j] / bias2;
      values[j] -= config_.learning_rate * m_hat /
                   (std::sqrt(v_hat) + config_.epsilon);
    }
    params_[i].tensor.zero_grad();
  }
  return info;
}

EarlyStopper::EarlyStopper(int patience, int max_epochs)
    : patience_(patience), max_epochs_(max_epochs) {
  if (patience_ < 1 || max_epochs_ < 1) {
    throw ConfigError("patience and max_epochs must be positive");
  }
}

bool EarlyStopper::observe(int epoch, double validation_loss) {
  if (!has_best_ || validation_loss < best_loss_) {
    has_best_ = true;
    best_loss_ = validation_loss;
    best_epoch_ = epoch;
    since_best_ = 0;
  } else {
    ++since_best_;
  }
  if (since_best_ >= patience_) {
    stop_reason_ = "patience";
    return true;
  }
  if (epoch >= max_epochs_) {
    stop_reason_ = "max_epochs";
    return true;
  }
  return false;
}

}  // namespace hydra::train
