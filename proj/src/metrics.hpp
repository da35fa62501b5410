// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Quantile (pinball) loss, the equally-weighted three-quantile total
// loss, day-of-year climatology, the Cumulative Quantile Efficiency
// Score, and threshold-coverage metrics. Everything here is a pure
// function over plain doubles except the tape-building training loss.

#pragma once

#include <map>
#include <vector>

#include "autodiff.hpp"
#include "common.hpp"

namespace hydra::metrics {

inline constexpr double kQuantileLevels[3] = {0.1, 0.5, 0.9};

struct QuantileTriple {
  double q10 = 0.0;
  double q50 = 0.0;
  double q90 = 0.0;
};

// Pinball loss: (tau-1)(y - y_hat) when y < y_hat, tau(y - y_hat)
// otherwise (the y == y_hat boundary sits in the second branch).
double quantile_loss(double tau, double y, double y_hat);

// Mean of the three pinball losses at 10/50/90%.
double cumulative_quantile_loss(double y, const QuantileTriple& forecast);

// Empirical quantile by sorted-order linear interpolation.
double empirical_quantile(std::vector<double> values, double tau);

// Per-catchment climatology: empirical 10/50/90% quantiles of the
// training observations for each calendar day (Feb 29 merged with
// Feb 28). Days absent from the training record fall back to the
// nearest covered day-of-year; those days are listed for reporting.
class Climatology {
 public:
  static Climatology fit(const std::vector<Date>& dates,
                         const std::vector<double>& values);

  const QuantileTriple& at(Date d) const;
  const std::vector<int>& fallback_days() const { return fallback_days_; }

 private:
  std::vector<QuantileTriple> table_;  // indexed by day-of-year - 1
  std::vector<int> fallback_days_;
};

// 1 - mean L_tot(model) / mean L_tot(climatology) over aligned series.
// Throws UndefinedScoreError when the climatology loss is zero.
double cqes(const std::vector<double>& observations,
            const std::vector<QuantileTriple>& forecasts,
            const std::vector<QuantileTriple>& climatology);

double mean_cumulative_loss(const std::vector<double>& observations,
                            const std::vector<QuantileTriple>& forecasts);

// Fraction of observations strictly greater than the given thresholds.
double empirical_coverage(const std::vector<double>& observations,
                          const std::vector<double>& thresholds);

// Fraction of forecasts whose 10% threshold exceeds the 90% threshold.
double crossing_fraction(const std::vector<QuantileTriple>& forecasts);

// Tape-building total quantile loss for training: predictions [B x 3]
// against targets [B x 1], averaged over quantiles and batch.
ad::Tensor pinball_total_loss(ad::Tape* tape, const ad::Tensor& predictions,
                              const ad::Tensor& targets);

}  // namespace hydra::metrics
