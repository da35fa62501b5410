// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint directories: a manifest.json describing the architecture,
// variable layout, normalization statistics, and hyperparameters, plus
// one parameter container per model component. A saved bundle restores
// to a TrainedModel that forecasts without retraining.

#pragma once

#include <string>

#include "evaluate.hpp"

namespace hydra::cmd {

void save_bundle(const std::string& dir, const train::TrainedModel& model,
                 const data::SplitPlan& split, std::uint64_t seed);

struct LoadedBundle {
  train::TrainedModel model;
  data::SplitPlan split;
  std::uint64_t seed = 0;
};

LoadedBundle load_bundle(const std::string& dir);

// Dataset-free forecasting for a loaded bundle: one raw physical-unit
// window, rows = window_days, columns = drivers + statics + extras in
// manifest order (flags, when the variant needs them, are derived).
metrics::QuantileTriple forecast_window(const train::TrainedModel& model,
                                        const std::string& variant,
                                        const std::string& catchment_id,
                                        const std::vector<double>& window,
                                        std::int64_t window_days);

// Input column names for a catchment under a given variant.
std::vector<std::string> forecast_columns(const train::TrainedModel& model,
                                          const std::string& variant,
                                          const std::string& catchment_id);

}  // namespace hydra::cmd
