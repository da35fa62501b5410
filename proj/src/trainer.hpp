// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Training orchestration: epoch loop over catchment-homogeneous batches
// with ADAM and early stopping, per-architecture batch assembly, and
// the two-phase hydra protocol (body + multi-catchment head jointly,
// then per-catchment heads against the frozen body).

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adam.hpp"
#include "architectures.hpp"
#include "metrics.hpp"
#include "sampling.hpp"

namespace hydra::train {

struct TrainSettings {
  std::int64_t window_days = 60;
  std::int64_t batch_size = 64;
  int max_epochs = 200;
  int patience = 20;
  double clip_norm = 1.0;
  double mask_probability = 0.5;  // flag architecture only
  std::optional<data::MonthFilter> months;
  bool precompute_encodings = true;  // hydra phase 2
};

struct EpochRecord {
  double training_loss = 0.0;
  double validation_loss = 0.0;
};

struct TrainingRunRecord {
  std::string component;  // "model", "model.<id>", "body+multi_head", "head.<id>"
  std::vector<EpochRecord> epochs;
  std::string stop_reason;  // "patience", "max_epochs", or "diverged"
  int best_epoch = 0;
  double best_validation_loss = 0.0;
  int clip_events = 0;
  int total_batches = 0;
  std::uint64_t seed = 0;
  bool diverged = false;
  // informational only; excluded from byte-identity guarantees
  double wall_clock_seconds = 0.0;
};

// A fully trained run: the model(s), the statistics they were trained
// under, and everything needed to forecast physical-unit quantiles.
struct TrainedModel {
  model::Architecture arch = model::Architecture::kMultiNoQ;
  model::HyperParams hp;
  data::NormStats stats;
  TrainSettings settings;
  std::vector<std::string> extra_variables;

  std::optional<model::BaselineModel> global_model;           // multi/flag
  std::map<std::string, model::BaselineModel> per_catchment;  // single_catchment
  std::optional<model::HydraModel> hydra;

  // Report/evaluation variants this run supports: the architecture name
  // for plain models, "flag_gauged"/"flag_ungauged" for flag runs, and
  // "hydra_multi_head"/"hydra_single_head" for hydra runs.
  std::vector<std::string> variants() const;

  // Batched next-day quantile forecasts in physical units, evaluation
  // mode. Refs may mix catchments.
  std::vector<metrics::QuantileTriple> predict(
      const std::vector<data::CatchmentDataset>& datasets,
      const std::vector<data::ExampleRef>& refs,
      const std::string& variant) const;

  // True when this variant can forecast the given catchment (a hydra
  // single-head variant needs that catchment's head).
  bool covers(const std::string& variant, const std::string& catchment_id) const;
};

struct TrainResult {
  TrainedModel model;
  std::vector<TrainingRunRecord> records;
};

// Trains one architecture under one split. Dispatches to the two-phase
// protocol for the hydra architecture.
TrainResult train_model(const std::vector<data::CatchmentDataset>& datasets,
                        model::Architecture arch, const model::HyperParams& hp,
                        const std::vector<std::string>& extra_variables,
                        const data::SplitPlan& split,
                        const TrainSettings& settings, std::uint64_t seed);

// Phase 1 only (body + multi-catchment head).
TrainResult train_hydra_phase1(const std::vector<data::CatchmentDataset>& datasets,
                               const model::HyperParams& hp,
                               const data::SplitPlan& split,
                               const TrainSettings& settings,
                               std::uint64_t seed);

// Phase 2: adds and trains per-catchment heads on the frozen body.
// Requires a phase-1 result; appends one record per head. Heads are
// independent jobs with per-catchment seeds, so results do not depend
// on scheduling; only_catchments restricts which heads are built
// (nullopt trains every catchment that supplies an extra variable).
void train_hydra_phase2(
    TrainResult& phase1, const std::vector<data::CatchmentDataset>& datasets,
    const std::vector<std::string>& extra_variables,
    const data::SplitPlan& split, const TrainSettings& settings,
    std::uint64_t seed,
    const std::optional<std::set<std::string>>& only_catchments = std::nullopt);

// ---------------------------------------------------------------------------
// Lower-level pieces shared with tests.

// Row-major examples packed into time-major [B x F] step tensors.
std::vector<ad::Tensor> pack_steps(const std::vector<data::TrainingExample>& examples);
ad::Tensor pack_targets(const std::vector<data::TrainingExample>& examples);

// Forces the flagged-missing state (placeholder values, flags 0).
void force_flag_mask(data::TrainingExample& example,
                     const data::FeatureLayout& layout);

// The generic epoch loop. batch_loss must return the scalar mean total
// quantile loss of the batch; `training` tells it whether to apply
// training-time stochasticity (dropout, flag masking).
using BatchLossFn = std::function<ad::Tensor(
    ad::Tape* tape, const data::Batch& batch, std::mt19937_64& model_rng,
    bool training)>;

TrainingRunRecord run_training_loop(
    const std::vector<std::vector<data::ExampleRef>>& train_pools,
    const std::vector<data::Batch>& validation_batches, BatchLossFn batch_loss,
    const std::function<void(bool)>& set_training, AdamOptimizer& optimizer,
    const TrainSettings& settings, std::uint64_t seed,
    const std::string& component);

// Validation batches in deterministic order (catchment by catchment).
std::vector<data::Batch> make_validation_batches(
    const std::vector<data::CatchmentDataset>& datasets,
    const std::set<int>& validation_years, const TrainSettings& settings);

}  // namespace hydra::train
