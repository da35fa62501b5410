// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Test-year evaluation (CQES, threshold coverage, crossing), the
// leave-one-year-out cross-validation driver, and the hyperparameter
// grid sweep.

#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "trainer.hpp"

namespace hydra::train {

struct PredictionRow {
  std::string catchment_id;
  Date date{};
  metrics::QuantileTriple forecast;
  double observed = 0.0;
};

struct ClimatologyRow {
  std::string catchment_id;
  Date date{};
  metrics::QuantileTriple forecast;
};

struct CatchmentYearRecord {
  std::string variant;
  std::string catchment_id;
  int year = 0;
  int fold_id = 0;
  std::int64_t n_dates = 0;
  bool cqes_defined = true;
  double cqes = 0.0;
  double coverage_q10 = 0.0;  // fraction of observations above the 10% threshold
  double coverage_q90 = 0.0;
  double crossing_fraction = 0.0;
  int climatology_fallback_days = 0;
  double sum_loss_model = 0.0;  // per-date L_tot sums, for recomputation
  double sum_loss_clim = 0.0;
};

struct FoldEvaluation {
  data::SplitPlan plan;
  std::map<std::string, std::vector<PredictionRow>> predictions;  // by variant
  std::vector<ClimatologyRow> climatology;
  std::vector<CatchmentYearRecord> records;
};

struct AggregateScores {
  std::string variant;
  double cqes_pooled = 0.0;  // 1 - sum L_tot / sum L_clim over every date
  double mean_cqes = 0.0;    // mean over defined per-catchment-year scores
  double coverage_q10 = 0.0;
  double coverage_q90 = 0.0;
  double crossing_fraction = 0.0;
  std::int64_t n_dates = 0;
  std::int64_t n_records = 0;
  std::int64_t n_undefined = 0;
};

// Scores a trained model on its fold's withheld test year, in physical
// units, against climatology fitted on that fold's training years.
FoldEvaluation evaluate_fold(const std::vector<data::CatchmentDataset>& datasets,
                             const TrainedModel& model,
                             const data::SplitPlan& plan,
                             const std::optional<data::MonthFilter>& months);

// Pooled scores per variant, recomputed from the raw per-date rows.
std::vector<AggregateScores> aggregate_scores(
    const std::vector<FoldEvaluation>& folds);

struct CrossValResult {
  std::vector<FoldEvaluation> folds;
  std::vector<std::vector<TrainingRunRecord>> fold_training_records;
  std::vector<AggregateScores> aggregates;
};

// Trains and evaluates one plan per fold. Folds are independent jobs
// seeded from (seed, fold); `jobs` bounds worker threads.
CrossValResult cross_validate(const std::vector<data::CatchmentDataset>& datasets,
                              model::Architecture arch,
                              const model::HyperParams& hp,
                              const std::vector<std::string>& extra_variables,
                              int n_folds,
                              const std::set<int>& excluded_test_years,
                              const TrainSettings& settings, std::uint64_t seed,
                              int jobs = 1);

// ---------------------------------------------------------------------------

struct GridSpec {
  std::vector<std::int64_t> hidden_sizes;
  std::vector<std::int64_t> num_layers;
  std::vector<std::int64_t> head_hidden_sizes;  // hydra only
  std::vector<std::int64_t> head_num_layers;    // hydra only
  std::vector<double> learning_rates;
  std::vector<double> dropouts;
};

// The tested grid for each architecture.
GridSpec default_grid(model::Architecture arch);

// Cartesian product in deterministic order.
std::vector<model::HyperParams> enumerate_grid(model::Architecture arch,
                                               const GridSpec& grid);

struct SweepCell {
  model::HyperParams hp;
  bool failed = false;
  std::string error;
  // mean of the per-component best validation losses
  double validation_loss = 0.0;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  int winner = -1;  // index into cells; -1 when every cell failed
  std::vector<int> validation_years;
};

// Trains every grid cell once against a fixed two-year validation
// split (no test year is withheld); failures are recorded and skipped.
SweepResult grid_sweep(const std::vector<data::CatchmentDataset>& datasets,
                       model::Architecture arch, const GridSpec& grid,
                       const std::vector<std::string>& extra_variables,
                       const std::vector<int>& validation_years,
                       const TrainSettings& settings, std::uint64_t seed);

}  // namespace hydra::train
