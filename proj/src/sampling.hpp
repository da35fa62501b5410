// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Normalization statistics, cross-validation split plans, training
// example/window construction, the per-catchment batch sampler, and
// flag masking for optionally-available variables.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "autodiff.hpp"
#include "dataset.hpp"

namespace hydra::data {

struct MomentPair {
  double mean = 0.0;
  double stddev = 1.0;
};

// Fitted on training years only. Shared drivers and static attributes
// are z-scored globally; discharge-like series (the target, and any
// extra ending in "_m3_s") are log1p-transformed then z-scored per
// catchment.
struct NormStats {
  std::map<std::string, MomentPair> drivers;              // pooled
  std::map<std::string, MomentPair> statics;              // across catchments
  std::map<std::string, MomentPair> target;               // per catchment id
  std::map<std::string, std::map<std::string, MomentPair>> extras;
  std::vector<std::string> dropped;  // constant variables, excluded
  std::vector<std::string> warnings;
};

NormStats fit_normalization(const std::vector<CatchmentDataset>& datasets,
                            const std::set<int>& training_years);

bool is_discharge_like(const std::string& name);

double normalize_target(const NormStats& stats, const std::string& catchment,
                        double physical);
// Inverse transform; clamped at zero since discharge is non-negative.
double denormalize_target(const NormStats& stats, const std::string& catchment,
                          double normalized);

// ---------------------------------------------------------------------------

struct SplitPlan {
  int fold_id = 0;
  int test_year = 0;
  std::vector<int> validation_years;  // exactly 2
  std::vector<int> training_years;    // the remainder of the record

  std::set<int> training_set() const {
    return {training_years.begin(), training_years.end()};
  }
  void validate(const std::vector<int>& record_years) const;
};

// One plan per fold. Test years are the last n_folds years of the
// record (minus excluded ones); validation years are the two record
// years cyclically preceding each test year.
std::vector<SplitPlan> make_split_plans(const std::vector<int>& record_years,
                                        int n_folds,
                                        const std::set<int>& excluded_test_years = {});

// ---------------------------------------------------------------------------

// Which columns a model consumes, in feature order: shared drivers,
// static attributes, extras, then (flag models only) one 0/1 flag per
// extra. Names exclude variables dropped during normalization.
struct FeatureLayout {
  std::vector<std::string> drivers;
  std::vector<std::string> statics;
  std::vector<std::string> extras;
  bool with_flags = false;

  std::int64_t shared_count() const {
    return static_cast<std::int64_t>(drivers.size() + statics.size());
  }
  std::int64_t feature_count() const {
    return shared_count() +
           static_cast<std::int64_t>(extras.size() * (with_flags ? 2 : 1));
  }
};

FeatureLayout make_layout(const NormStats& stats,
                          const std::vector<std::string>& extras,
                          bool with_flags);

struct TrainingExample {
  std::string catchment_id;
  Date forecast_date{};
  std::int64_t window_days = 0;
  std::int64_t feature_count = 0;
  std::vector<double> window;  // row-major [window_days x feature_count]
  double target_normalized = 0.0;
  double target_physical = 0.0;
  bool masked = false;  // flag layouts: extras replaced by the placeholder
};

// Builds the normalized input window ending the day before
// forecast_date; the target is the discharge on forecast_date itself.
// For flag layouts all flags start at 1 (data present).
TrainingExample build_example(const CatchmentDataset& ds, const NormStats& stats,
                              const FeatureLayout& layout, Date forecast_date,
                              std::int64_t window_days);

// Per-example whole-window masking: with probability mask_probability
// every extra column is replaced by the placeholder (0 in normalized
// space) and its flag column by 0.
void apply_flag_masking(TrainingExample& example, const FeatureLayout& layout,
                        double mask_probability, std::mt19937_64& rng);

// ---------------------------------------------------------------------------

struct ExampleRef {
  int catchment = 0;
  Date forecast_date{};
};

struct MonthFilter {
  int first_month = 1;
  int last_month = 12;
  bool contains(int month) const {
    if (first_month <= last_month) {
      return month >= first_month && month <= last_month;
    }
    return month >= first_month || month <= last_month;  // wraps year end
  }
};

// Forecast dates whose full window and target sit inside the given
// years (training pools). Throws when the window exceeds the history.
std::vector<ExampleRef> training_pool(const std::vector<CatchmentDataset>& datasets,
                                      int catchment_index,
                                      const std::set<int>& years,
                                      std::int64_t window_days,
                                      const std::optional<MonthFilter>& months);

// Forecast dates inside the given years; the window may reach back into
// earlier history (evaluation pools).
std::vector<ExampleRef> evaluation_pool(const std::vector<CatchmentDataset>& datasets,
                                        int catchment_index,
                                        const std::set<int>& years,
                                        std::int64_t window_days,
                                        const std::optional<MonthFilter>& months);

// One epoch of batches: each batch holds up to batch_size forecast
// dates from a single randomly chosen catchment, sampled without
// replacement; the epoch ends when every pool is exhausted.
struct Batch {
  int catchment = 0;
  std::vector<ExampleRef> examples;
};

class EpochSampler {
 public:
  EpochSampler(std::vector<std::vector<ExampleRef>> pools,
               std::int64_t batch_size, std::mt19937_64 rng);
  std::optional<Batch> next();

 private:
  std::vector<std::vector<ExampleRef>> pools_;
  std::vector<size_t> cursor_;
  std::int64_t batch_size_;
  std::mt19937_64 rng_;
};

}  // namespace hydra::data
