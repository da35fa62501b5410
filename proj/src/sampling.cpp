// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0

#include "sampling.hpp"

#include <algorithm>
#include <cmath>

namespace hydra::data {

namespace {

MomentPair moments(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  return {mean, std::sqrt(var)};
}

bool in_years(const std::set<int>& years, Date d) {
  return years.count(date_year(d)) != 0;
}

}  // namespace

bool is_discharge_like(const std::string& name) {
  const std::string suffix = "_m3_s";
  return name.size() >= suffix.size() &&
         name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
}

NormStats fit_normalization(const std::vector<CatchmentDataset>& datasets,
                            const std::set<int>& training_years) {
  if (datasets.empty()) throw DataError("fit_normalization: no datasets");
  if (training_years.empty()) {
    throw ConfigError("fit_normalization: empty training-year set");
  }
  NormStats stats;

  // pooled driver statistics over every catchment's training days
  for (const auto& name : datasets[0].driver_names) {
    std::vector<double> pool;
    for (const auto& ds : datasets) {
      const auto* series = [&]() -> const std::vector<double>* {
        for (size_t v = 0; v < ds.driver_names.size(); ++v) {
          if (ds.driver_names[v] == name) return &ds.drivers[v];
        }
        return nullptr;
      }();
      if (!series) {
        throw DataError("catchment " + ds.id + " lacks shared driver " + name);
      }
      for (size_t i = 0; i < series->size(); ++i) {
        if (in_years(training_years, ds.date_at(i))) pool.push_back((*series)[i]);
      }
    }
    if (pool.empty()) {
      throw DataError("no training-year data for driver " + name);
    }
    auto m = moments(pool);
    if (m.stddev <= 1e-12) {
      stats.dropped.push_back(name);
      stats.warnings.push_back("driver " + name +
                               " is constant over the training years; dropped");
      continue;
    }
    stats.drivers[name] = m;
  }

  // static attributes vary across catchments, not time
  if (!datasets[0].statics.empty()) {
    for (const auto& [name, unused] : datasets[0].statics) {
      (void)unused;
      std::vector<double> pool;
      for (const auto& ds : datasets) {
        auto it = ds.statics.find(name);
        if (it == ds.statics.end()) {
          throw DataError("catchment " + ds.id + " lacks static attribute " +
                          name);
        }
        pool.push_back(it->second);
      }
      auto m = moments(pool);
      if (m.stddev <= 1e-12) {
        stats.dropped.push_back(name);
        stats.warnings.push_back("static attribute " + name +
                                 " is constant across catchments; dropped");
        continue;
      }
      stats.statics[name] = m;
    }
  }

  // per-catchment target (log1p of discharge) and extras
  for (const auto& ds : datasets) {
    std::vector<double> pool;
    for (size_t i = 0; i < ds.length(); ++i) {
      if (in_years(training_years, ds.date_at(i))) {
        pool.push_back(std::log1p(ds.discharge[i]));
      }
    }
    if (pool.empty()) {
      throw DataError("catchment " + ds.id + " has no training-year discharge");
    }
    auto m = moments(pool);
    if (m.stddev <= 1e-12) {
      // the target cannot be dropped; fall back to unit scale
      m.stddev = 1.0;
      stats.warnings.push_back("catchment " + ds.id +
                               " has constant training discharge; using unit "
                               "target scale");
    }
    stats.target[ds.id] = m;

    for (size_t v = 0; v < ds.extra_names.size(); ++v) {
      std::vector<double> epool;
      const bool log_space = is_discharge_like(ds.extra_names[v]);
      for (size_t i = 0; i < ds.length(); ++i) {
        if (!in_years(training_years, ds.date_at(i))) continue;
        const double raw = ds.extras[v][i];
        epool.push_back(log_space ? std::log1p(raw) : raw);
      }
      auto em = moments(epool);
      if (em.stddev <= 1e-12) {
        em.stddev = 1.0;
        stats.warnings.push_back("extra " + ds.extra_names[v] +
                                 " at catchment " + ds.id +
                                 " is constant; using unit scale");
      }
      stats.extras[ds.id][ds.extra_names[v]] = em;
    }
  }
  return stats;
}

double normalize_target(const NormStats& stats, const std::string& catchment,
                        double physical) {
  auto it = stats.target.find(catchment);
  if (it == stats.target.end()) {
    throw ConfigError("no target statistics for catchment " + catchment);
  }
  return (std::log1p(physical) - it->second.mean) / it->second.stddev;
}

double denormalize_target(const NormStats& stats, const std::string& catchment,
                          double normalized) {
  auto it = stats.target.find(catchment);
  if (it == stats.target.end()) {
    throw ConfigError("no target statistics for catchment " + catchment);
  }
  const double log_value = normalized * it->second.stddev + it->second.mean;
  return std::max(0.0, std::expm1(log_value));
}

void SplitPlan::validate(const std::vector<int>& record_years) const {
  std::set<int> seen;
  seen.insert(test_year);
  for (int y : validation_years) {
    if (!seen.insert(y).second) {
      throw Error("split plan fold " + std::to_string(fold_id) +
                  ": year " + std::to_string(y) + " used twice");
    }
  }
  for (int y : training_years) {
    if (!seen.insert(y).second) {
      throw Error("split plan fold " + std::to_string(fold_id) +
                  ": year " + std::to_string(y) + " used twice");
    }
  }
  if (validation_years.size() != 2) {
    throw Error("split plan fold " + std::to_string(fold_id) +
                " must have exactly 2 validation years");
  }
  if (seen != std::set<int>(record_years.begin(), record_years.end())) {
    throw Error("split plan fold " + std::to_string(fold_id) +
                " does not cover the record exactly");
  }
}

std::vector<SplitPlan> make_split_plans(const std::vector<int>& record_years,
                                        int n_folds,
                                        const std::set<int>& excluded_test_years) {
  std::vector<int> years = record_years;
  std::sort(years.begin(), years.end());
  if (n_folds < 1) throw ConfigError("n_folds must be >= 1");
  if (years.size() < 4) {
    throw ConfigError("record too short for a train/val/test split: " +
                      std::to_string(years.size()) + " years");
  }

  std::vector<int> candidates;
  for (int y : years) {
    if (excluded_test_years.count(y) == 0) candidates.push_back(y);
  }
  if (static_cast<int>(candidates.size()) < n_folds) {
    throw ConfigError("not enough candidate test years: " +
                      std::to_string(candidates.size()) + " available, " +
                      std::to_string(n_folds) + " folds requested");
  }

  const auto n = static_cast<int>(years.size());
  std::vector<SplitPlan> plans;
  for (int f = 0; f < n_folds; ++f) {
    SplitPlan plan;
    plan.fold_id = f;
    // the last n_folds candidate years, in chronological order
    plan.test_year = candidates[candidates.size() - n_folds + f];

    const auto pos = static_cast<int>(
        std::find(years.begin(), years.end(), plan.test_year) - years.begin());
    plan.validation_years = {years[static_cast<size_t>((pos - 2 + n) % n)],
                             years[static_cast<size_t>((pos - 1 + n) % n)]};
    std::sort(plan.validation_years.begin(), plan.validation_years.end());
    for (int y : years) {
      if (y != plan.test_year && y != plan.validation_years[0] &&
          y != plan.validation_years[1]) {
        plan.training_years.push_back(y);
      }
    }
    plan.validate(years);
    plans.push_back(std::move(plan));
  }
  return plans;
}

FeatureLayout make_layout(const NormStats& stats,
                          const std::vector<std::string>& extras,
                          bool with_flags) {
  FeatureLayout layout;
  for (const auto& [name, unused] : stats.drivers) {
    (void)unused;
    layout.drivers.push_back(name);
  }
  for (const auto& [name, unused] : stats.statics) {
    (void)unused;
    layout.statics.push_back(name);
  }
  layout.extras = extras;
  std::sort(layout.extras.begin(), layout.extras.end());
  layout.with_flags = with_flags;
  return layout;
}

TrainingExample build_example(const CatchmentDataset& ds, const NormStats& stats,
                              const FeatureLayout& layout, Date forecast_date,
                              std::int64_t window_days) {
  const std::int64_t target_idx = ds.index_of(forecast_date);
  const std::int64_t first_idx = target_idx - window_days;
  if (target_idx < 0 || first_idx < 0) {
    throw DataError("window of " + std::to_string(window_days) +
                    " days before " + format_date(forecast_date) +
                    " exceeds the record of catchment " + ds.id);
  }

  TrainingExample ex;
  ex.catchment_id = ds.id;
  ex.forecast_date = forecast_date;
  ex.window_days = window_days;
  ex.feature_count = layout.feature_count();
  ex.window.resize(static_cast<size_t>(window_days * ex.feature_count));
  ex.target_physical = ds.discharge[static_cast<size_t>(target_idx)];
  ex.target_normalized = normalize_target(stats, ds.id, ex.target_physical);

  // column resolution once, outside the day loop
  std::vector<const std::vector<double>*> driver_cols;
  std::vector<const MomentPair*> driver_stats;
  for (const auto& name : layout.drivers) {
    const std::vector<double>* col = nullptr;
    for (size_t v = 0; v < ds.driver_names.size(); ++v) {
      if (ds.driver_names[v] == name) col = &ds.drivers[v];
    }
    if (!col) {
      throw ConfigError("catchment " + ds.id + " lacks driver " + name);
    }
    driver_cols.push_back(col);
    driver_stats.push_back(&stats.drivers.at(name));
  }
  std::vector<double> static_vals;
  for (const auto& name : layout.statics) {
    auto it = ds.statics.find(name);
    if (it == ds.statics.end()) {
      throw ConfigError("catchment " + ds.id + " lacks static attribute " +
                        name);
    }
    const auto& m = stats.statics.at(name);
    static_vals.push_back((it->second - m.mean) / m.stddev);
  }
  std::vector<const std::vector<double>*> extra_cols;
  std::vector<const MomentPair*> extra_stats;
  std::vector<bool> extra_log;
  for (const auto& name : layout.extras) {
    const std::vector<double>* col = nullptr;
    if (name == kDischargeColumn) {
      col = &ds.discharge;
    } else {
      col = ds.find_extra(name);
    }
    if (!col) {
      throw ConfigError("catchment " + ds.id + " lacks extra variable " + name);
    }
    extra_cols.push_back(col);
    if (name == kDischargeColumn) {
      extra_stats.push_back(&stats.target.at(ds.id));
      extra_log.push_back(true);
    } else {
      extra_stats.push_back(&stats.extras.at(ds.id).at(name));
      extra_log.push_back(is_discharge_like(name));
    }
  }

  for (std::int64_t t = 0; t < window_days; ++t) {
    const auto day = static_cast<size_t>(first_idx + t);
    double* row = ex.window.data() + t * ex.feature_count;
    std::int64_t col = 0;
    for (size_t v = 0; v < driver_cols.size(); ++v) {
      row[col++] =
          ((*driver_cols[v])[day] - driver_stats[v]->mean) /
          driver_stats[v]->stddev;
    }
    for (double s : static_vals) row[col++] = s;
    for (size_t v = 0; v < extra_cols.size(); ++v) {
      const double raw = (*extra_cols[v])[day];
      const double x = extra_log[v] ? std::log1p(raw) : raw;
      row[col++] = (x - extra_stats[v]->mean) / extra_stats[v]->stddev;
    }
    if (layout.with_flags) {
      for (size_t v = 0; v < extra_cols.size(); ++v) row[col++] = 1.0;
    }
  }
  return ex;
}

void apply_flag_masking(TrainingExample& example, const FeatureLayout& layout,
                        double mask_probability, std::mt19937_64& rng) {
  if (mask_probability < 0.0 || mask_probability > 1.0) {
    throw ConfigError("mask probability must lie in [0,1], got " +
                      format_double(mask_probability));
  }
  if (!layout.with_flags || layout.extras.empty()) return;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const bool mask = unit(rng) < mask_probability;
  if (!mask) return;

  example.masked = true;
  const auto n_extras = static_cast<std::int64_t>(layout.extras.size());
  const std::int64_t extras_at = layout.shared_count();
  for (std::int64_t t = 0; t < example.window_days; ++t) {
    double* row = example.window.data() + t * example.feature_count;
    for (std::int64_t v = 0; v < n_extras; ++v) {
      row[extras_at + v] = 0.0;             // normalized-space placeholder
      row[extras_at + n_extras + v] = 0.0;  // flag: data absent
    }
  }
}

std::vector<ExampleRef> training_pool(const std::vector<CatchmentDataset>& datasets,
                                      int catchment_index,
                                      const std::set<int>& years,
                                      std::int64_t window_days,
                                      const std::optional<MonthFilter>& months) {
  const auto& ds = datasets[static_cast<size_t>(catchment_index)];
  if (window_days < 1) throw ConfigError("window must be at least 1 day");
  if (window_days >= static_cast<std::int64_t>(ds.length())) {
    throw ConfigError("window of " + std::to_string(window_days) +
                      " days exceeds the record of catchment " + ds.id);
  }
  std::vector<ExampleRef> pool;
  for (size_t i = static_cast<size_t>(window_days); i < ds.length(); ++i) {
    const Date fd = ds.date_at(i);
    if (!years.count(date_year(fd))) continue;
    if (months) {
      int yy, mm, dd;
      civil_from_date(fd, yy, mm, dd);
      if (!months->contains(mm)) continue;
    }
    // the whole window must sit inside the allowed years
    const Date first = fd - static_cast<int>(window_days);
    bool ok = true;
    for (int wy = date_year(first); wy <= date_year(fd - 1); ++wy) {
      if (!years.count(wy)) {
        ok = false;
        break;
      }
    }
    if (ok) pool.push_back({catchment_index, fd});
  }
  return pool;
}

std::vector<ExampleRef> evaluation_pool(const std::vector<CatchmentDataset>& datasets,
                                        int catchment_index,
                                        const std::set<int>& years,
                                        std::int64_t window_days,
                                        const std::optional<MonthFilter>& months) {
  const auto& ds = datasets[static_cast<size_t>(catchment_index)];
  std::vector<ExampleRef> pool;
  for (size_t i = static_cast<size_t>(window_days); i < ds.length(); ++i) {
    const Date fd = ds.date_at(i);
    if (!years.count(date_year(fd))) continue;
    if (months) {
      int yy, mm, dd;
      civil_from_date(fd, yy, mm, dd);
      if (!months->contains(mm)) continue;
    }
    pool.push_back({catchment_index, fd});
  }
  return pool;
}

EpochSampler::EpochSampler(std::vector<std::vector<ExampleRef>> pools,
                           std::int64_t batch_size, std::mt19937_64 rng)
    : pools_(std::move(pools)),
      cursor_(pools_.size(), 0),
      batch_size_(batch_size),
      rng_(rng) {
  if (batch_size_ < 1) throw ConfigError("batch size must be >= 1");
  for (auto& pool : pools_) {
    std::shuffle(pool.begin(), pool.end(), rng_);
  }
}

std::optional<Batch> EpochSampler::next() {
  std::vector<size_t> open;
  for (size_t c = 0; c < pools_.size(); ++c) {
    if (cursor_[c] < pools_[c].size()) open.push_back(c);
  }
  if (open.empty()) return std::nullopt;

  std::uniform_int_distribution<size_t> pick(0, open.size() - 1);
  const size_t c = open[pick(rng_)];

  Batch batch;
  batch.catchment = static_cast<int>(c);
  const size_t take = std::min(static_cast<size_t>(batch_size_),
                               pools_[c].size() - cursor_[c]);
  batch.examples.assign(pools_[c].begin() + static_cast<std::ptrdiff_t>(cursor_[c]),
                        pools_[c].begin() + static_cast<std::ptrdiff_t>(cursor_[c] + take));
  cursor_[c] += take;
  return batch;
}

}  // namespace hydra::data
