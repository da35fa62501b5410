// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0

#include "evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace hydra::train {

namespace {

struct DateKey {
  std::string catchment_id;
  std::int32_t serial;
  bool operator<(const DateKey& o) const {
    return catchment_id != o.catchment_id ? catchment_id < o.catchment_id
                                          : serial < o.serial;
  }
};

struct RunningSums {
  double loss_model = 0.0;
  double loss_clim = 0.0;
  double exceed_q10 = 0.0;
  double exceed_q90 = 0.0;
  double crossed = 0.0;
  std::int64_t n_dates = 0;
};

}  // namespace

FoldEvaluation evaluate_fold(const std::vector<data::CatchmentDataset>& datasets,
                             const TrainedModel& model,
                             const data::SplitPlan& plan,
                             const std::optional<data::MonthFilter>& months) {
  FoldEvaluation fold;
  fold.plan = plan;

  const std::set<int> test_years{plan.test_year};
  const auto training_years = plan.training_set();

  // climatology per catchment, training years only
  std::map<std::string, metrics::Climatology> climatologies;
  for (const auto& ds : datasets) {
    std::vector<Date> dates;
    std::vector<double> values;
    for (size_t i = 0; i < ds.length(); ++i) {
      const Date d = ds.date_at(i);
      if (training_years.count(date_year(d))) {
        dates.push_back(d);
        values.push_back(ds.discharge[i]);
      }
    }
    climatologies.emplace(ds.id, metrics::Climatology::fit(dates, values));
  }

  // per-catchment test pools, shared by every variant
  std::vector<std::vector<data::ExampleRef>> pools(datasets.size());
  for (size_t c = 0; c < datasets.size(); ++c) {
    pools[c] = data::evaluation_pool(datasets, static_cast<int>(c), test_years,
                                     model.settings.window_days, months);
    const auto& ds = datasets[c];
    const auto& clim = climatologies.at(ds.id);
    for (const auto& ref : pools[c]) {
      fold.climatology.push_back({ds.id, ref.forecast_date,
                                  clim.at(ref.forecast_date)});
    }
  }

  for (const auto& variant : model.variants()) {
    auto& rows = fold.predictions[variant];
    for (size_t c = 0; c < datasets.size(); ++c) {
      const auto& ds = datasets[c];
      if (!model.covers(variant, ds.id) || pools[c].empty()) continue;

      auto triples = model.predict(datasets, pools[c], variant);

      std::vector<double> obs, q10s, q90s;
      std::vector<metrics::QuantileTriple> clim_triples;
      const auto& clim = climatologies.at(ds.id);
      for (size_t i = 0; i < pools[c].size(); ++i) {
        const Date d = pools[c][i].forecast_date;
        const double observed =
            ds.discharge[static_cast<size_t>(ds.index_of(d))];
        rows.push_back({ds.id, d, triples[i], observed});
        obs.push_back(observed);
        q10s.push_back(triples[i].q10);
        q90s.push_back(triples[i].q90);
        clim_triples.push_back(clim.at(d));
      }

      CatchmentYearRecord rec;
      rec.variant = variant;
      rec.catchment_id = ds.id;
      rec.year = plan.test_year;
      rec.fold_id = plan.fold_id;
      rec.n_dates = static_cast<std::int64_t>(obs.size());
      rec.coverage_q10 = metrics::empirical_coverage(obs, q10s);
      rec.coverage_q90 = metrics::empirical_coverage(obs, q90s);
      rec.crossing_fraction = metrics::crossing_fraction(triples);
      rec.climatology_fallback_days =
          static_cast<int>(clim.fallback_days().size());
      rec.sum_loss_model =
          metrics::mean_cumulative_loss(obs, triples) * static_cast<double>(obs.size());
      rec.sum_loss_clim = metrics::mean_cumulative_loss(obs, clim_triples) *
                          static_cast<double>(obs.size());
      try {
        rec.cqes = metrics::cqes(obs, triples, clim_triples);
        rec.cqes_defined = true;
      } catch (const UndefinedScoreError&) {
        rec.cqes = std::nan("");
        rec.cqes_defined = false;  // reported, not dropped
      }
      fold.records.push_back(std::move(rec));
    }
  }
  return fold;
}

std::vector<AggregateScores> aggregate_scores(
    const std::vector<FoldEvaluation>& folds) {
  // climatology rows indexed once; predictions joined against them so
  // the aggregates are recomputed from raw per-date data
  std::map<DateKey, metrics::QuantileTriple> clim;
  for (const auto& fold : folds) {
    for (const auto& row : fold.climatology) {
      clim[{row.catchment_id, row.date.serial}] = row.forecast;
    }
  }

  std::map<std::string, RunningSums> sums;
  for (const auto& fold : folds) {
    for (const auto& [variant, rows] : fold.predictions) {
      auto& s = sums[variant];
      for (const auto& row : rows) {
        const auto it = clim.find({row.catchment_id, row.date.serial});
        if (it == clim.end()) {
          throw Error("no climatology row for " + row.catchment_id + " on " +
                      format_date(row.date));
        }
        s.n_dates += 1;
        s.loss_model +=
            metrics::cumulative_quantile_loss(row.observed, row.forecast);
        s.loss_clim +=
            metrics::cumulative_quantile_loss(row.observed, it->second);
        if (row.observed > row.forecast.q10) s.exceed_q10 += 1.0;
        if (row.observed > row.forecast.q90) s.exceed_q90 += 1.0;
        if (row.forecast.q10 > row.forecast.q90) s.crossed += 1.0;
      }
    }
  }

  std::vector<AggregateScores> out;
  for (const auto& [variant, s] : sums) {
    AggregateScores agg;
    agg.variant = variant;
    agg.n_dates = s.n_dates;
    const double n = static_cast<double>(s.n_dates);
    agg.cqes_pooled =
        s.loss_clim > 0.0 ? 1.0 - s.loss_model / s.loss_clim : std::nan("");
    agg.coverage_q10 = s.exceed_q10 / n;
    agg.coverage_q90 = s.exceed_q90 / n;
    agg.crossing_fraction = s.crossed / n;

    double total = 0.0;
    std::int64_t defined = 0;
    for (const auto& fold : folds) {
      for (const auto& rec : fold.records) {
        if (rec.variant != variant) continue;
        agg.n_records += 1;
        if (rec.cqes_defined) {
          total += rec.cqes;
          defined += 1;
        } else {
          agg.n_undefined += 1;
        }
      }
    }
    agg.mean_cqes =
        defined > 0 ? total / static_cast<double>(defined) : std::nan("");
    out.push_back(agg);
  }
  return out;
}

CrossValResult cross_validate(const std::vector<data::CatchmentDataset>& datasets,
                              model::Architecture arch,
                              const model::HyperParams& hp,
                              const std::vector<std::string>& extra_variables,
                              int n_folds,
                              const std::set<int>& excluded_test_years,
                              const TrainSettings& settings, std::uint64_t seed,
                              int jobs) {
  const auto years = data::common_complete_years(datasets);
  auto plans = data::make_split_plans(years, n_folds, excluded_test_years);

  CrossValResult result;
  result.folds.resize(plans.size());
  result.fold_training_records.resize(plans.size());

  std::vector<std::exception_ptr> errors(plans.size());
  auto run_fold = [&](size_t f) {
    try {
      const auto fold_seed = label_seed(seed, "fold", plans[f].fold_id);
      auto trained = train_model(datasets, arch, hp, extra_variables, plans[f],
                                 settings, fold_seed);
      result.folds[f] =
          evaluate_fold(datasets, trained.model, plans[f], settings.months);
      result.fold_training_records[f] = std::move(trained.records);
    } catch (...) {
      errors[f] = std::current_exception();
    }
  };

  if (jobs <= 1 || plans.size() == 1) {
    for (size_t f = 0; f < plans.size(); ++f) run_fold(f);
  } else {
    std::vector<std::thread> workers;
    std::atomic<size_t> next{0};
    const auto n_workers =
        std::min<size_t>(static_cast<size_t>(jobs), plans.size());
    for (size_t w = 0; w < n_workers; ++w) {
      workers.emplace_back([&]() {
        for (size_t f = next.fetch_add(1); f < plans.size();
             f = next.fetch_add(1)) {
          run_fold(f);
        }
      });
    }
    for (auto& t : workers) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  result.aggregates = aggregate_scores(result.folds);
  return result;
}

// ---------------------------------------------------------------------------

GridSpec default_grid(model::Architecture arch) {
  GridSpec grid;
  grid.learning_rates = {1e-3, 1e-5};
  switch (arch) {
    case model::Architecture::kSingleCatchment:
      grid.hidden_sizes = {16, 64, 128};
      grid.num_layers = {1, 2, 3};
      grid.dropouts = {0.0, 0.1, 0.4};
      break;
    case model::Architecture::kMultiNoQ:
    case model::Architecture::kMultiWithQ:
    case model::Architecture::kFlag:
      grid.hidden_sizes = {64, 128, 256};
      grid.num_layers = {1, 2, 3};
      grid.dropouts = {0.0, 0.2, 0.4};
      break;
    case model::Architecture::kHydra:
      grid.hidden_sizes = {64, 128, 256};
      grid.num_layers = {1, 2, 3};
      grid.head_hidden_sizes = {16, 32, 64};
      grid.head_num_layers = {1, 2};
      grid.dropouts = {0.0, 0.2, 0.4};
      break;
  }
  return grid;
}

std::vector<model::HyperParams> enumerate_grid(model::Architecture arch,
                                               const GridSpec& grid) {
  if (grid.hidden_sizes.empty() || grid.num_layers.empty() ||
      grid.learning_rates.empty() || grid.dropouts.empty()) {
    throw ConfigError("grid must list at least one value per hyperparameter");
  }
  const bool hydra = arch == model::Architecture::kHydra;
  if (hydra && (grid.head_hidden_sizes.empty() || grid.head_num_layers.empty())) {
    throw ConfigError("the hydra grid needs head sizes and head layer counts");
  }
  std::vector<model::HyperParams> cells;
  for (auto h : grid.hidden_sizes) {
    for (auto l : grid.num_layers) {
      const auto head_sizes =
          hydra ? grid.head_hidden_sizes : std::vector<std::int64_t>{0};
      const auto head_layers =
          hydra ? grid.head_num_layers : std::vector<std::int64_t>{0};
      for (auto hh : head_sizes) {
        for (auto hl : head_layers) {
          for (auto lr : grid.learning_rates) {
            for (auto dr : grid.dropouts) {
              cells.push_back({h, l, hh, hl, lr, dr});
            }
          }
        }
      }
    }
  }
  return cells;
}

SweepResult grid_sweep(const std::vector<data::CatchmentDataset>& datasets,
                       model::Architecture arch, const GridSpec& grid,
                       const std::vector<std::string>& extra_variables,
                       const std::vector<int>& validation_years,
                       const TrainSettings& settings, std::uint64_t seed) {
  if (validation_years.size() != 2) {
    throw ConfigError("the sweep holds out exactly 2 validation years, got " +
                      std::to_string(validation_years.size()));
  }
  const auto years = data::common_complete_years(datasets);
  data::SplitPlan plan;
  plan.fold_id = -1;
  plan.test_year = 0;  // sentinel: the sweep withholds no test year
  plan.validation_years = validation_years;
  std::sort(plan.validation_years.begin(), plan.validation_years.end());
  for (int y : years) {
    if (y != plan.validation_years[0] && y != plan.validation_years[1]) {
      plan.training_years.push_back(y);
    }
  }
  if (plan.training_years.size() + 2 != years.size()) {
    throw ConfigError("sweep validation years must be part of the record");
  }

  SweepResult result;
  result.validation_years = plan.validation_years;
  auto cells = enumerate_grid(arch, grid);
  double best = 0.0;
  for (size_t i = 0; i < cells.size(); ++i) {
    SweepCell cell;
    cell.hp = cells[i];
    try {
      auto trained =
          train_model(datasets, arch, cell.hp, extra_variables, plan, settings,
                      label_seed(seed, "sweep_cell", i));
      double sum = 0.0;
      for (const auto& rec : trained.records) {
        sum += rec.best_validation_loss;
      }
      cell.validation_loss = sum / static_cast<double>(trained.records.size());
    } catch (const Error& e) {
      cell.failed = true;
      cell.error = e.what();
    }
    if (!cell.failed &&
        (result.winner < 0 || cell.validation_loss < best)) {
      best = cell.validation_loss;
      result.winner = static_cast<int>(i);
    }
    result.cells.push_back(std::move(cell));
  }
  return result;
}

}  // namespace hydra::train
