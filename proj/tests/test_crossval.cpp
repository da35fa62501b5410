// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "evaluate.hpp"
#include "helpers.hpp"
#include "synth.hpp"

using namespace hydra;
using model::Architecture;

namespace {

std::vector<data::CatchmentDataset> tiny_datasets(std::uint64_t seed) {
  data::SynthConfig cfg;
  cfg.n_catchments = 3;
  cfg.n_years = 7;
  return data::synthesize_catchments(cfg, seed);
}

train::TrainSettings tiny_settings() {
  train::TrainSettings s;
  s.window_days = 8;
  s.batch_size = 64;
  s.max_epochs = 2;
  s.patience = 2;
  return s;
}

}  // namespace

TEST_CASE("cross validation drives folds and aggregates") {
  auto datasets = tiny_datasets(41);
  model::HyperParams hp{4, 1, 0, 0, 1e-3, 0.0};

  SUBCASE("n_folds = 1 degenerates to a single train/val/test run") {
    auto cv = train::cross_validate(datasets, Architecture::kMultiNoQ, hp, {}, 1,
                                    {}, tiny_settings(), 5);
    CHECK(cv.folds.size() == 1);
    CHECK(cv.fold_training_records.size() == 1);
    CHECK(cv.aggregates.size() == 1);
    CHECK(cv.aggregates[0].variant == "multi_catchment_no_q");
    CHECK(cv.aggregates[0].n_records == 3);  // one per catchment
  }

  SUBCASE("fold test years are distinct and exhaustive") {
    auto cv = train::cross_validate(datasets, Architecture::kMultiNoQ, hp, {}, 3,
                                    {}, tiny_settings(), 5);
    std::set<int> test_years;
    for (const auto& fold : cv.folds) {
      test_years.insert(fold.plan.test_year);
      // within the fold: records reference the fold's test year
      for (const auto& rec : fold.records) CHECK(rec.year == fold.plan.test_year);
    }
    CHECK(test_years.size() == 3);
  }

  SUBCASE("aggregates are recomputable from the raw per-date rows") {
    auto cv = train::cross_validate(datasets, Architecture::kMultiNoQ, hp, {}, 2,
                                    {}, tiny_settings(), 5);
    // independent recomputation
    std::map<std::pair<std::string, std::int32_t>, metrics::QuantileTriple> clim;
    for (const auto& fold : cv.folds) {
      for (const auto& row : fold.climatology) {
        clim[{row.catchment_id, row.date.serial}] = row.forecast;
      }
    }
    double sum_model = 0, sum_clim = 0, n = 0, over10 = 0, over90 = 0;
    for (const auto& fold : cv.folds) {
      for (const auto& row : fold.predictions.at("multi_catchment_no_q")) {
        sum_model += metrics::cumulative_quantile_loss(row.observed, row.forecast);
        sum_clim += metrics::cumulative_quantile_loss(
            row.observed, clim.at({row.catchment_id, row.date.serial}));
        n += 1;
        if (row.observed > row.forecast.q10) over10 += 1;
        if (row.observed > row.forecast.q90) over90 += 1;
      }
    }
    const auto& agg = cv.aggregates.at(0);
    CHECK(std::abs(agg.cqes_pooled - (1.0 - sum_model / sum_clim)) < 1e-10);
    CHECK(std::abs(agg.coverage_q10 - over10 / n) < 1e-10);
    CHECK(std::abs(agg.coverage_q90 - over90 / n) < 1e-10);
    CHECK(agg.n_dates == static_cast<std::int64_t>(n));
  }

  SUBCASE("parallel folds match the serial run") {
    auto serial = train::cross_validate(datasets, Architecture::kMultiNoQ, hp, {},
                                        2, {}, tiny_settings(), 5, 1);
    auto parallel = train::cross_validate(datasets, Architecture::kMultiNoQ, hp,
                                          {}, 2, {}, tiny_settings(), 5, 2);
    REQUIRE(serial.folds.size() == parallel.folds.size());
    for (size_t f = 0; f < serial.folds.size(); ++f) {
      const auto& a = serial.folds[f].predictions.at("multi_catchment_no_q");
      const auto& b = parallel.folds[f].predictions.at("multi_catchment_no_q");
      REQUIRE(a.size() == b.size());
      for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].forecast.q50 == b[i].forecast.q50);
      }
    }
    for (size_t i = 0; i < serial.aggregates.size(); ++i) {
      CHECK(serial.aggregates[i].cqes_pooled == parallel.aggregates[i].cqes_pooled);
    }
  }

  SUBCASE("excluded test years are honoured") {
    const auto years = data::common_complete_years(datasets);
    const int last = years.back();
    auto cv = train::cross_validate(datasets, Architecture::kMultiNoQ, hp, {}, 2,
                                    {last}, tiny_settings(), 5);
    for (const auto& fold : cv.folds) CHECK(fold.plan.test_year != last);
  }

  SUBCASE("hydra cross validation reports both head variants") {
    model::HyperParams hydra_hp{4, 1, 3, 1, 1e-3, 0.0};
    auto cv = train::cross_validate(datasets, Architecture::kHydra, hydra_hp,
                                    {data::kDischargeColumn}, 1, {},
                                    tiny_settings(), 5);
    CHECK(cv.aggregates.size() == 2);
    std::set<std::string> variants;
    for (const auto& a : cv.aggregates) variants.insert(a.variant);
    CHECK(variants ==
          std::set<std::string>{"hydra_multi_head", "hydra_single_head"});
  }
}

TEST_CASE("grid enumeration follows the tested hyperparameter table") {
  SUBCASE("hydra grid shape") {
    auto grid = train::default_grid(Architecture::kHydra);
    auto cells = train::enumerate_grid(Architecture::kHydra, grid);
    CHECK(cells.size() == 3 * 3 * 3 * 2 * 2 * 3);  // 324
    // the grid-winning defaults are members of the grid
    auto defaults = model::default_hyperparams(Architecture::kHydra);
    bool found = false;
    for (const auto& c : cells) {
      found = found || (c.hidden_size == defaults.hidden_size &&
                        c.num_layers == defaults.num_layers &&
                        c.head_hidden_size == defaults.head_hidden_size &&
                        c.head_num_layers == defaults.head_num_layers &&
                        c.learning_rate == defaults.learning_rate &&
                        c.dropout == defaults.dropout);
    }
    CHECK(found);
  }

  SUBCASE("baseline grids") {
    auto single = train::default_grid(Architecture::kSingleCatchment);
    CHECK(single.hidden_sizes == std::vector<std::int64_t>{16, 64, 128});
    CHECK(single.dropouts == std::vector<double>{0.0, 0.1, 0.4});
    CHECK(train::enumerate_grid(Architecture::kSingleCatchment, single).size() ==
          3 * 3 * 2 * 3);
    auto multi = train::default_grid(Architecture::kMultiNoQ);
    CHECK(multi.hidden_sizes == std::vector<std::int64_t>{64, 128, 256});
    CHECK(multi.dropouts == std::vector<double>{0.0, 0.2, 0.4});
  }
}

TEST_CASE("grid sweep") {
  auto datasets = tiny_datasets(43);
  const auto years = data::common_complete_years(datasets);
  const std::vector<int> val_years{years[years.size() - 2], years.back()};

  SUBCASE("a single-cell grid returns that configuration") {
    train::GridSpec grid;
    grid.hidden_sizes = {4};
    grid.num_layers = {1};
    grid.learning_rates = {1e-3};
    grid.dropouts = {0.0};
    auto sweep = train::grid_sweep(datasets, Architecture::kMultiNoQ, grid, {},
                                   val_years, tiny_settings(), 3);
    REQUIRE(sweep.cells.size() == 1);
    CHECK(sweep.winner == 0);
    CHECK_FALSE(sweep.cells[0].failed);
    CHECK(sweep.cells[0].hp.hidden_size == 4);
  }

  SUBCASE("the winner's validation loss is minimal; failures are recorded") {
    train::GridSpec grid;
    grid.hidden_sizes = {0, 3, 6};  // hidden 0 cannot be built
    grid.num_layers = {1};
    grid.learning_rates = {1e-3};
    grid.dropouts = {0.0};
    auto sweep = train::grid_sweep(datasets, Architecture::kMultiNoQ, grid, {},
                                   val_years, tiny_settings(), 3);
    REQUIRE(sweep.cells.size() == 3);
    CHECK(sweep.cells[0].failed);
    CHECK_FALSE(sweep.cells[1].failed);
    REQUIRE(sweep.winner >= 0);
    const double winning = sweep.cells[static_cast<size_t>(sweep.winner)].validation_loss;
    for (const auto& cell : sweep.cells) {
      if (!cell.failed) CHECK(winning <= cell.validation_loss);
    }
  }

  SUBCASE("validation years outside the record are rejected") {
    CHECK_THROWS_AS(train::grid_sweep(datasets, Architecture::kMultiNoQ,
                                      train::default_grid(Architecture::kMultiNoQ),
                                      {}, {1900, 1901}, tiny_settings(), 3),
                    ConfigError);
  }
}
