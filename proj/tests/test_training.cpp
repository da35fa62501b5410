// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "checkpoint.hpp"
#include "helpers.hpp"
#include "synth.hpp"
#include "trainer.hpp"

using namespace hydra;
using ad::Tensor;
using train::AdamConfig;
using train::AdamOptimizer;
using train::TrainSettings;

namespace {

TrainSettings quick_settings(std::int64_t window, int max_epochs, int patience) {
  TrainSettings s;
  s.window_days = window;
  s.batch_size = 64;
  s.max_epochs = max_epochs;
  s.patience = patience;
  return s;
}

// A hand-built catchment: drivers plus discharge with a chosen
// relationship, wrapped in the CatchmentDataset container.
data::CatchmentDataset lab_catchment(
    const std::string& id, int n_years,
    const std::function<double(std::mt19937_64&)>& driver_draw,
    const std::function<double(double x_yesterday, std::mt19937_64&)>& q_rule,
    std::uint64_t seed) {
  data::CatchmentDataset ds;
  ds.id = id;
  ds.start = make_date(2000, 1, 1);
  const int n_days = make_date(2000 + n_years, 1, 1) - ds.start;
  auto rng = make_rng(seed, "lab." + id);
  std::vector<double> x(static_cast<size_t>(n_days)), q(static_cast<size_t>(n_days));
  for (int t = 0; t < n_days; ++t) {
    x[static_cast<size_t>(t)] = driver_draw(rng);
    q[static_cast<size_t>(t)] =
        t == 0 ? 1.0 : q_rule(x[static_cast<size_t>(t - 1)], rng);
  }
  ds.driver_names = {"driver_x"};
  ds.drivers = {std::move(x)};
  ds.discharge = std::move(q);
  ds.statics = {};
  ds.validate();
  return ds;
}

}  // namespace

TEST_CASE("adam optimizer") {
  auto make_param = [](std::vector<double> v) {
    return rnn::NamedParam{"w", Tensor::leaf({(std::int64_t)v.size()}, v, true)};
  };

  SUBCASE("zero gradients leave parameters unchanged") {
    auto p = make_param({1.0, -2.0, 3.0});
    AdamOptimizer opt({p}, AdamConfig{});
    p.tensor.node()->grad.assign(3, 0.0);
    opt.step();
    CHECK(p.tensor.values() == std::vector<double>{1.0, -2.0, 3.0});
  }

  SUBCASE("one step with constant gradient moves by about lr in sign(g)") {
    auto p = make_param({0.5, -0.5});
    AdamConfig cfg;
    cfg.learning_rate = 1e-3;
    cfg.clip_norm = 0.0;  // keep the raw gradient
    AdamOptimizer opt({p}, cfg);
    p.tensor.node()->grad = {2.0, -0.25};
    opt.step();
    // bias-corrected first step: delta = lr * g / (|g| + eps)
    CHECK(p.tensor.values()[0] ==
          doctest::Approx(0.5 - 1e-3).epsilon(1e-6));
    CHECK(p.tensor.values()[1] ==
          doctest::Approx(-0.5 + 1e-3).epsilon(1e-6));
    // gradients are cleared afterwards
    CHECK(p.tensor.grad() == std::vector<double>{0.0, 0.0});
  }

  SUBCASE("identical gradient streams give identical trajectories") {
    auto p1 = make_param({0.1, 0.2});
    auto p2 = make_param({0.1, 0.2});
    AdamOptimizer o1({p1}, AdamConfig{});
    AdamOptimizer o2({p2}, AdamConfig{});
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(-1, 1);
    for (int i = 0; i < 50; ++i) {
      const std::vector<double> g{dist(rng), dist(rng)};
      p1.tensor.node()->grad = g;
      p2.tensor.node()->grad = g;
      o1.step();
      o2.step();
      CHECK(p1.tensor.values() == p2.tensor.values());
    }
  }

  SUBCASE("NaN gradients abort naming the parameter") {
    auto p = make_param({1.0});
    p.name = "body.layer0.W";
    AdamOptimizer opt({p}, AdamConfig{});
    p.tensor.node()->grad = {std::nan("")};
    CHECK_THROWS_WITH_AS(opt.step(), doctest::Contains("body.layer0.W"),
                         TrainingError);
  }

  SUBCASE("clipping rescales large gradients") {
    auto p = make_param({0.0, 0.0});
    AdamConfig cfg;
    cfg.clip_norm = 1.0;
    AdamOptimizer opt({p}, cfg);
    p.tensor.node()->grad = {30.0, 40.0};  // norm 50
    auto info = opt.step();
    CHECK(info.clipped);
    CHECK(info.gradient_norm == doctest::Approx(50.0));
  }
}

TEST_CASE("early stopper mechanics") {
  SUBCASE("patience rule stops at epoch 22 with best at epoch 2") {
    train::EarlyStopper stopper(20, 500);
    CHECK_FALSE(stopper.observe(1, 1.0));
    CHECK_FALSE(stopper.observe(2, 0.9));
    bool stopped = false;
    int epoch = 2;
    for (int k = 0; k < 25 && !stopped; ++k) {
      ++epoch;
      stopped = stopper.observe(epoch, 0.95);
    }
    CHECK(stopped);
    CHECK(epoch == 22);
    CHECK(stopper.best_epoch() == 2);
    CHECK(stopper.best_loss() == 0.9);
    CHECK(stopper.stop_reason() == "patience");
  }

  SUBCASE("max-epochs boundary stops even while improving") {
    train::EarlyStopper stopper(20, 5);
    for (int e = 1; e < 5; ++e) {
      CHECK_FALSE(stopper.observe(e, 1.0 / e));
    }
    CHECK(stopper.observe(5, 0.01));
    CHECK(stopper.stop_reason() == "max_epochs");
    CHECK(stopper.best_epoch() == 5);
  }

  SUBCASE("ties do not count as improvement") {
    train::EarlyStopper stopper(2, 100);
    CHECK_FALSE(stopper.observe(1, 0.5));
    CHECK_FALSE(stopper.observe(2, 0.5));
    CHECK(stopper.observe(3, 0.5));
    CHECK(stopper.best_epoch() == 1);
  }
}

TEST_CASE("training loop marks divergence and keeps the record") {
  std::vector<std::vector<data::ExampleRef>> pools{
      {{0, make_date(2001, 1, 1)}, {0, make_date(2001, 1, 2)}}};
  std::vector<data::Batch> val{{0, {{0, make_date(2002, 1, 1)}}}};
  auto p = rnn::NamedParam{"w", Tensor::leaf({1}, {0.0}, true)};
  AdamOptimizer opt({p}, AdamConfig{});
  auto nan_loss = [](ad::Tape*, const data::Batch&, std::mt19937_64&,
                     bool) { return Tensor::scalar(std::nan("")); };
  auto record = train::run_training_loop(pools, val, nan_loss, [](bool) {},
                                         opt, quick_settings(5, 10, 3), 1,
                                         "model");
  CHECK(record.diverged);
  CHECK(record.stop_reason == "diverged");
  CHECK(record.epochs.size() == 1);
}

TEST_CASE("constant target converges to the constant") {
  auto ds = lab_catchment(
      "flat", 6, [](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> d(-1, 1);
        return d(rng);
      },
      [](double, std::mt19937_64&) { return 5.0; }, 17);
  std::vector<data::CatchmentDataset> datasets{ds};
  auto plans = data::make_split_plans(data::common_complete_years(datasets), 1);

  model::HyperParams hp{4, 1, 0, 0, 1e-2, 0.0};
  auto settings = quick_settings(5, 40, 10);
  settings.batch_size = 32;
  auto result = train::train_model(datasets, model::Architecture::kMultiNoQ, hp,
                                   {}, plans[0], settings, 7);

  auto pool = data::evaluation_pool(datasets, 0, {plans[0].test_year},
                                    settings.window_days, std::nullopt);
  auto preds = result.model.predict(datasets, pool, "multi_catchment_no_q");
  for (const auto& t : preds) {
    CHECK(t.q10 == doctest::Approx(5.0).epsilon(0.02));
    CHECK(t.q50 == doctest::Approx(5.0).epsilon(0.02));
    CHECK(t.q90 == doctest::Approx(5.0).epsilon(0.02));
  }

  SUBCASE("record bookkeeping") {
    const auto& rec = result.records.at(0);
    CHECK((rec.stop_reason == "patience" || rec.stop_reason == "max_epochs"));
    double best = 1e300;
    for (const auto& e : rec.epochs) best = std::min(best, e.validation_loss);
    CHECK(rec.best_validation_loss == best);
    CHECK(rec.best_epoch >= 1);
  }
}

TEST_CASE("heteroscedastic target yields calibrated quantiles") {
  // tomorrow's discharge is today's driver times multiplicative noise
  auto ds = lab_catchment(
      "noisy", 8,
      [](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> d(1.0, 4.0);
        return d(rng);
      },
      [](double x, std::mt19937_64& rng) {
        std::normal_distribution<double> g(0.0, 1.0);
        return std::max(0.05, x * (1.0 + 0.3 * g(rng)));
      },
      29);
  std::vector<data::CatchmentDataset> datasets{ds};
  auto plans = data::make_split_plans(data::common_complete_years(datasets), 1);

  model::HyperParams hp{8, 1, 0, 0, 5e-3, 0.0};
  auto settings = quick_settings(5, 60, 15);
  settings.batch_size = 64;
  auto result = train::train_model(datasets, model::Architecture::kMultiNoQ, hp,
                                   {}, plans[0], settings, 11);

  auto pool = data::evaluation_pool(datasets, 0, {plans[0].test_year},
                                    settings.window_days, std::nullopt);
  auto preds = result.model.predict(datasets, pool, "multi_catchment_no_q");
  std::vector<double> obs, q10, q90;
  for (size_t i = 0; i < pool.size(); ++i) {
    obs.push_back(
        ds.discharge[static_cast<size_t>(ds.index_of(pool[i].forecast_date))]);
    q10.push_back(preds[i].q10);
    q90.push_back(preds[i].q90);
  }
  const double cov10 = metrics::empirical_coverage(obs, q10);
  const double cov90 = metrics::empirical_coverage(obs, q90);
  CHECK(cov10 > 0.85);
  CHECK(cov10 < 0.95);
  CHECK(cov90 > 0.05);
  CHECK(cov90 < 0.15);
}

TEST_CASE("first-batch loss equals the hand-applied quantile loss") {
  auto datasets = data::synthesize_catchments(
      [] {
        data::SynthConfig c;
        c.n_catchments = 2;
        c.n_years = 6;
        return c;
      }(),
      3);
  auto plans = data::make_split_plans(data::common_complete_years(datasets), 1);
  auto stats = data::fit_normalization(datasets, plans[0].training_set());
  auto layout = data::make_layout(stats, {}, false);

  auto rng = make_rng(5, "init");
  auto m = model::init_baseline(model::Architecture::kMultiNoQ, layout,
                                {6, 1, 0, 0, 1e-3, 0.0}, rng);

  auto pool =
      data::training_pool(datasets, 0, plans[0].training_set(), 10, std::nullopt);
  data::Batch batch{0, {pool.begin(), pool.begin() + 16}};
  std::vector<data::TrainingExample> examples;
  for (const auto& ref : batch.examples) {
    examples.push_back(data::build_example(datasets[0], stats, layout,
                                           ref.forecast_date, 10));
  }

  ad::Tape tape;
  std::mt19937_64 fwd(0);
  auto pred = model::baseline_forward_batch(&tape, m,
                                            train::pack_steps(examples), fwd);
  auto loss =
      metrics::pinball_total_loss(&tape, pred, train::pack_targets(examples));

  double by_hand = 0.0;
  for (size_t b = 0; b < examples.size(); ++b) {
    metrics::QuantileTriple f{pred.values()[3 * b], pred.values()[3 * b + 1],
                              pred.values()[3 * b + 2]};
    by_hand += metrics::cumulative_quantile_loss(examples[b].target_normalized, f);
  }
  by_hand /= static_cast<double>(examples.size());
  CHECK(loss.scalar_value() == doctest::Approx(by_hand).epsilon(1e-12));
}

TEST_CASE("hydra two-phase protocol") {
  data::SynthConfig cfg;
  cfg.n_catchments = 3;
  cfg.n_years = 6;
  auto datasets = data::synthesize_catchments(cfg, 21);
  auto plans = data::make_split_plans(data::common_complete_years(datasets), 1);
  model::HyperParams hp{6, 1, 4, 1, 1e-3, 0.0};
  auto settings = quick_settings(10, 2, 2);

  SUBCASE("phase 2 without phase 1 is an ordering error") {
    train::TrainResult empty;
    CHECK_THROWS_AS(train::train_hydra_phase2(empty, datasets,
                                              {data::kDischargeColumn}, plans[0],
                                              settings, 1),
                    Error);
  }

  auto result = train::train_hydra_phase1(datasets, hp, plans[0], settings, 9);
  auto body_before = snapshot_params(result.model.hydra->body_params());

  train::train_hydra_phase2(result, datasets, {data::kDischargeColumn}, plans[0],
                            settings, 9);

  SUBCASE("body parameters are byte-identical after phase 2") {
    for (const auto& p : result.model.hydra->body_params()) {
      CHECK(p.tensor.values() == body_before.at(p.name).values);
    }
  }

  SUBCASE("no gradients accumulate on the frozen body") {
    for (const auto& p : result.model.hydra->body_params()) {
      CHECK_FALSE(p.tensor.has_grad());
      CHECK_FALSE(p.tensor.requires_grad());
    }
  }

  SUBCASE("every catchment with extras gets a head and a record") {
    CHECK(result.model.hydra->catchment_heads.size() == datasets.size());
    CHECK(result.records.size() == 1 + datasets.size());
    CHECK(result.records[0].component == "body+multi_head");
    CHECK(result.records[1].component == "head.c00");
  }

  SUBCASE("precomputed encodings match on-the-fly evaluation") {
    auto r2 = train::train_hydra_phase1(datasets, hp, plans[0], settings, 9);
    auto s2 = settings;
    s2.precompute_encodings = false;
    train::train_hydra_phase2(r2, datasets, {data::kDischargeColumn}, plans[0],
                              s2, 9);
    for (const auto& [id, head] : result.model.hydra->catchment_heads) {
      const auto& other = r2.model.hydra->catchment_heads.at(id);
      auto a = snapshot_params(result.model.hydra->head_params(head));
      auto b = snapshot_params(r2.model.hydra->head_params(other));
      for (const auto& [name, blob] : a) {
        const auto& vb = b.at(name).values;
        REQUIRE(blob.values.size() == vb.size());
        for (size_t i = 0; i < vb.size(); ++i) {
          CHECK(std::abs(blob.values[i] - vb[i]) < 1e-10);
        }
      }
    }
  }

  SUBCASE("head jobs are independent of scheduling order") {
    auto r2 = train::train_hydra_phase1(datasets, hp, plans[0], settings, 9);
    // train the same heads one at a time, in reverse order
    for (auto id : {"c02", "c01", "c00"}) {
      train::train_hydra_phase2(r2, datasets, {data::kDischargeColumn}, plans[0],
                                settings, 9, std::set<std::string>{id});
    }
    for (const auto& [id, head] : result.model.hydra->catchment_heads) {
      auto a = snapshot_params(result.model.hydra->head_params(head));
      auto b = snapshot_params(
          r2.model.hydra->head_params(r2.model.hydra->catchment_heads.at(id)));
      for (const auto& [name, blob] : a) {
        CHECK(blob.values == b.at(name).values);
      }
    }
  }

  SUBCASE("single-head predictions differ from multi-head ones") {
    auto pool = data::evaluation_pool(datasets, 0, {plans[0].test_year},
                                      settings.window_days, std::nullopt);
    std::vector<data::ExampleRef> refs(pool.begin(), pool.begin() + 5);
    auto mc = result.model.predict(datasets, refs, "hydra_multi_head");
    auto sc = result.model.predict(datasets, refs, "hydra_single_head");
    CHECK(mc.size() == sc.size());
    bool any_diff = false;
    for (size_t i = 0; i < mc.size(); ++i) {
      any_diff = any_diff || mc[i].q50 != sc[i].q50;
    }
    CHECK(any_diff);
  }
}

TEST_CASE("training is deterministic end to end") {
  data::SynthConfig cfg;
  cfg.n_catchments = 2;
  cfg.n_years = 6;
  auto datasets = data::synthesize_catchments(cfg, 33);
  auto plans = data::make_split_plans(data::common_complete_years(datasets), 1);
  model::HyperParams hp{5, 1, 0, 0, 1e-3, 0.2};
  auto settings = quick_settings(8, 3, 3);

  auto run = [&]() {
    auto result = train::train_model(datasets, model::Architecture::kFlag, hp,
                                     {data::kDischargeColumn}, plans[0],
                                     settings, 101);
    return snapshot_params(result.model.global_model->params());
  };
  auto a = run();
  auto b = run();
  for (const auto& [name, blob] : a) {
    CHECK(blob.values == b.at(name).values);
  }
}

TEST_CASE("uninformative extra keeps the single head near the multi head") {
  // the extra variable is pure noise, so the single-catchment head can
  // at best match the multi head's validation loss
  data::SynthConfig cfg;
  cfg.n_catchments = 2;
  cfg.n_years = 8;
  auto datasets = data::synthesize_catchments(cfg, 55);
  auto noise_rng = make_rng(3, "noise");
  std::normal_distribution<double> g(0.0, 1.0);
  for (auto& ds : datasets) {
    std::vector<double> noise(ds.length());
    for (auto& v : noise) v = g(noise_rng);
    ds.extra_names.push_back("station_noise");
    ds.extras.push_back(std::move(noise));
  }

  auto plans = data::make_split_plans(data::common_complete_years(datasets), 1);
  model::HyperParams hp{8, 1, 6, 1, 1e-2, 0.0};
  auto settings = quick_settings(15, 60, 12);

  auto result = train::train_hydra_phase1(datasets, hp, plans[0], settings, 71);
  train::train_hydra_phase2(result, datasets, {"station_noise"}, plans[0],
                            settings, 71);

  // like-for-like: the multi head's validation loss on each catchment
  const auto& hydra = *result.model.hydra;
  const auto& stats = result.model.stats;
  const std::set<int> val_years{plans[0].validation_years.begin(),
                                plans[0].validation_years.end()};
  for (size_t c = 0; c < datasets.size(); ++c) {
    auto pool = data::evaluation_pool(datasets, static_cast<int>(c), val_years,
                                      settings.window_days, std::nullopt);
    std::vector<data::TrainingExample> examples;
    for (const auto& ref : pool) {
      examples.push_back(data::build_example(datasets[c], stats,
                                             hydra.shared_layout,
                                             ref.forecast_date,
                                             settings.window_days));
    }
    std::mt19937_64 rng(0);
    auto pred = model::hydra_forward_batch(nullptr, hydra, hydra.multi_head,
                                           train::pack_steps(examples), {}, rng);
    auto multi_loss = metrics::pinball_total_loss(nullptr, pred,
                                                  train::pack_targets(examples))
                          .scalar_value();
    const double head_loss =
        result.records[1 + c].best_validation_loss;
    CHECK(head_loss < multi_loss * 1.05);
    CHECK(head_loss > multi_loss * 0.80);  // noise cannot make it far better
  }
}
