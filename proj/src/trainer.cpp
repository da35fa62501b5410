// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0

#include "trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <unordered_map>

#include "checkpoint.hpp"

namespace hydra::train {

namespace {

using data::Batch;
using data::CatchmentDataset;
using data::ExampleRef;
using data::FeatureLayout;
using data::TrainingExample;

// Extras a catchment can actually supply: its own discharge plus any
// extra series present in its record.
std::vector<std::string> available_extras(const CatchmentDataset& ds,
                                          const std::vector<std::string>& wanted) {
  std::vector<std::string> out;
  for (const auto& name : wanted) {
    if (name == data::kDischargeColumn || ds.find_extra(name)) {
      out.push_back(name);
    }
  }
  return out;
}

void require_uniform_extras(const std::vector<CatchmentDataset>& datasets,
                            const std::vector<std::string>& wanted,
                            const std::string& arch_name) {
  for (const auto& ds : datasets) {
    const auto have = available_extras(ds, wanted);
    if (have.size() != wanted.size()) {
      throw ConfigError(arch_name + " needs every catchment to supply " +
                        std::to_string(wanted.size()) +
                        " extra variable(s); catchment " + ds.id + " has " +
                        std::to_string(have.size()));
    }
  }
}

std::vector<TrainingExample> build_batch_examples(
    const std::vector<CatchmentDataset>& datasets, const data::NormStats& stats,
    const FeatureLayout& layout, const Batch& batch,
    std::int64_t window_days) {
  std::vector<TrainingExample> examples;
  examples.reserve(batch.examples.size());
  for (const auto& ref : batch.examples) {
    examples.push_back(
        data::build_example(datasets[static_cast<size_t>(ref.catchment)], stats,
                            layout, ref.forecast_date, window_days));
  }
  return examples;
}

}  // namespace

std::vector<ad::Tensor> pack_steps(const std::vector<TrainingExample>& examples) {
  if (examples.empty()) throw Error("pack_steps: empty batch");
  const auto batch = static_cast<std::int64_t>(examples.size());
  const auto window = examples[0].window_days;
  const auto features = examples[0].feature_count;
  std::vector<ad::Tensor> steps;
  steps.reserve(static_cast<size_t>(window));
  for (std::int64_t t = 0; t < window; ++t) {
    std::vector<double> values(static_cast<size_t>(batch * features));
    for (std::int64_t b = 0; b < batch; ++b) {
      const auto& ex = examples[static_cast<size_t>(b)];
      if (ex.window_days != window || ex.feature_count != features) {
        throw DimensionError("pack_steps: ragged batch");
      }
      std::copy_n(ex.window.data() + t * features, features,
                  values.data() + b * features);
    }
    steps.push_back(ad::Tensor::leaf({batch, features}, std::move(values)));
  }
  return steps;
}

ad::Tensor pack_targets(const std::vector<TrainingExample>& examples) {
  std::vector<double> values;
  values.reserve(examples.size());
  for (const auto& ex : examples) values.push_back(ex.target_normalized);
  return ad::Tensor::leaf({static_cast<std::int64_t>(examples.size()), 1},
                          std::move(values));
}

void force_flag_mask(TrainingExample& example, const FeatureLayout& layout) {
  if (!layout.with_flags) {
    throw ConfigError("force_flag_mask on a layout without flag columns");
  }
  const auto n_extras = static_cast<std::int64_t>(layout.extras.size());
  const auto extras_at = layout.shared_count();
  example.masked = true;
  for (std::int64_t t = 0; t < example.window_days; ++t) {
    double* row = example.window.data() + t * example.feature_count;
    for (std::int64_t v = 0; v < n_extras; ++v) {
      row[extras_at + v] = 0.0;
      row[extras_at + n_extras + v] = 0.0;
    }
  }
}

std::vector<Batch> make_validation_batches(
    const std::vector<CatchmentDataset>& datasets,
    const std::set<int>& validation_years, const TrainSettings& settings) {
  std::vector<Batch> out;
  for (size_t c = 0; c < datasets.size(); ++c) {
    auto pool = data::evaluation_pool(datasets, static_cast<int>(c),
                                      validation_years, settings.window_days,
                                      settings.months);
    for (size_t at = 0; at < pool.size(); at += settings.batch_size) {
      Batch b;
      b.catchment = static_cast<int>(c);
      const auto take = std::min(pool.size() - at,
                                 static_cast<size_t>(settings.batch_size));
      b.examples.assign(pool.begin() + static_cast<std::ptrdiff_t>(at),
                        pool.begin() + static_cast<std::ptrdiff_t>(at + take));
      out.push_back(std::move(b));
    }
  }
  if (out.empty()) {
    throw ConfigError("validation years contain no usable forecast dates");
  }
  return out;
}

TrainingRunRecord run_training_loop(
    const std::vector<std::vector<ExampleRef>>& train_pools,
    const std::vector<Batch>& validation_batches, BatchLossFn batch_loss,
    const std::function<void(bool)>& set_training, AdamOptimizer& optimizer,
    const TrainSettings& settings, std::uint64_t seed,
    const std::string& component) {
  const auto t0 = std::chrono::steady_clock::now();

  std::int64_t pool_total = 0;
  for (const auto& p : train_pools) pool_total += static_cast<std::int64_t>(p.size());
  if (pool_total == 0) {
    throw ConfigError("training pool is empty for component " + component);
  }

  TrainingRunRecord record;
  record.component = component;
  record.seed = seed;

  EarlyStopper stopper(settings.patience, settings.max_epochs);
  ParamMap best_snapshot;
  bool have_snapshot = false;

  for (int epoch = 1; epoch <= settings.max_epochs; ++epoch) {
    set_training(true);
    auto model_rng =
        make_rng(seed, component + ".model", static_cast<std::uint64_t>(epoch));
    data::EpochSampler sampler(
        train_pools, settings.batch_size,
        make_rng(seed, component + ".batches", static_cast<std::uint64_t>(epoch)));

    double train_sum = 0.0;
    std::int64_t train_count = 0;
    while (auto batch = sampler.next()) {
      ad::Tape tape;
      ad::Tensor loss = batch_loss(&tape, *batch, model_rng, /*training=*/true);
      tape.backward(loss);
      const auto info = optimizer.step();
      if (info.clipped) ++record.clip_events;
      ++record.total_batches;
      train_sum += loss.scalar_value() *
                   static_cast<double>(batch->examples.size());
      train_count += static_cast<std::int64_t>(batch->examples.size());
    }

    set_training(false);
    double val_sum = 0.0;
    std::int64_t val_count = 0;
    for (const auto& batch : validation_batches) {
      ad::Tensor loss = batch_loss(nullptr, batch, model_rng, /*training=*/false);
      val_sum += loss.scalar_value() * static_cast<double>(batch.examples.size());
      val_count += static_cast<std::int64_t>(batch.examples.size());
    }

    EpochRecord er;
    er.training_loss = train_sum / static_cast<double>(train_count);
    er.validation_loss = val_sum / static_cast<double>(val_count);
    record.epochs.push_back(er);

    if (!std::isfinite(er.validation_loss)) {
      record.diverged = true;
      record.stop_reason = "diverged";
      break;
    }

    const bool stop = stopper.observe(epoch, er.validation_loss);
    if (stopper.best_epoch() == epoch) {
      best_snapshot = snapshot_params(optimizer.params());
      have_snapshot = true;
    }
    if (stop) {
      record.stop_reason = stopper.stop_reason();
      break;
    }
  }

  if (have_snapshot) {
    restore_params(best_snapshot, optimizer.params());
  }
  record.best_epoch = stopper.best_epoch();
  record.best_validation_loss = stopper.best_loss();
  record.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return record;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::vector<ExampleRef>> training_pools_all(
    const std::vector<CatchmentDataset>& datasets, const std::set<int>& years,
    const TrainSettings& settings) {
  std::vector<std::vector<ExampleRef>> pools;
  for (size_t c = 0; c < datasets.size(); ++c) {
    pools.push_back(data::training_pool(datasets, static_cast<int>(c), years,
                                        settings.window_days, settings.months));
  }
  return pools;
}

// Loss closure for the single-stack models. Flag models draw Bernoulli
// masks during training and average the gauged/ungauged regimes during
// validation.
BatchLossFn baseline_loss_fn(const std::vector<CatchmentDataset>& datasets,
                             model::BaselineModel& m, const data::NormStats& stats,
                             const TrainSettings& settings) {
  return [&datasets, &m, &stats, settings](
             ad::Tape* tape, const Batch& batch, std::mt19937_64& rng,
             bool training) -> ad::Tensor {
    auto examples =
        build_batch_examples(datasets, stats, m.layout, batch,
                             settings.window_days);
    if (m.arch == model::Architecture::kFlag) {
      if (training) {
        for (auto& ex : examples) {
          data::apply_flag_masking(ex, m.layout, settings.mask_probability, rng);
        }
      } else {
        auto masked = examples;
        for (auto& ex : masked) force_flag_mask(ex, m.layout);
        auto targets = pack_targets(examples);
        auto loss_gauged = metrics::pinball_total_loss(
            tape, model::baseline_forward_batch(tape, m, pack_steps(examples), rng),
            targets);
        auto loss_masked = metrics::pinball_total_loss(
            tape, model::baseline_forward_batch(tape, m, pack_steps(masked), rng),
            targets);
        return ad::scale(tape, ad::add(tape, loss_gauged, loss_masked), 0.5);
      }
    }
    auto targets = pack_targets(examples);
    auto pred = model::baseline_forward_batch(tape, m, pack_steps(examples), rng);
    return metrics::pinball_total_loss(tape, pred, targets);
  };
}

}  // namespace

TrainResult train_hydra_phase1(const std::vector<CatchmentDataset>& datasets,
                               const model::HyperParams& hp,
                               const data::SplitPlan& split,
                               const TrainSettings& settings,
                               std::uint64_t seed) {
  TrainResult result;
  result.model.arch = model::Architecture::kHydra;
  result.model.hp = hp;
  result.model.settings = settings;

  const auto training_years = split.training_set();
  result.model.stats = data::fit_normalization(datasets, training_years);
  auto shared_layout = data::make_layout(result.model.stats, {}, false);

  auto init_rng = make_rng(seed, "init");
  result.model.hydra = model::init_hydra(shared_layout, hp, init_rng);
  auto& hydra = *result.model.hydra;

  auto pools = training_pools_all(datasets, training_years, settings);
  auto val_batches = make_validation_batches(
      datasets, {split.validation_years.begin(), split.validation_years.end()},
      settings);

  auto trainables = hydra.body_params();
  for (auto& p : hydra.head_params(hydra.multi_head)) trainables.push_back(p);
  AdamOptimizer opt(trainables,
                    AdamConfig{hp.learning_rate, 0.9, 0.999, 1e-8,
                               settings.clip_norm});

  const auto& stats = result.model.stats;
  auto batch_loss = [&datasets, &hydra, &stats, &shared_layout, settings](
                        ad::Tape* tape, const Batch& batch,
                        std::mt19937_64& rng, bool) -> ad::Tensor {
    auto examples = build_batch_examples(datasets, stats, shared_layout, batch,
                                         settings.window_days);
    auto pred = model::hydra_forward_batch(tape, hydra, hydra.multi_head,
                                           pack_steps(examples), {}, rng);
    return metrics::pinball_total_loss(tape, pred, pack_targets(examples));
  };

  auto record = run_training_loop(
      pools, val_batches, batch_loss,
      [&hydra](bool on) { hydra.set_training(on); }, opt, settings, seed,
      "body+multi_head");
  result.records.push_back(std::move(record));
  if (result.records.back().diverged) {
    throw TrainingError("hydra phase 1 diverged (validation loss not finite)");
  }
  return result;
}

namespace {

// Encoded window cache for phase 2: example (by date serial) -> the
// body's output sequence, row-major [window x H_body].
using EncodingCache = std::unordered_map<std::int32_t, std::vector<double>>;

EncodingCache precompute_encodings(const std::vector<CatchmentDataset>& datasets,
                                   const TrainedModel& tm,
                                   const std::vector<ExampleRef>& refs,
                                   const data::FeatureLayout& shared_layout) {
  EncodingCache cache;
  const auto& hydra = *tm.hydra;
  const auto window = tm.settings.window_days;
  const auto h_body = hydra.body.output_size();
  std::mt19937_64 rng(0);  // eval mode: never consumed

  constexpr size_t kChunk = 128;
  for (size_t at = 0; at < refs.size(); at += kChunk) {
    const size_t take = std::min(kChunk, refs.size() - at);
    std::vector<TrainingExample> examples;
    examples.reserve(take);
    for (size_t i = 0; i < take; ++i) {
      const auto& ref = refs[at + i];
      examples.push_back(data::build_example(
          datasets[static_cast<size_t>(ref.catchment)], tm.stats, shared_layout,
          ref.forecast_date, window));
    }
    auto encoded = model::run_body_batch(nullptr, hydra, pack_steps(examples), rng);
    for (size_t i = 0; i < take; ++i) {
      std::vector<double> buf(static_cast<size_t>(window * h_body));
      for (std::int64_t t = 0; t < window; ++t) {
        std::copy_n(encoded[static_cast<size_t>(t)].values().data() +
                        static_cast<std::int64_t>(i) * h_body,
                    h_body, buf.data() + t * h_body);
      }
      cache.emplace(refs[at + i].forecast_date.serial, std::move(buf));
    }
  }
  return cache;
}

std::vector<ad::Tensor> encoded_steps_from_cache(const EncodingCache& cache,
                                                 const Batch& batch,
                                                 std::int64_t window,
                                                 std::int64_t h_body) {
  const auto bsize = static_cast<std::int64_t>(batch.examples.size());
  std::vector<ad::Tensor> steps;
  steps.reserve(static_cast<size_t>(window));
  for (std::int64_t t = 0; t < window; ++t) {
    std::vector<double> values(static_cast<size_t>(bsize * h_body));
    for (std::int64_t b = 0; b < bsize; ++b) {
      const auto& buf = cache.at(batch.examples[static_cast<size_t>(b)]
                                     .forecast_date.serial);
      std::copy_n(buf.data() + t * h_body, h_body, values.data() + b * h_body);
    }
    steps.push_back(ad::Tensor::leaf({bsize, h_body}, std::move(values)));
  }
  return steps;
}

}  // namespace

void train_hydra_phase2(
    TrainResult& phase1, const std::vector<CatchmentDataset>& datasets,
    const std::vector<std::string>& extra_variables,
    const data::SplitPlan& split, const TrainSettings& settings,
    std::uint64_t seed,
    const std::optional<std::set<std::string>>& only_catchments) {
  if (!phase1.model.hydra || phase1.records.empty() ||
      phase1.records.front().component != "body+multi_head") {
    throw Error("hydra phase 2 requested without a completed phase 1");
  }
  auto& tm = phase1.model;
  auto& hydra = *tm.hydra;
  tm.extra_variables = extra_variables;
  hydra.freeze_body();
  hydra.set_training(false);

  const auto training_years = split.training_set();
  const auto shared_layout = hydra.shared_layout;

  for (size_t c = 0; c < datasets.size(); ++c) {
    const auto& ds = datasets[c];
    if (only_catchments && only_catchments->count(ds.id) == 0) continue;
    const auto extras = available_extras(ds, extra_variables);
    if (extras.empty()) continue;  // no bespoke data, the multi head covers it

    auto head_rng = make_rng(seed, "init_head." + ds.id);
    auto& head = model::add_catchment_head(hydra, ds.id, extras, tm.hp, head_rng);

    data::FeatureLayout extras_layout;
    extras_layout.extras = head.extra_names;

    auto pool = data::training_pool(datasets, static_cast<int>(c), training_years,
                                    settings.window_days, settings.months);
    std::vector<std::vector<ExampleRef>> pools{pool};

    std::vector<Batch> val_batches;
    {
      auto vp = data::evaluation_pool(
          datasets, static_cast<int>(c),
          {split.validation_years.begin(), split.validation_years.end()},
          settings.window_days, settings.months);
      for (size_t at = 0; at < vp.size(); at += settings.batch_size) {
        Batch b;
        b.catchment = static_cast<int>(c);
        const auto take =
            std::min(vp.size() - at, static_cast<size_t>(settings.batch_size));
        b.examples.assign(vp.begin() + static_cast<std::ptrdiff_t>(at),
                          vp.begin() + static_cast<std::ptrdiff_t>(at + take));
        val_batches.push_back(std::move(b));
      }
    }

    EncodingCache cache;
    if (settings.precompute_encodings) {
      std::vector<ExampleRef> all_refs = pool;
      for (const auto& b : val_batches) {
        all_refs.insert(all_refs.end(), b.examples.begin(), b.examples.end());
      }
      cache = precompute_encodings(datasets, tm, all_refs, shared_layout);
    }

    const auto& stats = tm.stats;
    auto batch_loss = [&datasets, &hydra, &head, &stats, &shared_layout,
                       &extras_layout, &cache, settings](
                          ad::Tape* tape, const Batch& batch,
                          std::mt19937_64& rng, bool) -> ad::Tensor {
      auto extra_examples = build_batch_examples(datasets, stats, extras_layout,
                                                 batch, settings.window_days);
      std::vector<ad::Tensor> encoded;
      if (!cache.empty()) {
        encoded = encoded_steps_from_cache(cache, batch, settings.window_days,
                                           hydra.body.output_size());
      } else {
        auto shared_examples = build_batch_examples(
            datasets, stats, shared_layout, batch, settings.window_days);
        encoded =
            model::run_body_batch(nullptr, hydra, pack_steps(shared_examples), rng);
      }
      auto pred = model::hydra_head_on_encoding(tape, hydra, head, encoded,
                                                pack_steps(extra_examples), rng);
      return metrics::pinball_total_loss(tape, pred, pack_targets(extra_examples));
    };

    AdamOptimizer opt(hydra.head_params(head),
                      AdamConfig{tm.hp.learning_rate, 0.9, 0.999, 1e-8,
                                 settings.clip_norm});
    auto record = run_training_loop(
        pools, val_batches, batch_loss,
        [&head](bool on) { head.stack.training_mode = on; }, opt, settings,
        label_seed(seed, "head." + ds.id), "head." + ds.id);
    phase1.records.push_back(std::move(record));
    if (phase1.records.back().diverged) {
      throw TrainingError("hydra head for catchment " + ds.id + " diverged");
    }
  }
}

TrainResult train_model(const std::vector<CatchmentDataset>& datasets,
                        model::Architecture arch, const model::HyperParams& hp,
                        const std::vector<std::string>& extra_variables,
                        const data::SplitPlan& split,
                        const TrainSettings& settings, std::uint64_t seed) {
  if (arch == model::Architecture::kHydra) {
    auto result = train_hydra_phase1(datasets, hp, split, settings, seed);
    train_hydra_phase2(result, datasets, extra_variables, split, settings, seed);
    result.model.extra_variables = extra_variables;
    return result;
  }

  TrainResult result;
  result.model.arch = arch;
  result.model.hp = hp;
  result.model.settings = settings;
  result.model.extra_variables = extra_variables;

  const auto training_years = split.training_set();
  result.model.stats = data::fit_normalization(datasets, training_years);
  const auto& stats = result.model.stats;

  const std::set<int> val_years{split.validation_years.begin(),
                                split.validation_years.end()};

  if (arch == model::Architecture::kSingleCatchment) {
    // one independent model per catchment, each on its own record
    for (size_t c = 0; c < datasets.size(); ++c) {
      const auto& ds = datasets[c];
      const auto extras = available_extras(ds, extra_variables);
      auto layout = data::make_layout(stats, extras, false);
      auto init_rng = make_rng(seed, "init." + ds.id);
      auto m = model::init_baseline(arch, layout, hp, init_rng);

      std::vector<std::vector<ExampleRef>> pools{data::training_pool(
          datasets, static_cast<int>(c), training_years, settings.window_days,
          settings.months)};
      std::vector<Batch> val_batches;
      auto vp = data::evaluation_pool(datasets, static_cast<int>(c), val_years,
                                      settings.window_days, settings.months);
      for (size_t at = 0; at < vp.size(); at += settings.batch_size) {
        Batch b;
        b.catchment = static_cast<int>(c);
        const auto take =
            std::min(vp.size() - at, static_cast<size_t>(settings.batch_size));
        b.examples.assign(vp.begin() + static_cast<std::ptrdiff_t>(at),
                          vp.begin() + static_cast<std::ptrdiff_t>(at + take));
        val_batches.push_back(std::move(b));
      }

      AdamOptimizer opt(m.params(), AdamConfig{hp.learning_rate, 0.9, 0.999,
                                               1e-8, settings.clip_norm});
      auto& slot =
          result.model.per_catchment.emplace(ds.id, std::move(m)).first->second;
      auto record = run_training_loop(
          pools, val_batches,
          baseline_loss_fn(datasets, slot, stats, settings),
          [&slot](bool on) { slot.set_training(on); }, opt, settings,
          label_seed(seed, "model." + ds.id), "model." + ds.id);
      result.records.push_back(std::move(record));
      if (result.records.back().diverged) {
        throw TrainingError("single-catchment model for " + ds.id + " diverged");
      }
    }
    return result;
  }

  // the three global single-stack models
  std::vector<std::string> extras;
  bool with_flags = false;
  switch (arch) {
    case model::Architecture::kMultiNoQ:
      break;
    case model::Architecture::kMultiWithQ:
      extras = extra_variables;
      require_uniform_extras(datasets, extras, to_string(arch));
      break;
    case model::Architecture::kFlag:
      extras = extra_variables;
      with_flags = true;
      require_uniform_extras(datasets, extras, to_string(arch));
      break;
    default:
      throw Error("unhandled architecture");
  }
  auto layout = data::make_layout(stats, extras, with_flags);
  auto init_rng = make_rng(seed, "init");
  result.model.global_model = model::init_baseline(arch, layout, hp, init_rng);
  auto& m = *result.model.global_model;

  auto pools = training_pools_all(datasets, training_years, settings);
  auto val_batches = make_validation_batches(datasets, val_years, settings);
  AdamOptimizer opt(m.params(), AdamConfig{hp.learning_rate, 0.9, 0.999, 1e-8,
                                           settings.clip_norm});
  auto record = run_training_loop(
      pools, val_batches, baseline_loss_fn(datasets, m, stats, settings),
      [&m](bool on) { m.set_training(on); }, opt, settings, seed, "model");
  result.records.push_back(std::move(record));
  if (result.records.back().diverged) {
    throw TrainingError(to_string(arch) + " training diverged");
  }
  return result;
}

// ---------------------------------------------------------------------------

std::vector<std::string> TrainedModel::variants() const {
  switch (arch) {
    case model::Architecture::kSingleCatchment: return {"single_catchment"};
    case model::Architecture::kMultiNoQ: return {"multi_catchment_no_q"};
    case model::Architecture::kMultiWithQ: return {"multi_catchment_with_q"};
    case model::Architecture::kFlag: return {"flag_ungauged", "flag_gauged"};
    case model::Architecture::kHydra:
      return {"hydra_multi_head", "hydra_single_head"};
  }
  throw Error("unknown architecture");
}

bool TrainedModel::covers(const std::string& variant,
                          const std::string& catchment_id) const {
  if (variant == "hydra_single_head") {
    return hydra && hydra->catchment_heads.count(catchment_id) != 0;
  }
  if (variant == "single_catchment") {
    return per_catchment.count(catchment_id) != 0;
  }
  return true;
}

std::vector<metrics::QuantileTriple> TrainedModel::predict(
    const std::vector<CatchmentDataset>& datasets,
    const std::vector<ExampleRef>& refs, const std::string& variant) const {
  const auto known = variants();
  if (std::find(known.begin(), known.end(), variant) == known.end()) {
    throw ConfigError("variant '" + variant + "' is not produced by a " +
                      to_string(arch) + " run");
  }

  std::vector<metrics::QuantileTriple> out(refs.size());
  // group by catchment, keeping track of original positions
  std::map<int, std::vector<size_t>> by_catchment;
  for (size_t i = 0; i < refs.size(); ++i) {
    by_catchment[refs[i].catchment].push_back(i);
  }

  std::mt19937_64 rng(0);  // evaluation mode: rng is never observed
  constexpr size_t kChunk = 256;

  for (const auto& [c, indices] : by_catchment) {
    const auto& ds = datasets[static_cast<size_t>(c)];

    const model::BaselineModel* baseline = nullptr;
    const model::HydraHead* head = nullptr;
    if (arch == model::Architecture::kSingleCatchment) {
      auto it = per_catchment.find(ds.id);
      if (it == per_catchment.end()) {
        throw ConfigError("no single-catchment model for " + ds.id);
      }
      baseline = &it->second;
    } else if (arch == model::Architecture::kHydra) {
      if (variant == "hydra_single_head") {
        auto it = hydra->catchment_heads.find(ds.id);
        if (it == hydra->catchment_heads.end()) {
          throw ConfigError("no single-catchment head for " + ds.id);
        }
        head = &it->second;
      } else {
        head = &hydra->multi_head;
      }
    } else {
      baseline = &*global_model;
    }

    for (size_t at = 0; at < indices.size(); at += kChunk) {
      const size_t take = std::min(kChunk, indices.size() - at);
      Batch batch;
      batch.catchment = c;
      for (size_t i = 0; i < take; ++i) {
        batch.examples.push_back(refs[indices[at + i]]);
      }

      ad::Tensor pred;
      if (baseline) {
        auto examples = build_batch_examples(datasets, stats, baseline->layout,
                                             batch, settings.window_days);
        if (variant == "flag_ungauged") {
          for (auto& ex : examples) force_flag_mask(ex, baseline->layout);
        }
        pred = model::baseline_forward_batch(nullptr, *baseline,
                                             pack_steps(examples), rng);
      } else {
        auto shared_examples = build_batch_examples(
            datasets, stats, hydra->shared_layout, batch, settings.window_days);
        std::vector<ad::Tensor> extra_steps;
        if (head->is_single_catchment()) {
          data::FeatureLayout extras_layout;
          extras_layout.extras = head->extra_names;
          auto extra_examples = build_batch_examples(
              datasets, stats, extras_layout, batch, settings.window_days);
          extra_steps = pack_steps(extra_examples);
        }
        pred = model::hydra_forward_batch(nullptr, *hydra, *head,
                                          pack_steps(shared_examples),
                                          extra_steps, rng);
      }

      for (size_t i = 0; i < take; ++i) {
        const auto* row = pred.values().data() + 3 * i;
        out[indices[at + i]] = metrics::QuantileTriple{
            data::denormalize_target(stats, ds.id, row[0]),
            data::denormalize_target(stats, ds.id, row[1]),
            data::denormalize_target(stats, ds.id, row[2])};
      }
    }
  }
  return out;
}

}  // namespace hydra::train
