// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0

#include "bundle_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "checkpoint.hpp"

namespace hydra::cmd {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

json moments_to_json(const data::MomentPair& m) {
  return json{{"mean", m.mean}, {"stddev", m.stddev}};
}

data::MomentPair moments_from_json(const json& j) {
  return {j.at("mean").get<double>(), j.at("stddev").get<double>()};
}

json stats_to_json(const data::NormStats& stats) {
  json j;
  for (const auto& [k, v] : stats.drivers) j["drivers"][k] = moments_to_json(v);
  for (const auto& [k, v] : stats.statics) j["statics"][k] = moments_to_json(v);
  for (const auto& [k, v] : stats.target) j["target"][k] = moments_to_json(v);
  for (const auto& [id, inner] : stats.extras) {
    for (const auto& [k, v] : inner) j["extras"][id][k] = moments_to_json(v);
  }
  j["dropped"] = stats.dropped;
  j["warnings"] = stats.warnings;
  return j;
}

data::NormStats stats_from_json(const json& j) {
  data::NormStats stats;
  if (j.contains("drivers")) {
    for (const auto& [k, v] : j.at("drivers").items()) {
      stats.drivers[k] = moments_from_json(v);
    }
  }
  if (j.contains("statics")) {
    for (const auto& [k, v] : j.at("statics").items()) {
      stats.statics[k] = moments_from_json(v);
    }
  }
  for (const auto& [k, v] : j.at("target").items()) {
    stats.target[k] = moments_from_json(v);
  }
  if (j.contains("extras")) {
    for (const auto& [id, inner] : j.at("extras").items()) {
      for (const auto& [k, v] : inner.items()) {
        stats.extras[id][k] = moments_from_json(v);
      }
    }
  }
  stats.dropped = j.value("dropped", std::vector<std::string>{});
  stats.warnings = j.value("warnings", std::vector<std::string>{});
  return stats;
}

json hp_to_json(const model::HyperParams& hp) {
  return json{{"hidden_size", hp.hidden_size},
              {"num_layers", hp.num_layers},
              {"head_hidden_size", hp.head_hidden_size},
              {"head_num_layers", hp.head_num_layers},
              {"learning_rate", hp.learning_rate},
              {"dropout", hp.dropout}};
}

model::HyperParams hp_from_json(const json& j) {
  model::HyperParams hp;
  hp.hidden_size = j.at("hidden_size").get<std::int64_t>();
  hp.num_layers = j.at("num_layers").get<std::int64_t>();
  hp.head_hidden_size = j.at("head_hidden_size").get<std::int64_t>();
  hp.head_num_layers = j.at("head_num_layers").get<std::int64_t>();
  hp.learning_rate = j.at("learning_rate").get<double>();
  hp.dropout = j.at("dropout").get<double>();
  return hp;
}

json split_to_json(const data::SplitPlan& split) {
  return json{{"fold_id", split.fold_id},
              {"test_year", split.test_year},
              {"validation_years", split.validation_years},
              {"training_years", split.training_years}};
}

data::SplitPlan split_from_json(const json& j) {
  data::SplitPlan split;
  split.fold_id = j.at("fold_id").get<int>();
  split.test_year = j.at("test_year").get<int>();
  split.validation_years = j.at("validation_years").get<std::vector<int>>();
  split.training_years = j.at("training_years").get<std::vector<int>>();
  return split;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing " + path);
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  try {
    return json::parse(in);
  } catch (const std::exception& e) {
    throw DataError("invalid JSON in " + path + ": " + e.what());
  }
}

}  // namespace

void save_bundle(const std::string& dir, const train::TrainedModel& model,
                 const data::SplitPlan& split, std::uint64_t seed) {
  fs::create_directories(dir);
  json manifest;
  manifest["format"] = "hydra-checkpoint v1";
  manifest["architecture"] = model::to_string(model.arch);
  manifest["hyperparameters"] = hp_to_json(model.hp);
  manifest["window_days"] = model.settings.window_days;
  manifest["extra_variables"] = model.extra_variables;
  manifest["variants"] = model.variants();
  manifest["normalization"] = stats_to_json(model.stats);
  manifest["split"] = split_to_json(split);
  manifest["seed"] = seed;

  json components;
  if (model.global_model) {
    const std::string file = "params.txt";
    save_params((fs::path(dir) / file).string(), model.global_model->params());
    components["global"] = file;
    components["with_flags"] = model.global_model->layout.with_flags;
    components["extras"] = model.global_model->layout.extras;
  } else if (!model.per_catchment.empty()) {
    json per;
    for (const auto& [id, m] : model.per_catchment) {
      const std::string file = "params_" + id + ".txt";
      save_params((fs::path(dir) / file).string(), m.params());
      per[id] = json{{"file", file}, {"extras", m.layout.extras}};
    }
    components["per_catchment"] = per;
  } else if (model.hydra) {
    const auto& hydra = *model.hydra;
    std::vector<rnn::NamedParam> trunk = hydra.body_params();
    for (auto& p : hydra.head_params(hydra.multi_head)) trunk.push_back(p);
    save_params((fs::path(dir) / "params_body_multi.txt").string(), trunk);
    components["body_multi"] = "params_body_multi.txt";
    json heads;
    for (const auto& [id, head] : hydra.catchment_heads) {
      const std::string file = "params_head_" + id + ".txt";
      save_params((fs::path(dir) / file).string(), hydra.head_params(head));
      heads[id] = json{{"file", file}, {"extras", head.extra_names}};
    }
    components["heads"] = heads;
  } else {
    throw Error("cannot save an empty model bundle");
  }
  manifest["components"] = components;
  write_json((fs::path(dir) / "manifest.json").string(), manifest);
}

LoadedBundle load_bundle(const std::string& dir) {
  const auto manifest = read_json((fs::path(dir) / "manifest.json").string());
  if (manifest.value("format", "") != "hydra-checkpoint v1") {
    throw DataError("unrecognized checkpoint format in " + dir);
  }

  LoadedBundle out;
  auto& model = out.model;
  model.arch = model::architecture_from_string(
      manifest.at("architecture").get<std::string>());
  model.hp = hp_from_json(manifest.at("hyperparameters"));
  model.settings.window_days = manifest.at("window_days").get<std::int64_t>();
  model.extra_variables =
      manifest.at("extra_variables").get<std::vector<std::string>>();
  model.stats = stats_from_json(manifest.at("normalization"));
  out.split = split_from_json(manifest.at("split"));
  out.seed = manifest.at("seed").get<std::uint64_t>();

  const auto& components = manifest.at("components");
  auto rng = make_rng(0, "load");  // zero-init below, values overwritten

  if (components.contains("global")) {
    auto layout = data::make_layout(
        model.stats, components.at("extras").get<std::vector<std::string>>(),
        components.at("with_flags").get<bool>());
    auto m = model::init_baseline(model.arch, layout, model.hp, rng);
    bind_params(
        load_params((fs::path(dir) / components.at("global").get<std::string>())
                        .string()),
        m.params());
    model.global_model = std::move(m);
  } else if (components.contains("per_catchment")) {
    for (const auto& [id, entry] : components.at("per_catchment").items()) {
      auto layout = data::make_layout(
          model.stats, entry.at("extras").get<std::vector<std::string>>(), false);
      auto m = model::init_baseline(model.arch, layout, model.hp, rng);
      bind_params(
          load_params(
              (fs::path(dir) / entry.at("file").get<std::string>()).string()),
          m.params());
      model.per_catchment.emplace(id, std::move(m));
    }
  } else if (components.contains("body_multi")) {
    auto shared_layout = data::make_layout(model.stats, {}, false);
    auto hydra = model::init_hydra(shared_layout, model.hp, rng);
    if (components.contains("heads")) {
      for (const auto& [id, entry] : components.at("heads").items()) {
        model::add_catchment_head(
            hydra, id, entry.at("extras").get<std::vector<std::string>>(),
            model.hp, rng);
      }
    }
    std::vector<rnn::NamedParam> trunk = hydra.body_params();
    for (auto& p : hydra.head_params(hydra.multi_head)) trunk.push_back(p);
    bind_params(
        load_params(
            (fs::path(dir) / components.at("body_multi").get<std::string>())
                .string()),
        trunk);
    for (auto& [id, head] : hydra.catchment_heads) {
      const auto file =
          components.at("heads").at(id).at("file").get<std::string>();
      bind_params(load_params((fs::path(dir) / file).string()),
                  hydra.head_params(head));
    }
    hydra.set_training(false);
    model.hydra = std::move(hydra);
  } else {
    throw DataError("checkpoint " + dir + " lists no model components");
  }
  return out;
}

std::vector<std::string> forecast_columns(const train::TrainedModel& model,
                                          const std::string& variant,
                                          const std::string& catchment_id) {
  std::vector<std::string> cols;
  const data::FeatureLayout* base_layout = nullptr;
  std::vector<std::string> extras;

  if (model.global_model) {
    base_layout = &model.global_model->layout;
    extras = model.global_model->layout.extras;
  } else if (!model.per_catchment.empty()) {
    auto it = model.per_catchment.find(catchment_id);
    if (it == model.per_catchment.end()) {
      throw ConfigError("no model for catchment " + catchment_id);
    }
    base_layout = &it->second.layout;
    extras = it->second.layout.extras;
  } else if (model.hydra) {
    base_layout = &model.hydra->shared_layout;
    if (variant == "hydra_single_head") {
      auto it = model.hydra->catchment_heads.find(catchment_id);
      if (it == model.hydra->catchment_heads.end()) {
        throw ConfigError("no single-catchment head for " + catchment_id);
      }
      extras = it->second.extra_names;
    }
  } else {
    throw Error("empty model bundle");
  }
  for (const auto& n : base_layout->drivers) cols.push_back(n);
  for (const auto& n : base_layout->statics) cols.push_back(n);
  for (const auto& n : extras) cols.push_back(n);
  return cols;
}

metrics::QuantileTriple forecast_window(const train::TrainedModel& model,
                                        const std::string& variant,
                                        const std::string& catchment_id,
                                        const std::vector<double>& window,
                                        std::int64_t window_days) {
  const auto known = model.variants();
  if (std::find(known.begin(), known.end(), variant) == known.end()) {
    throw ConfigError("variant '" + variant + "' not available in this bundle");
  }
  const auto cols = forecast_columns(model, variant, catchment_id);
  const auto n_cols = static_cast<std::int64_t>(cols.size());
  if (window_days < 1 ||
      static_cast<std::int64_t>(window.size()) != window_days * n_cols) {
    throw DimensionError("forecast window must hold " +
                         std::to_string(window_days) + " x " +
                         std::to_string(n_cols) + " values, got " +
                         std::to_string(window.size()));
  }

  const auto& stats = model.stats;
  const auto n_drivers =
      model.hydra ? model.hydra->shared_layout.drivers.size()
                  : (model.global_model ? model.global_model->layout.drivers.size()
                                        : model.per_catchment.at(catchment_id)
                                              .layout.drivers.size());
  const auto n_statics = model.hydra
                             ? model.hydra->shared_layout.statics.size()
                             : (model.global_model
                                    ? model.global_model->layout.statics.size()
                                    : model.per_catchment.at(catchment_id)
                                          .layout.statics.size());
  const auto n_extras = cols.size() - n_drivers - n_statics;

  // normalize into the model's feature space
  auto normalize_cell = [&](size_t col, double raw) -> double {
    const auto& name = cols[col];
    if (col < n_drivers) {
      const auto& m = stats.drivers.at(name);
      return (raw - m.mean) / m.stddev;
    }
    if (col < n_drivers + n_statics) {
      const auto& m = stats.statics.at(name);
      return (raw - m.mean) / m.stddev;
    }
    if (name == data::kDischargeColumn) {
      return data::normalize_target(stats, catchment_id, raw);
    }
    const auto& m = stats.extras.at(catchment_id).at(name);
    const double x = data::is_discharge_like(name) ? std::log1p(raw) : raw;
    return (x - m.mean) / m.stddev;
  };

  const bool flags = model.global_model && model.global_model->layout.with_flags;
  const auto feature_count =
      n_cols + (flags ? static_cast<std::int64_t>(n_extras) : 0);
  std::vector<double> normalized(
      static_cast<size_t>(window_days * feature_count));
  for (std::int64_t t = 0; t < window_days; ++t) {
    for (std::int64_t c = 0; c < n_cols; ++c) {
      normalized[static_cast<size_t>(t * feature_count + c)] = normalize_cell(
          static_cast<size_t>(c), window[static_cast<size_t>(t * n_cols + c)]);
    }
    if (flags) {
      for (std::int64_t e = 0; e < static_cast<std::int64_t>(n_extras); ++e) {
        normalized[static_cast<size_t>(t * feature_count + n_cols + e)] = 1.0;
      }
    }
  }

  std::mt19937_64 rng(0);  // evaluation mode
  ad::Tensor pred;
  if (model.hydra) {
    const auto shared_width =
        static_cast<std::int64_t>(n_drivers + n_statics);
    std::vector<double> shared_vals(
        static_cast<size_t>(window_days * shared_width));
    std::vector<double> extra_vals(
        static_cast<size_t>(window_days) * n_extras);
    for (std::int64_t t = 0; t < window_days; ++t) {
      std::copy_n(normalized.data() + t * feature_count, shared_width,
                  shared_vals.data() + t * shared_width);
      std::copy_n(normalized.data() + t * feature_count + shared_width,
                  static_cast<std::int64_t>(n_extras),
                  extra_vals.data() +
                      t * static_cast<std::int64_t>(n_extras));
    }
    ad::Tensor shared =
        ad::Tensor::leaf({window_days, shared_width}, std::move(shared_vals));
    std::optional<ad::Tensor> extra;
    const auto& head = variant == "hydra_single_head"
                           ? model.hydra->catchment_heads.at(catchment_id)
                           : model.hydra->multi_head;
    if (variant == "hydra_single_head") {
      extra = ad::Tensor::leaf(
          {window_days, static_cast<std::int64_t>(n_extras)},
          std::move(extra_vals));
    }
    pred = model::hydra_forward(nullptr, *model.hydra, head, shared, extra, rng);
  } else {
    const model::BaselineModel& m =
        model.global_model ? *model.global_model
                           : model.per_catchment.at(catchment_id);
    data::TrainingExample ex;
    ex.window_days = window_days;
    ex.feature_count = feature_count;
    ex.window = std::move(normalized);
    if (variant == "flag_ungauged") {
      train::force_flag_mask(ex, m.layout);
    }
    ad::Tensor w =
        ad::Tensor::leaf({window_days, feature_count}, std::move(ex.window));
    pred = model::baseline_forward(nullptr, m, w, rng);
  }

  return metrics::QuantileTriple{
      data::denormalize_target(stats, catchment_id, pred.values()[0]),
      data::denormalize_target(stats, catchment_id, pred.values()[1]),
      data::denormalize_target(stats, catchment_id, pred.values()[2])};
}

}  // namespace hydra::cmd
