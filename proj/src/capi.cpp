// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0
//
// extern-C shim over the C++ core. All exceptions are converted to
// status codes with a thread-local message.

#include "hydra/hydra.h"

#include <set>
#include <string>
#include <vector>

#include "bundle_io.hpp"
#include "commands.hpp"

namespace {

thread_local std::string g_last_error;

using json = nlohmann::ordered_json;

hydra_status to_status(int exit_code) {
  switch (exit_code) {
    case 2: return HYDRA_ERROR_CONFIG;
    case 3: return HYDRA_ERROR_DATA;
    case 4: return HYDRA_ERROR_TRAINING;
    case 5: return HYDRA_ERROR_IO;
    default: return HYDRA_ERROR_INTERNAL;
  }
}

template <typename Fn>
hydra_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return HYDRA_OK;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return to_status(hydra::cmd::exit_code_for_current_exception());
  } catch (...) {
    g_last_error = "unknown error";
    return HYDRA_ERROR_INTERNAL;
  }
}

hydra::cmd::RunConfig parse_config(const char* config_json) {
  if (!config_json) throw hydra::ConfigError("config JSON is null");
  json j;
  try {
    j = json::parse(config_json);
  } catch (const std::exception& e) {
    throw hydra::ConfigError(std::string("config is not valid JSON: ") +
                             e.what());
  }
  return hydra::cmd::config_from_json(j);
}

}  // namespace

struct hydra_datasets {
  std::vector<hydra::data::CatchmentDataset> items;
};

struct hydra_model {
  hydra::cmd::LoadedBundle bundle;
  std::vector<std::string> variants;
  // scratch for returning stable const char* column names
  mutable std::vector<std::string> column_scratch;
};

extern "C" {

const char* hydra_version(void) { return "hydra-lstm 1.0.0"; }

const char* hydra_last_error(void) { return g_last_error.c_str(); }

hydra_status hydra_datasets_synthesize(const char* config_json,
                                       hydra_datasets** out) {
  return guarded([&]() {
    if (!out) throw hydra::ConfigError("output handle is null");
    auto config = parse_config(config_json);
    auto items = hydra::data::synthesize_catchments(config.synth, config.seed);
    *out = new hydra_datasets{std::move(items)};
  });
}

hydra_status hydra_datasets_open(const char* data_dir,
                                 const char* extra_variables_json,
                                 hydra_datasets** out) {
  return guarded([&]() {
    if (!out) throw hydra::ConfigError("output handle is null");
    if (!data_dir) throw hydra::ConfigError("data_dir is null");
    std::set<std::string> forced;
    if (extra_variables_json) {
      json j;
      try {
        j = json::parse(extra_variables_json);
      } catch (const std::exception& e) {
        throw hydra::ConfigError(
            std::string("extra_variables is not valid JSON: ") + e.what());
      }
      for (const auto& v : j) forced.insert(v.get<std::string>());
      forced.erase(hydra::data::kDischargeColumn);
    }
    auto items = hydra::data::ingest_dir(data_dir, forced);
    *out = new hydra_datasets{std::move(items)};
  });
}

hydra_status hydra_datasets_write(const hydra_datasets* datasets,
                                  const char* data_dir) {
  return guarded([&]() {
    if (!datasets || !data_dir) {
      throw hydra::ConfigError("null argument to hydra_datasets_write");
    }
    hydra::data::export_csv(datasets->items, data_dir);
  });
}

int hydra_datasets_count(const hydra_datasets* datasets) {
  return datasets ? static_cast<int>(datasets->items.size()) : 0;
}

const char* hydra_datasets_catchment_id(const hydra_datasets* datasets,
                                        int index) {
  if (!datasets || index < 0 ||
      index >= static_cast<int>(datasets->items.size())) {
    return nullptr;
  }
  return datasets->items[static_cast<size_t>(index)].id.c_str();
}

void hydra_datasets_close(hydra_datasets* datasets) { delete datasets; }

hydra_status hydra_run_synth(const char* config_json) {
  return guarded([&]() { hydra::cmd::cmd_synth(parse_config(config_json)); });
}

hydra_status hydra_run_train(const char* config_json) {
  return guarded([&]() { hydra::cmd::cmd_train(parse_config(config_json)); });
}

hydra_status hydra_run_crossval(const char* config_json) {
  return guarded([&]() { hydra::cmd::cmd_crossval(parse_config(config_json)); });
}

hydra_status hydra_run_sweep(const char* config_json) {
  return guarded([&]() { hydra::cmd::cmd_sweep(parse_config(config_json)); });
}

hydra_status hydra_run_report(const char* config_json,
                              const char* run_dirs_json) {
  return guarded([&]() {
    auto config = parse_config(config_json);
    if (!run_dirs_json) throw hydra::ConfigError("run_dirs is null");
    json j;
    try {
      j = json::parse(run_dirs_json);
    } catch (const std::exception& e) {
      throw hydra::ConfigError(std::string("run_dirs is not valid JSON: ") +
                               e.what());
    }
    std::vector<std::string> dirs;
    for (const auto& v : j) dirs.push_back(v.get<std::string>());
    hydra::cmd::cmd_report(config, dirs);
  });
}

hydra_status hydra_model_open(const char* checkpoint_dir, hydra_model** out) {
  return guarded([&]() {
    if (!out) throw hydra::ConfigError("output handle is null");
    if (!checkpoint_dir) throw hydra::ConfigError("checkpoint_dir is null");
    auto bundle = hydra::cmd::load_bundle(checkpoint_dir);
    auto variants = bundle.model.variants();
    *out = new hydra_model{std::move(bundle), std::move(variants), {}};
  });
}

void hydra_model_close(hydra_model* model) { delete model; }

int64_t hydra_model_window_days(const hydra_model* model) {
  return model ? model->bundle.model.settings.window_days : 0;
}

const char* hydra_model_variant(const hydra_model* model, int index) {
  if (!model || index < 0 ||
      index >= static_cast<int>(model->variants.size())) {
    return nullptr;
  }
  return model->variants[static_cast<size_t>(index)].c_str();
}

hydra_status hydra_model_num_inputs(const hydra_model* model,
                                    const char* variant,
                                    const char* catchment_id, int* out_count) {
  return guarded([&]() {
    if (!model || !variant || !catchment_id || !out_count) {
      throw hydra::ConfigError("null argument to hydra_model_num_inputs");
    }
    *out_count = static_cast<int>(
        hydra::cmd::forecast_columns(model->bundle.model, variant, catchment_id)
            .size());
  });
}

hydra_status hydra_model_input_name(const hydra_model* model,
                                    const char* variant,
                                    const char* catchment_id, int index,
                                    const char** out_name) {
  return guarded([&]() {
    if (!model || !variant || !catchment_id || !out_name) {
      throw hydra::ConfigError("null argument to hydra_model_input_name");
    }
    model->column_scratch = hydra::cmd::forecast_columns(model->bundle.model,
                                                         variant, catchment_id);
    if (index < 0 ||
        index >= static_cast<int>(model->column_scratch.size())) {
      throw hydra::ConfigError("input index " + std::to_string(index) +
                               " out of range");
    }
    *out_name = model->column_scratch[static_cast<size_t>(index)].c_str();
  });
}

hydra_status hydra_model_forecast(const hydra_model* model, const char* variant,
                                  const char* catchment_id,
                                  const double* window, int64_t window_days,
                                  int64_t num_inputs, double out_quantiles[3]) {
  return guarded([&]() {
    if (!model || !variant || !catchment_id || !window || !out_quantiles) {
      throw hydra::ConfigError("null argument to hydra_model_forecast");
    }
    std::vector<double> values(
        window, window + static_cast<size_t>(window_days * num_inputs));
    const auto expected = hydra::cmd::forecast_columns(model->bundle.model,
                                                       variant, catchment_id);
    if (num_inputs != static_cast<int64_t>(expected.size())) {
      throw hydra::DimensionError(
          "forecast expects " + std::to_string(expected.size()) +
          " input columns, got " + std::to_string(num_inputs));
    }
    auto triple = hydra::cmd::forecast_window(model->bundle.model, variant,
                                              catchment_id, values, window_days);
    out_quantiles[0] = triple.q10;
    out_quantiles[1] = triple.q50;
    out_quantiles[2] = triple.q90;
  });
}

}  // extern "C"
