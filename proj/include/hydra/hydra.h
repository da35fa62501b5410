/* Copyright 2026 The hydra-lstm Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the hydra-lstm library: probabilistic next-day river
 * discharge forecasting with a shared encoding body and swappable
 * multi-/single-catchment prediction heads, plus the baseline
 * architectures, training drivers, and evaluation reports.
 *
 * Conventions:
 *   - every fallible call returns a hydra_status; 0 means success
 *   - on failure, hydra_last_error() holds a thread-local message
 *   - objects are opaque handles released with their _close function
 *   - configuration is passed as JSON text mirroring the CLI's
 *     resolved_config.json schema (see the project README)
 */

#ifndef HYDRA_H_
#define HYDRA_H_

#include <stdint.h>

#if defined(_WIN32)
#if defined(HYDRA_BUILD_SHARED)
#define HYDRA_API __declspec(dllexport)
#else
#define HYDRA_API __declspec(dllimport)
#endif
#else
#define HYDRA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hydra_status {
  HYDRA_OK = 0,
  HYDRA_ERROR_CONFIG = 2,
  HYDRA_ERROR_DATA = 3,
  HYDRA_ERROR_TRAINING = 4,
  HYDRA_ERROR_IO = 5,
  HYDRA_ERROR_INTERNAL = 6
} hydra_status;

HYDRA_API const char* hydra_version(void);

/* Message for the most recent failure on this thread; empty string when
 * the last call succeeded. The pointer stays valid until the next
 * library call on the same thread. */
HYDRA_API const char* hydra_last_error(void);

/* ------------------------------------------------------------------ */
/* Datasets: a collection of per-catchment daily records.              */

typedef struct hydra_datasets hydra_datasets;

/* Generates synthetic catchments from the "synth" section of the
 * config JSON (seed comes from the config's "seed"). */
HYDRA_API hydra_status hydra_datasets_synthesize(const char* config_json,
                                                 hydra_datasets** out);

/* Loads per-catchment CSVs plus static_attributes.csv from a directory.
 * extra_variables_json is an optional JSON array of column names to
 * treat as catchment-specific extras (NULL for none). */
HYDRA_API hydra_status hydra_datasets_open(const char* data_dir,
                                           const char* extra_variables_json,
                                           hydra_datasets** out);

HYDRA_API hydra_status hydra_datasets_write(const hydra_datasets* datasets,
                                            const char* data_dir);

HYDRA_API int hydra_datasets_count(const hydra_datasets* datasets);
HYDRA_API const char* hydra_datasets_catchment_id(const hydra_datasets* datasets,
                                                  int index);
HYDRA_API void hydra_datasets_close(hydra_datasets* datasets);

/* ------------------------------------------------------------------ */
/* Config-driven commands. Each writes its artifacts under the config's
 * workdir/out_dir (see README for the directory layout).              */

HYDRA_API hydra_status hydra_run_synth(const char* config_json);
HYDRA_API hydra_status hydra_run_train(const char* config_json);
HYDRA_API hydra_status hydra_run_crossval(const char* config_json);
HYDRA_API hydra_status hydra_run_sweep(const char* config_json);

/* run_dirs_json: JSON array of run directories relative to workdir. */
HYDRA_API hydra_status hydra_run_report(const char* config_json,
                                        const char* run_dirs_json);

/* ------------------------------------------------------------------ */
/* Trained models: load a checkpoint directory and forecast.           */

typedef struct hydra_model hydra_model;

HYDRA_API hydra_status hydra_model_open(const char* checkpoint_dir,
                                        hydra_model** out);
HYDRA_API void hydra_model_close(hydra_model* model);

HYDRA_API int64_t hydra_model_window_days(const hydra_model* model);

/* Evaluation variants this checkpoint provides (e.g. "hydra_multi_head").
 * Index from 0; returns NULL past the end. */
HYDRA_API const char* hydra_model_variant(const hydra_model* model, int index);

/* Number and names of the input columns expected by forecast() for one
 * catchment under one variant (drivers, then static attributes, then
 * extra variables; flag columns are derived internally). */
HYDRA_API hydra_status hydra_model_num_inputs(const hydra_model* model,
                                              const char* variant,
                                              const char* catchment_id,
                                              int* out_count);
HYDRA_API hydra_status hydra_model_input_name(const hydra_model* model,
                                              const char* variant,
                                              const char* catchment_id,
                                              int index, const char** out_name);

/* One next-day forecast from a raw physical-unit window: row-major
 * [window_days x num_inputs], trailing days ending the day before the
 * forecast date. Returns the 10/50/90% discharge thresholds (m^3/s). */
HYDRA_API hydra_status hydra_model_forecast(const hydra_model* model,
                                            const char* variant,
                                            const char* catchment_id,
                                            const double* window,
                                            int64_t window_days,
                                            int64_t num_inputs,
                                            double out_quantiles[3]);

#ifdef __cplusplus
}
#endif

#endif /* HYDRA_H_ */
