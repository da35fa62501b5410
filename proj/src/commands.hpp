// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0
//
// The run-configuration schema and the five top-level operations
// (synth, train, crossval, sweep, report). Every run writes its
// resolved configuration next to its outputs.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "evaluate.hpp"
#include "synth.hpp"

namespace hydra::cmd {

struct RunConfig {
  std::string workdir = ".";
  std::string data_dir = "data";
  std::string out_dir = "run";

  std::uint64_t seed = 42;
  std::string architecture = "multi_catchment_no_q";
  std::optional<model::HyperParams> hp;  // defaults per architecture
  std::vector<std::string> extra_variables{data::kDischargeColumn};

  train::TrainSettings training;
  int n_folds = 1;
  int jobs = 1;
  std::vector<int> sweep_validation_years;  // also excluded from CV test years

  data::SynthConfig synth;
  std::optional<train::GridSpec> grid;  // sweep override

  model::HyperParams resolved_hp() const;
  std::string data_path() const;
  std::string out_path() const;
};

// Strict parse: unknown keys are configuration errors.
RunConfig config_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json config_to_json(const RunConfig& config);

void cmd_synth(const RunConfig& config);
void cmd_train(const RunConfig& config);
void cmd_crossval(const RunConfig& config);
void cmd_sweep(const RunConfig& config);
// Compares completed runs; run_dirs are workdir-relative.
void cmd_report(const RunConfig& config, const std::vector<std::string>& run_dirs);

// Shared with the C API: maps exceptions to the documented exit codes.
int exit_code_for_current_exception();

}  // namespace hydra::cmd
