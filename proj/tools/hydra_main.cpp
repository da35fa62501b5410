// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Builds a run-config JSON from an optional
// config file plus flag overrides and drives the shared library through
// its C interface.
//
// Exit codes: 0 success, 2 configuration error, 3 data error,
// 4 training failure, 5 I/O error, 6 internal error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hydra/hydra.h"

namespace {

using json = nlohmann::ordered_json;

int fail_with(const char* what, int code) {
  std::cerr << "error: " << what << "\n";
  return code;
}

int finish(hydra_status status) {
  if (status == HYDRA_OK) return 0;
  return fail_with(hydra_last_error(), static_cast<int>(status));
}

struct CommonFlags {
  std::string workdir = ".";
  std::string config_file;
  std::string data_dir;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const std::exception& e) {
    throw CLI::ValidationError("--config", std::string("invalid JSON: ") +
                                               e.what());
  }
}

void add_common(CLI::App* cmd, CommonFlags& common) {
  cmd->add_option("--workdir", common.workdir,
                  "Base directory for all relative paths");
  cmd->add_option("--config", common.config_file,
                  "JSON config file; flags override its values");
  cmd->add_option("--data", common.data_dir, "Dataset directory");
  cmd->add_option("--out", common.out_dir, "Output directory for artifacts");
  cmd->add_option("--seed", common.seed, "Root random seed")
      ->each([&common](const std::string&) { common.seed_set = true; });
}

json base_config(const CommonFlags& common) {
  json cfg = json::object();
  if (!common.config_file.empty()) cfg = load_config_file(common.config_file);
  cfg["workdir"] = common.workdir;
  if (!common.data_dir.empty()) cfg["data_dir"] = common.data_dir;
  if (!common.out_dir.empty()) cfg["out_dir"] = common.out_dir;
  if (common.seed_set) cfg["seed"] = common.seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("hydra-lstm river discharge forecasting (") +
               hydra_version() + ")"};
  app.require_subcommand(1);

  // ---- synth ----
  CommonFlags synth_common;
  int synth_catchments = -1, synth_years = -1, synth_start = -1;
  double synth_upstream = -1.0;
  auto* synth = app.add_subcommand(
      "synth", "Generate synthetic catchment CSVs into the data directory");
  add_common(synth, synth_common);
  synth->add_option("--catchments", synth_catchments, "Number of catchments");
  synth->add_option("--years", synth_years, "Record length in years");
  synth->add_option("--start-year", synth_start, "First calendar year");
  synth->add_option("--upstream-fraction", synth_upstream,
                    "Fraction of catchments with an upstream-gauge extra");

  // ---- shared model/training flags for train & crossval & sweep ----
  struct ModelFlags {
    std::string arch;
    std::int64_t hidden = -1, layers = -1, head_hidden = -1, head_layers = -1;
    double lr = -1.0, dropout = -1.0;
    std::int64_t window = -1, batch = -1;
    int max_epochs = -1, patience = -1;
    double mask_probability = -1.0;
    std::vector<std::string> extras;
    bool extras_set = false;
    int month_first = 0, month_last = 0;
  };
  auto add_model_flags = [](CLI::App* cmd, ModelFlags& f) {
    cmd->add_option("--arch", f.arch,
                    "single_catchment | multi_catchment_no_q | "
                    "multi_catchment_with_q | flag | hydra");
    cmd->add_option("--hidden", f.hidden, "LSTM hidden size (body for hydra)");
    cmd->add_option("--layers", f.layers, "LSTM layer count (body for hydra)");
    cmd->add_option("--head-hidden", f.head_hidden, "Hydra head hidden size");
    cmd->add_option("--head-layers", f.head_layers, "Hydra head layer count");
    cmd->add_option("--lr", f.lr, "Learning rate");
    cmd->add_option("--dropout", f.dropout, "Inter-layer dropout rate");
    cmd->add_option("--window", f.window, "Lookback window in days");
    cmd->add_option("--batch", f.batch, "Batch size");
    cmd->add_option("--max-epochs", f.max_epochs, "Epoch cap");
    cmd->add_option("--patience", f.patience, "Early-stopping patience");
    cmd->add_option("--mask-probability", f.mask_probability,
                    "Flag-model training mask probability");
    cmd->add_option("--extra", f.extras,
                    "Extra variable (repeatable); default discharge_m3_s")
        ->each([&f](const std::string&) { f.extras_set = true; });
    cmd->add_option("--month-first", f.month_first,
                    "Restrict forecasts to months >= this (with --month-last)");
    cmd->add_option("--month-last", f.month_last,
                    "Restrict forecasts to months <= this (with --month-first)");
  };
  auto apply_model_flags = [](json& cfg, const ModelFlags& f) {
    if (!f.arch.empty()) cfg["architecture"] = f.arch;
    auto& m = cfg["model"];
    if (!m.is_object()) m = json::object();
    if (f.hidden >= 0) m["hidden_size"] = f.hidden;
    if (f.layers >= 0) m["num_layers"] = f.layers;
    if (f.head_hidden >= 0) m["head_hidden_size"] = f.head_hidden;
    if (f.head_layers >= 0) m["head_num_layers"] = f.head_layers;
    if (f.lr >= 0) m["learning_rate"] = f.lr;
    if (f.dropout >= 0) m["dropout"] = f.dropout;
    if (m.empty()) cfg.erase("model");
    auto& t = cfg["training"];
    if (!t.is_object()) t = json::object();
    if (f.window >= 0) t["window_days"] = f.window;
    if (f.batch >= 0) t["batch_size"] = f.batch;
    if (f.max_epochs >= 0) t["max_epochs"] = f.max_epochs;
    if (f.patience >= 0) t["patience"] = f.patience;
    if (f.mask_probability >= 0) t["mask_probability"] = f.mask_probability;
    if (f.month_first > 0) t["month_first"] = f.month_first;
    if (f.month_last > 0) t["month_last"] = f.month_last;
    if (t.empty()) cfg.erase("training");
    if (f.extras_set) cfg["extra_variables"] = f.extras;
  };

  CommonFlags train_common;
  ModelFlags train_flags;
  auto* train = app.add_subcommand(
      "train", "Train one model on a single train/val/test split");
  add_common(train, train_common);
  add_model_flags(train, train_flags);

  CommonFlags cv_common;
  ModelFlags cv_flags;
  int cv_folds = -1, cv_jobs = -1;
  auto* crossval = app.add_subcommand(
      "crossval", "Leave-one-year-out cross-validation over n folds");
  add_common(crossval, cv_common);
  add_model_flags(crossval, cv_flags);
  crossval->add_option("--folds", cv_folds, "Number of test-year folds");
  crossval->add_option("--jobs", cv_jobs, "Parallel fold workers");

  CommonFlags sweep_common;
  ModelFlags sweep_flags;
  std::vector<int> sweep_val_years;
  auto* sweep = app.add_subcommand(
      "sweep", "Train every grid cell against a fixed validation split");
  add_common(sweep, sweep_common);
  add_model_flags(sweep, sweep_flags);
  sweep->add_option("--val-years", sweep_val_years,
                    "The two held-out validation years")
      ->expected(2);

  CommonFlags report_common;
  std::vector<std::string> report_runs;
  auto* report = app.add_subcommand(
      "report", "Comparison tables and plot CSVs from completed runs");
  add_common(report, report_common);
  report->add_option("--run", report_runs, "Run directory (repeatable)")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      auto cfg = base_config(synth_common);
      auto& s = cfg["synth"];
      if (!s.is_object()) s = json::object();
      if (synth_catchments > 0) s["n_catchments"] = synth_catchments;
      if (synth_years > 0) s["n_years"] = synth_years;
      if (synth_start > 0) s["start_year"] = synth_start;
      if (synth_upstream >= 0) s["upstream_fraction"] = synth_upstream;
      if (s.empty()) cfg.erase("synth");
      return finish(hydra_run_synth(cfg.dump().c_str()));
    }
    if (train->parsed()) {
      auto cfg = base_config(train_common);
      apply_model_flags(cfg, train_flags);
      return finish(hydra_run_train(cfg.dump().c_str()));
    }
    if (crossval->parsed()) {
      auto cfg = base_config(cv_common);
      apply_model_flags(cfg, cv_flags);
      if (cv_folds > 0) cfg["n_folds"] = cv_folds;
      if (cv_jobs > 0) cfg["jobs"] = cv_jobs;
      return finish(hydra_run_crossval(cfg.dump().c_str()));
    }
    if (sweep->parsed()) {
      auto cfg = base_config(sweep_common);
      apply_model_flags(cfg, sweep_flags);
      if (!sweep_val_years.empty()) {
        cfg["sweep_validation_years"] = sweep_val_years;
      }
      return finish(hydra_run_sweep(cfg.dump().c_str()));
    }
    if (report->parsed()) {
      auto cfg = base_config(report_common);
      return finish(
          hydra_run_report(cfg.dump().c_str(), json(report_runs).dump().c_str()));
    }
  } catch (const std::exception& e) {
    return fail_with(e.what(), 2);
  }
  return fail_with("no subcommand given", 2);
}
