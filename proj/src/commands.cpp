// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "bundle_io.hpp"

namespace hydra::cmd {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

void reject_unknown_keys(const json& j, const std::vector<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, unused] : j.items()) {
    (void)unused;
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

data::Range range_from_json(const json& j, const std::string& key) {
  auto arr = j.get<std::vector<double>>();
  if (arr.size() != 2) {
    throw ConfigError("synth range '" + key + "' must be [lo, hi]");
  }
  return {arr[0], arr[1]};
}

json range_to_json(const data::Range& r) { return json::array({r.lo, r.hi}); }

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing " + path);
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  try {
    return json::parse(in);
  } catch (const std::exception& e) {
    throw DataError("invalid JSON in " + path + ": " + e.what());
  }
}

}  // namespace

model::HyperParams RunConfig::resolved_hp() const {
  if (hp) return *hp;
  return model::default_hyperparams(
      model::architecture_from_string(architecture));
}

std::string RunConfig::data_path() const {
  return (fs::path(workdir) / data_dir).string();
}

std::string RunConfig::out_path() const {
  return (fs::path(workdir) / out_dir).string();
}

RunConfig config_from_json(const json& j) {
  reject_unknown_keys(
      j,
      {"workdir", "data_dir", "out_dir", "seed", "architecture", "model",
       "extra_variables", "training", "n_folds", "jobs",
       "sweep_validation_years", "synth", "grid"},
      "run config");

  RunConfig c;
  c.workdir = j.value("workdir", c.workdir);
  c.data_dir = j.value("data_dir", c.data_dir);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.seed = j.value("seed", c.seed);
  c.architecture = j.value("architecture", c.architecture);
  model::architecture_from_string(c.architecture);  // validate early
  c.extra_variables = j.value("extra_variables", c.extra_variables);
  c.n_folds = j.value("n_folds", c.n_folds);
  c.jobs = j.value("jobs", c.jobs);
  c.sweep_validation_years =
      j.value("sweep_validation_years", c.sweep_validation_years);
  if (c.n_folds < 1) throw ConfigError("n_folds must be >= 1");
  if (c.jobs < 1) throw ConfigError("jobs must be >= 1");

  if (j.contains("model")) {
    const auto& m = j.at("model");
    reject_unknown_keys(m,
                        {"hidden_size", "num_layers", "head_hidden_size",
                         "head_num_layers", "learning_rate", "dropout"},
                        "model");
    auto hp = model::default_hyperparams(
        model::architecture_from_string(c.architecture));
    hp.hidden_size = m.value("hidden_size", hp.hidden_size);
    hp.num_layers = m.value("num_layers", hp.num_layers);
    hp.head_hidden_size = m.value("head_hidden_size", hp.head_hidden_size);
    hp.head_num_layers = m.value("head_num_layers", hp.head_num_layers);
    hp.learning_rate = m.value("learning_rate", hp.learning_rate);
    hp.dropout = m.value("dropout", hp.dropout);
    c.hp = hp;
  }

  if (j.contains("training")) {
    const auto& t = j.at("training");
    reject_unknown_keys(t,
                        {"window_days", "batch_size", "max_epochs", "patience",
                         "clip_norm", "mask_probability",
                         "precompute_encodings", "month_first", "month_last"},
                        "training");
    c.training.window_days = t.value("window_days", c.training.window_days);
    c.training.batch_size = t.value("batch_size", c.training.batch_size);
    c.training.max_epochs = t.value("max_epochs", c.training.max_epochs);
    c.training.patience = t.value("patience", c.training.patience);
    c.training.clip_norm = t.value("clip_norm", c.training.clip_norm);
    c.training.mask_probability =
        t.value("mask_probability", c.training.mask_probability);
    c.training.precompute_encodings =
        t.value("precompute_encodings", c.training.precompute_encodings);
    const bool has_first = t.contains("month_first") && !t.at("month_first").is_null();
    const bool has_last = t.contains("month_last") && !t.at("month_last").is_null();
    if (has_first != has_last) {
      throw ConfigError("month_first and month_last must be set together");
    }
    if (has_first) {
      data::MonthFilter f{t.at("month_first").get<int>(),
                          t.at("month_last").get<int>()};
      if (f.first_month < 1 || f.first_month > 12 || f.last_month < 1 ||
          f.last_month > 12) {
        throw ConfigError("month filter values must lie in 1..12");
      }
      c.training.months = f;
    }
  }

  if (j.contains("synth")) {
    const auto& s = j.at("synth");
    reject_unknown_keys(
        s,
        {"n_catchments", "n_years", "start_year", "upstream_fraction",
         "reservoir_retention", "outflow_fraction", "area_km2",
         "gauge_elevation_m", "temperature_amplitude_k", "wet_day_probability",
         "wet_day_precip_mm", "evaporation_coefficient", "year_wetness",
         "snow_threshold_k", "melt_rate_mm_per_k", "discharge_noise",
         "initial_storage_mm"},
        "synth");
    auto& cfg = c.synth;
    cfg.n_catchments = s.value("n_catchments", cfg.n_catchments);
    cfg.n_years = s.value("n_years", cfg.n_years);
    cfg.start_year = s.value("start_year", cfg.start_year);
    cfg.upstream_fraction = s.value("upstream_fraction", cfg.upstream_fraction);
    if (s.contains("reservoir_retention")) {
      cfg.reservoir_retention =
          range_from_json(s.at("reservoir_retention"), "reservoir_retention");
    }
    if (s.contains("outflow_fraction")) {
      cfg.outflow_fraction =
          range_from_json(s.at("outflow_fraction"), "outflow_fraction");
    }
    if (s.contains("area_km2")) {
      cfg.area_km2 = range_from_json(s.at("area_km2"), "area_km2");
    }
    if (s.contains("gauge_elevation_m")) {
      cfg.gauge_elevation_m =
          range_from_json(s.at("gauge_elevation_m"), "gauge_elevation_m");
    }
    if (s.contains("temperature_amplitude_k")) {
      cfg.temperature_amplitude_k = range_from_json(
          s.at("temperature_amplitude_k"), "temperature_amplitude_k");
    }
    if (s.contains("wet_day_probability")) {
      cfg.wet_day_probability =
          range_from_json(s.at("wet_day_probability"), "wet_day_probability");
    }
    if (s.contains("wet_day_precip_mm")) {
      cfg.wet_day_precip_mm =
          range_from_json(s.at("wet_day_precip_mm"), "wet_day_precip_mm");
    }
    if (s.contains("evaporation_coefficient")) {
      cfg.evaporation_coefficient = range_from_json(
          s.at("evaporation_coefficient"), "evaporation_coefficient");
    }
    if (s.contains("year_wetness")) {
      cfg.year_wetness = range_from_json(s.at("year_wetness"), "year_wetness");
    }
    cfg.snow_threshold_k = s.value("snow_threshold_k", cfg.snow_threshold_k);
    cfg.melt_rate_mm_per_k = s.value("melt_rate_mm_per_k", cfg.melt_rate_mm_per_k);
    cfg.discharge_noise = s.value("discharge_noise", cfg.discharge_noise);
    cfg.initial_storage_mm = s.value("initial_storage_mm", cfg.initial_storage_mm);
  }

  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    reject_unknown_keys(g,
                        {"hidden_sizes", "num_layers", "head_hidden_sizes",
                         "head_num_layers", "learning_rates", "dropouts"},
                        "grid");
    train::GridSpec grid = train::default_grid(
        model::architecture_from_string(c.architecture));
    grid.hidden_sizes = g.value("hidden_sizes", grid.hidden_sizes);
    grid.num_layers = g.value("num_layers", grid.num_layers);
    grid.head_hidden_sizes = g.value("head_hidden_sizes", grid.head_hidden_sizes);
    grid.head_num_layers = g.value("head_num_layers", grid.head_num_layers);
    grid.learning_rates = g.value("learning_rates", grid.learning_rates);
    grid.dropouts = g.value("dropouts", grid.dropouts);
    c.grid = grid;
  }
  return c;
}

json config_to_json(const RunConfig& c) {
  json j;
  j["workdir"] = c.workdir;
  j["data_dir"] = c.data_dir;
  j["out_dir"] = c.out_dir;
  j["seed"] = c.seed;
  j["architecture"] = c.architecture;
  const auto hp = c.resolved_hp();
  j["model"] = {{"hidden_size", hp.hidden_size},
                {"num_layers", hp.num_layers},
                {"head_hidden_size", hp.head_hidden_size},
                {"head_num_layers", hp.head_num_layers},
                {"learning_rate", hp.learning_rate},
                {"dropout", hp.dropout}};
  j["extra_variables"] = c.extra_variables;
  j["training"] = {{"window_days", c.training.window_days},
                   {"batch_size", c.training.batch_size},
                   {"max_epochs", c.training.max_epochs},
                   {"patience", c.training.patience},
                   {"clip_norm", c.training.clip_norm},
                   {"mask_probability", c.training.mask_probability},
                   {"precompute_encodings", c.training.precompute_encodings}};
  if (c.training.months) {
    j["training"]["month_first"] = c.training.months->first_month;
    j["training"]["month_last"] = c.training.months->last_month;
  } else {
    j["training"]["month_first"] = nullptr;
    j["training"]["month_last"] = nullptr;
  }
  j["n_folds"] = c.n_folds;
  j["jobs"] = c.jobs;
  j["sweep_validation_years"] = c.sweep_validation_years;
  const auto& s = c.synth;
  j["synth"] = {{"n_catchments", s.n_catchments},
                {"n_years", s.n_years},
                {"start_year", s.start_year},
                {"upstream_fraction", s.upstream_fraction},
                {"reservoir_retention", range_to_json(s.reservoir_retention)},
                {"outflow_fraction", range_to_json(s.outflow_fraction)},
                {"area_km2", range_to_json(s.area_km2)},
                {"gauge_elevation_m", range_to_json(s.gauge_elevation_m)},
                {"temperature_amplitude_k", range_to_json(s.temperature_amplitude_k)},
                {"wet_day_probability", range_to_json(s.wet_day_probability)},
                {"wet_day_precip_mm", range_to_json(s.wet_day_precip_mm)},
                {"evaporation_coefficient", range_to_json(s.evaporation_coefficient)},
                {"year_wetness", range_to_json(s.year_wetness)},
                {"snow_threshold_k", s.snow_threshold_k},
                {"melt_rate_mm_per_k", s.melt_rate_mm_per_k},
                {"discharge_noise", s.discharge_noise},
                {"initial_storage_mm", s.initial_storage_mm}};
  if (c.grid) {
    j["grid"] = {{"hidden_sizes", c.grid->hidden_sizes},
                 {"num_layers", c.grid->num_layers},
                 {"head_hidden_sizes", c.grid->head_hidden_sizes},
                 {"head_num_layers", c.grid->head_num_layers},
                 {"learning_rates", c.grid->learning_rates},
                 {"dropouts", c.grid->dropouts}};
  }
  return j;
}

namespace {

std::vector<data::CatchmentDataset> load_datasets(const RunConfig& config) {
  std::set<std::string> forced(config.extra_variables.begin(),
                               config.extra_variables.end());
  forced.erase(data::kDischargeColumn);  // stored as the target column
  return data::ingest_dir(config.data_path(), forced);
}

void write_prediction_csv(const std::string& path,
                          const std::vector<train::PredictionRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "catchment_id,date,q10,q50,q90,observed\n";
  for (const auto& r : rows) {
    out << r.catchment_id << "," << format_date(r.date) << ","
        << format_double(r.forecast.q10) << "," << format_double(r.forecast.q50)
        << "," << format_double(r.forecast.q90) << ","
        << format_double(r.observed) << "\n";
  }
  if (!out) throw IoError("failed writing " + path);
}

void write_climatology_csv(const std::string& path,
                           const std::vector<train::ClimatologyRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "catchment_id,date,q10,q50,q90\n";
  for (const auto& r : rows) {
    out << r.catchment_id << "," << format_date(r.date) << ","
        << format_double(r.forecast.q10) << "," << format_double(r.forecast.q50)
        << "," << format_double(r.forecast.q90) << "\n";
  }
  if (!out) throw IoError("failed writing " + path);
}

json record_to_json(const train::CatchmentYearRecord& r) {
  json j;
  j["variant"] = r.variant;
  j["catchment_id"] = r.catchment_id;
  j["year"] = r.year;
  j["fold_id"] = r.fold_id;
  j["n_dates"] = r.n_dates;
  if (r.cqes_defined) {
    j["cqes"] = r.cqes;
  } else {
    j["cqes"] = nullptr;  // undefined: climatology loss was zero
  }
  j["coverage_q10"] = r.coverage_q10;
  j["coverage_q90"] = r.coverage_q90;
  j["crossing_fraction"] = r.crossing_fraction;
  j["climatology_fallback_days"] = r.climatology_fallback_days;
  j["sum_loss_model"] = r.sum_loss_model;
  j["sum_loss_clim"] = r.sum_loss_clim;
  return j;
}

json aggregate_to_json(const train::AggregateScores& a) {
  json j;
  j["variant"] = a.variant;
  j["cqes_pooled"] = std::isnan(a.cqes_pooled) ? json(nullptr) : json(a.cqes_pooled);
  j["mean_cqes"] = std::isnan(a.mean_cqes) ? json(nullptr) : json(a.mean_cqes);
  j["coverage_q10"] = a.coverage_q10;
  j["coverage_q90"] = a.coverage_q90;
  j["crossing_fraction"] = a.crossing_fraction;
  j["n_dates"] = a.n_dates;
  j["n_records"] = a.n_records;
  j["n_undefined"] = a.n_undefined;
  return j;
}

json training_records_to_json(const std::vector<train::TrainingRunRecord>& records) {
  json out = json::array();
  for (const auto& r : records) {
    json j;
    j["component"] = r.component;
    j["seed"] = r.seed;
    j["stop_reason"] = r.stop_reason;
    j["best_epoch"] = r.best_epoch;
    j["best_validation_loss"] = r.best_validation_loss;
    j["clip_events"] = r.clip_events;
    j["total_batches"] = r.total_batches;
    j["diverged"] = r.diverged;
    json epochs = json::array();
    for (const auto& e : r.epochs) {
      epochs.push_back({{"training_loss", e.training_loss},
                        {"validation_loss", e.validation_loss}});
    }
    j["epochs"] = epochs;
    out.push_back(j);
  }
  return out;
}

// wall-clock timings go into their own file so every other artifact is
// byte-reproducible under a fixed seed
void write_timings(const std::string& path,
                   const std::vector<train::TrainingRunRecord>& records) {
  std::ofstream out(path);
  for (const auto& r : records) {
    out << r.component << " " << format_double(r.wall_clock_seconds) << "s\n";
  }
}

void write_fold_outputs(const std::string& fold_dir,
                        const train::FoldEvaluation& fold) {
  fs::create_directories(fold_dir);
  for (const auto& [variant, rows] : fold.predictions) {
    write_prediction_csv(
        (fs::path(fold_dir) / ("predictions_" + variant + ".csv")).string(), rows);
  }
  write_climatology_csv((fs::path(fold_dir) / "climatology.csv").string(),
                        fold.climatology);
}

json evaluation_report_json(const RunConfig& config,
                            const std::vector<train::FoldEvaluation>& folds,
                            const std::vector<train::AggregateScores>& aggregates) {
  json report;
  report["architecture"] = config.architecture;
  report["n_folds"] = folds.size();
  json fold_meta = json::array();
  json records = json::array();
  for (const auto& fold : folds) {
    fold_meta.push_back({{"fold_id", fold.plan.fold_id},
                         {"test_year", fold.plan.test_year},
                         {"validation_years", fold.plan.validation_years}});
    for (const auto& r : fold.records) records.push_back(record_to_json(r));
  }
  report["folds"] = fold_meta;
  report["records"] = records;
  json aggs = json::array();
  for (const auto& a : aggregates) aggs.push_back(aggregate_to_json(a));
  report["aggregates"] = aggs;
  return report;
}

}  // namespace

void cmd_synth(const RunConfig& config) {
  auto datasets = data::synthesize_catchments(config.synth, config.seed);
  const auto dir = config.data_path();
  data::export_csv(datasets, dir);
  write_json_file((fs::path(dir) / "resolved_config.json").string(),
                  config_to_json(config));
}

void cmd_train(const RunConfig& config) {
  auto datasets = load_datasets(config);
  const auto years = data::common_complete_years(datasets);
  std::set<int> excluded(config.sweep_validation_years.begin(),
                         config.sweep_validation_years.end());
  auto plans = data::make_split_plans(years, 1, excluded);
  const auto& plan = plans[0];

  auto result = train::train_model(
      datasets, model::architecture_from_string(config.architecture),
      config.resolved_hp(), config.extra_variables, plan, config.training,
      config.seed);

  const auto out = config.out_path();
  fs::create_directories(out);
  write_json_file((fs::path(out) / "resolved_config.json").string(),
                  config_to_json(config));
  save_bundle((fs::path(out) / "checkpoint").string(), result.model, plan,
              config.seed);
  write_json_file((fs::path(out) / "run_records.json").string(),
                  training_records_to_json(result.records));
  write_timings((fs::path(out) / "timings.txt").string(), result.records);

  auto fold = train::evaluate_fold(datasets, result.model, plan,
                                   config.training.months);
  write_fold_outputs((fs::path(out) / "fold0").string(), fold);
  auto aggregates = train::aggregate_scores({fold});
  write_json_file((fs::path(out) / "evaluation_report.json").string(),
                  evaluation_report_json(config, {fold}, aggregates));
}

void cmd_crossval(const RunConfig& config) {
  auto datasets = load_datasets(config);
  std::set<int> excluded(config.sweep_validation_years.begin(),
                         config.sweep_validation_years.end());

  auto cv = train::cross_validate(
      datasets, model::architecture_from_string(config.architecture),
      config.resolved_hp(), config.extra_variables, config.n_folds, excluded,
      config.training, config.seed, config.jobs);

  const auto out = config.out_path();
  fs::create_directories(out);
  write_json_file((fs::path(out) / "resolved_config.json").string(),
                  config_to_json(config));
  std::vector<train::TrainingRunRecord> all_records;
  for (size_t f = 0; f < cv.folds.size(); ++f) {
    const auto fold_dir =
        (fs::path(out) / ("fold" + std::to_string(cv.folds[f].plan.fold_id)))
            .string();
    write_fold_outputs(fold_dir, cv.folds[f]);
    for (const auto& r : cv.fold_training_records[f]) all_records.push_back(r);
  }
  write_json_file((fs::path(out) / "run_records.json").string(),
                  training_records_to_json(all_records));
  write_timings((fs::path(out) / "timings.txt").string(), all_records);
  write_json_file((fs::path(out) / "evaluation_report.json").string(),
                  evaluation_report_json(config, cv.folds, cv.aggregates));
}

void cmd_sweep(const RunConfig& config) {
  auto datasets = load_datasets(config);
  if (config.sweep_validation_years.size() != 2) {
    throw ConfigError(
        "sweep needs exactly two sweep_validation_years in the config");
  }
  const auto arch = model::architecture_from_string(config.architecture);
  const auto grid = config.grid ? *config.grid : train::default_grid(arch);
  auto sweep =
      train::grid_sweep(datasets, arch, grid, config.extra_variables,
                        config.sweep_validation_years, config.training,
                        config.seed);

  const auto out = config.out_path();
  fs::create_directories(out);
  write_json_file((fs::path(out) / "resolved_config.json").string(),
                  config_to_json(config));
  json j;
  j["architecture"] = config.architecture;
  j["validation_years"] = sweep.validation_years;
  j["winner"] = sweep.winner;
  json cells = json::array();
  for (const auto& cell : sweep.cells) {
    json cj;
    cj["hidden_size"] = cell.hp.hidden_size;
    cj["num_layers"] = cell.hp.num_layers;
    cj["head_hidden_size"] = cell.hp.head_hidden_size;
    cj["head_num_layers"] = cell.hp.head_num_layers;
    cj["learning_rate"] = cell.hp.learning_rate;
    cj["dropout"] = cell.hp.dropout;
    cj["failed"] = cell.failed;
    if (cell.failed) {
      cj["error"] = cell.error;
    } else {
      cj["validation_loss"] = cell.validation_loss;
    }
    cells.push_back(cj);
  }
  j["cells"] = cells;
  write_json_file((fs::path(out) / "sweep_result.json").string(), j);
}

// ---------------------------------------------------------------------------
// report: cross-run comparison recomputed from the raw CSVs

namespace {

struct LoadedRun {
  std::string dir;
  json report;
  std::vector<train::FoldEvaluation> folds;
};

std::vector<train::PredictionRow> read_prediction_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::string line;
  std::getline(in, line);
  if (line != "catchment_id,date,q10,q50,q90,observed") {
    throw DataError(path + ": unexpected header '" + line + "'");
  }
  std::vector<train::PredictionRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != 6) throw DataError(path + ": malformed row '" + line + "'");
    train::PredictionRow r;
    r.catchment_id = cells[0];
    r.date = parse_date(cells[1]);
    r.forecast.q10 = parse_double(cells[2], path);
    r.forecast.q50 = parse_double(cells[3], path);
    r.forecast.q90 = parse_double(cells[4], path);
    r.observed = parse_double(cells[5], path);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<train::ClimatologyRow> read_climatology_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::string line;
  std::getline(in, line);
  if (line != "catchment_id,date,q10,q50,q90") {
    throw DataError(path + ": unexpected header '" + line + "'");
  }
  std::vector<train::ClimatologyRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != 5) throw DataError(path + ": malformed row '" + line + "'");
    train::ClimatologyRow r;
    r.catchment_id = cells[0];
    r.date = parse_date(cells[1]);
    r.forecast.q10 = parse_double(cells[2], path);
    r.forecast.q50 = parse_double(cells[3], path);
    r.forecast.q90 = parse_double(cells[4], path);
    rows.push_back(std::move(r));
  }
  return rows;
}

LoadedRun load_run(const std::string& dir) {
  LoadedRun run;
  run.dir = dir;
  const auto report_path = (fs::path(dir) / "evaluation_report.json").string();
  if (!fs::exists(report_path)) {
    throw DataError("run " + dir + " is missing evaluation_report.json");
  }
  run.report = read_json_file(report_path);

  std::vector<std::string> missing;
  for (const auto& fold_meta : run.report.at("folds")) {
    const int fold_id = fold_meta.at("fold_id").get<int>();
    const auto fold_dir = fs::path(dir) / ("fold" + std::to_string(fold_id));
    train::FoldEvaluation fold;
    fold.plan.fold_id = fold_id;
    fold.plan.test_year = fold_meta.at("test_year").get<int>();

    const auto clim_path = (fold_dir / "climatology.csv").string();
    if (!fs::exists(clim_path)) {
      missing.push_back(clim_path);
    } else {
      fold.climatology = read_climatology_csv(clim_path);
    }
    for (const auto& agg : run.report.at("aggregates")) {
      const auto variant = agg.at("variant").get<std::string>();
      const auto pred_path =
          (fold_dir / ("predictions_" + variant + ".csv")).string();
      if (!fs::exists(pred_path)) {
        missing.push_back(pred_path);
      } else {
        fold.predictions[variant] = read_prediction_csv(pred_path);
      }
    }
    run.folds.push_back(std::move(fold));
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += "\n  " + m;
    throw DataError("run " + dir + " is missing artifacts:" + list);
  }
  return run;
}

double agg_field(const json& agg, const char* field) {
  return agg.at(field).is_null() ? std::nan("")
                                 : agg.at(field).get<double>();
}

}  // namespace

void cmd_report(const RunConfig& config, const std::vector<std::string>& run_dirs) {
  if (run_dirs.empty()) throw ConfigError("report needs at least one run dir");
  const auto out = config.out_path();
  fs::create_directories(out);

  std::ofstream table((fs::path(out) / "comparison.csv").string());
  if (!table) throw IoError("cannot write comparison.csv");
  table << "run,variant,cqes_pooled,mean_cqes,coverage_q10,coverage_q90,"
           "crossing_fraction,n_dates\n";

  for (const auto& rel : run_dirs) {
    const auto dir = (fs::path(config.workdir) / rel).string();
    auto run = load_run(dir);

    // every reported number must be recomputable from the raw CSVs
    auto recomputed = train::aggregate_scores(run.folds);
    for (const auto& agg : run.report.at("aggregates")) {
      const auto variant = agg.at("variant").get<std::string>();
      const auto it = std::find_if(
          recomputed.begin(), recomputed.end(),
          [&](const auto& a) { return a.variant == variant; });
      if (it == recomputed.end()) {
        throw DataError("no raw rows for variant " + variant + " in " + dir);
      }
      const double reported = agg_field(agg, "cqes_pooled");
      if (std::isnan(reported) != std::isnan(it->cqes_pooled) ||
          (!std::isnan(reported) &&
           std::abs(reported - it->cqes_pooled) > 1e-10) ||
          std::abs(agg_field(agg, "coverage_q10") - it->coverage_q10) > 1e-10 ||
          std::abs(agg_field(agg, "coverage_q90") - it->coverage_q90) > 1e-10) {
        throw DataError("report numbers for " + variant + " in " + dir +
                        " do not match the raw prediction CSVs");
      }

      table << rel << "," << variant << ","
            << format_double(it->cqes_pooled) << ","
            << format_double(agg_field(agg, "mean_cqes")) << ","
            << format_double(it->coverage_q10) << ","
            << format_double(it->coverage_q90) << ","
            << format_double(it->crossing_fraction) << "," << it->n_dates
            << "\n";

      // per-basin-year score distribution, sorted for CDF plotting
      std::vector<double> scores;
      for (const auto& rec : run.report.at("records")) {
        if (rec.at("variant").get<std::string>() == variant &&
            !rec.at("cqes").is_null()) {
          scores.push_back(rec.at("cqes").get<double>());
        }
      }
      std::sort(scores.begin(), scores.end());
      const auto cdf_path =
          (fs::path(out) / ("cdf_" + variant + ".csv")).string();
      std::ofstream cdf(cdf_path);
      if (!cdf) throw IoError("cannot write " + cdf_path);
      cdf << "cqes\n";
      for (double s : scores) cdf << format_double(s) << "\n";
    }

    // hydrograph exports: per catchment and variant, date-sorted
    for (auto& fold : run.folds) {
      for (auto& [variant, rows] : fold.predictions) {
        std::map<std::string, std::vector<const train::PredictionRow*>> by_catchment;
        for (const auto& r : rows) by_catchment[r.catchment_id].push_back(&r);
        for (auto& [id, list] : by_catchment) {
          std::sort(list.begin(), list.end(), [](const auto* a, const auto* b) {
            return a->date < b->date;
          });
          const auto path =
              (fs::path(out) /
               ("hydrograph_" + id + "_" + variant + "_fold" +
                std::to_string(fold.plan.fold_id) + ".csv"))
                  .string();
          std::ofstream hg(path);
          if (!hg) throw IoError("cannot write " + path);
          hg << "date,observed,q10,q50,q90\n";
          for (const auto* r : list) {
            hg << format_date(r->date) << "," << format_double(r->observed)
               << "," << format_double(r->forecast.q10) << ","
               << format_double(r->forecast.q50) << ","
               << format_double(r->forecast.q90) << "\n";
          }
        }
      }
    }
  }
  if (!table) throw IoError("failed writing comparison.csv");
}

int exit_code_for_current_exception() {
  try {
    throw;
  } catch (const ConfigError&) {
    return 2;
  } catch (const DimensionError&) {
    return 2;
  } catch (const UndefinedScoreError&) {
    return 3;
  } catch (const DataError&) {
    return 3;
  } catch (const TrainingError&) {
    return 4;
  } catch (const IoError&) {
    return 5;
  } catch (const std::exception&) {
    return 6;
  } catch (...) {
    return 6;
  }
}

}  // namespace hydra::cmd
