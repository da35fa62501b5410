// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Exercises the shared library strictly through its C interface.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "hydra/hydra.h"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("hydra_capi_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string str() const { return path.string(); }
};

std::string tiny_config(const std::string& workdir) {
  return std::string(R"({
    "workdir": ")" + workdir + R"(",
    "data_dir": "data",
    "out_dir": "run",
    "seed": 11,
    "architecture": "multi_catchment_no_q",
    "model": {"hidden_size": 4, "num_layers": 1, "dropout": 0.0},
    "training": {"window_days": 8, "batch_size": 64, "max_epochs": 2, "patience": 2},
    "synth": {"n_catchments": 2, "n_years": 6}
  })");
}

}  // namespace

TEST_CASE("version and error surface") {
  CHECK(std::string(hydra_version()).find("hydra") != std::string::npos);
  CHECK(hydra_last_error() != nullptr);
}

TEST_CASE("dataset handles") {
  TempDir dir("datasets");

  hydra_datasets* ds = nullptr;
  REQUIRE(hydra_datasets_synthesize(tiny_config(dir.str()).c_str(), &ds) ==
          HYDRA_OK);
  REQUIRE(ds != nullptr);
  CHECK(hydra_datasets_count(ds) == 2);
  CHECK(std::string(hydra_datasets_catchment_id(ds, 0)) == "c00");
  CHECK(hydra_datasets_catchment_id(ds, 99) == nullptr);

  const auto data_dir = dir.str() + "/data";
  CHECK(hydra_datasets_write(ds, data_dir.c_str()) == HYDRA_OK);
  hydra_datasets_close(ds);

  hydra_datasets* loaded = nullptr;
  CHECK(hydra_datasets_open(data_dir.c_str(), nullptr, &loaded) == HYDRA_OK);
  CHECK(hydra_datasets_count(loaded) == 2);
  hydra_datasets_close(loaded);

  SUBCASE("errors set status and message") {
    hydra_datasets* bad = nullptr;
    CHECK(hydra_datasets_open((dir.str() + "/missing").c_str(), nullptr, &bad) ==
          HYDRA_ERROR_IO);
    CHECK(std::strlen(hydra_last_error()) > 0);
    CHECK(bad == nullptr);

    CHECK(hydra_datasets_synthesize("{not json", &bad) == HYDRA_ERROR_CONFIG);
    CHECK(hydra_datasets_synthesize(
              R"({"synth": {"n_years": 2}})", &bad) == HYDRA_ERROR_CONFIG);
    CHECK(hydra_datasets_synthesize(
              R"({"bogus_key": 1})", &bad) == HYDRA_ERROR_CONFIG);
  }
}

TEST_CASE("train, reload, forecast through the C surface") {
  TempDir dir("train");
  const auto cfg = tiny_config(dir.str());
  REQUIRE(hydra_run_synth(cfg.c_str()) == HYDRA_OK);
  REQUIRE(hydra_run_train(cfg.c_str()) == HYDRA_OK);

  const auto ckpt = dir.str() + "/run/checkpoint";
  hydra_model* model = nullptr;
  REQUIRE(hydra_model_open(ckpt.c_str(), &model) == HYDRA_OK);
  REQUIRE(model != nullptr);
  CHECK(hydra_model_window_days(model) == 8);
  CHECK(std::string(hydra_model_variant(model, 0)) == "multi_catchment_no_q");
  CHECK(hydra_model_variant(model, 5) == nullptr);

  int n_inputs = 0;
  REQUIRE(hydra_model_num_inputs(model, "multi_catchment_no_q", "c00",
                                 &n_inputs) == HYDRA_OK);
  CHECK(n_inputs == 5 + 4);  // drivers + static attributes

  const char* first = nullptr;
  REQUIRE(hydra_model_input_name(model, "multi_catchment_no_q", "c00", 0,
                                 &first) == HYDRA_OK);
  CHECK(std::string(first) == "evaporation_mm_day");

  // physically plausible raw window
  std::vector<double> window(static_cast<size_t>(8 * n_inputs));
  for (int t = 0; t < 8; ++t) {
    double row[] = {1.0, 1.3e7, 2.0, 10.0, 275.0, 5000.0, 0.03, 1500.0, 0.95};
    std::copy(row, row + 9, window.begin() + t * 9);
  }
  double q[3] = {-1, -1, -1};
  REQUIRE(hydra_model_forecast(model, "multi_catchment_no_q", "c00",
                               window.data(), 8, n_inputs, q) == HYDRA_OK);
  CHECK(q[0] >= 0.0);  // physical discharge
  CHECK(q[1] >= 0.0);
  CHECK(q[2] >= 0.0);

  SUBCASE("wrong column count is a dimension/config failure") {
    double out[3];
    CHECK(hydra_model_forecast(model, "multi_catchment_no_q", "c00",
                               window.data(), 8, 3, out) ==
          HYDRA_ERROR_CONFIG);
  }

  SUBCASE("unknown variant fails cleanly") {
    double out[3];
    CHECK(hydra_model_forecast(model, "hydra_multi_head", "c00", window.data(),
                               8, n_inputs, out) == HYDRA_ERROR_CONFIG);
  }

  hydra_model_close(model);

  SUBCASE("missing checkpoint directory is an I/O failure") {
    hydra_model* missing = nullptr;
    CHECK(hydra_model_open((dir.str() + "/nowhere").c_str(), &missing) ==
          HYDRA_ERROR_IO);
  }
}

TEST_CASE("report runs through the C surface") {
  TempDir dir("report");
  const auto cfg = tiny_config(dir.str());
  REQUIRE(hydra_run_synth(cfg.c_str()) == HYDRA_OK);
  REQUIRE(hydra_run_train(cfg.c_str()) == HYDRA_OK);

  auto report_cfg = cfg;
  const auto at = report_cfg.find("\"out_dir\": \"run\"");
  REQUIRE(at != std::string::npos);
  report_cfg.replace(at, std::strlen("\"out_dir\": \"run\""),
                     "\"out_dir\": \"summary\"");
  CHECK(hydra_run_report(report_cfg.c_str(), R"(["run"])") == HYDRA_OK);
  CHECK(fs::exists(dir.path / "summary" / "comparison.csv"));

  CHECK(hydra_run_report(report_cfg.c_str(), R"(["missing_run"])") ==
        HYDRA_ERROR_DATA);
}
