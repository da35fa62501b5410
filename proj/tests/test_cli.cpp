// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Drives the installed CLI binary end to end: artifact layout, exit
// codes, and the byte-identical determinism replay.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const char* cli_path() { return HYDRA_CLI_PATH; }

int run(const std::string& args) {
  const std::string cmd = std::string(cli_path()) + " " + args + " 2>/dev/null";
  const int raw = std::system(cmd.c_str());
  return WEXITSTATUS(raw);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("hydra_cli_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("synth emits one dynamic CSV per catchment plus the static table") {
  TempDir dir("synth");
  CHECK(run("synth --workdir " + dir.str() +
            " --data data --catchments 3 --years 8 --seed 7") == 0);
  CHECK(fs::exists(dir.path / "data" / "c00.csv"));
  CHECK(fs::exists(dir.path / "data" / "c01.csv"));
  CHECK(fs::exists(dir.path / "data" / "c02.csv"));
  CHECK(fs::exists(dir.path / "data" / "static_attributes.csv"));
  CHECK(fs::exists(dir.path / "data" / "resolved_config.json"));

  SUBCASE("fixed seed reproduces identical files") {
    TempDir other("synth2");
    CHECK(run("synth --workdir " + other.str() +
              " --data data --catchments 3 --years 8 --seed 7") == 0);
    for (const auto* f : {"c00.csv", "c01.csv", "c02.csv",
                          "static_attributes.csv"}) {
      CHECK(slurp(dir.path / "data" / f) == slurp(other.path / "data" / f));
    }
  }
}

TEST_CASE("train run emits records, checkpoint, report, and predictions") {
  TempDir dir("train");
  REQUIRE(run("synth --workdir " + dir.str() +
              " --data data --catchments 2 --years 6 --seed 3") == 0);
  const std::string train_args =
      " --workdir " + dir.str() +
      " --data data --arch multi_catchment_no_q --hidden 4 --layers 1 "
      "--dropout 0 --window 8 --max-epochs 2 --patience 2";
  REQUIRE(run("train" + train_args + " --seed 3 --out run_a") == 0);

  CHECK(fs::exists(dir.path / "run_a" / "resolved_config.json"));
  CHECK(fs::exists(dir.path / "run_a" / "run_records.json"));
  CHECK(fs::exists(dir.path / "run_a" / "checkpoint" / "manifest.json"));
  CHECK(fs::exists(dir.path / "run_a" / "checkpoint" / "params.txt"));
  CHECK(fs::exists(dir.path / "run_a" / "evaluation_report.json"));
  CHECK(fs::exists(dir.path / "run_a" / "fold0" /
                   "predictions_multi_catchment_no_q.csv"));
  CHECK(fs::exists(dir.path / "run_a" / "fold0" / "climatology.csv"));

  SUBCASE("rerunning with the same config is byte-identical") {
    REQUIRE(run("train" + train_args + " --seed 3 --out run_b") == 0);
    for (const auto* f :
         {"run_records.json", "evaluation_report.json",
          "checkpoint/params.txt", "checkpoint/manifest.json",
          "fold0/predictions_multi_catchment_no_q.csv",
          "fold0/climatology.csv"}) {
      CHECK(slurp(dir.path / "run_a" / f) == slurp(dir.path / "run_b" / f));
    }
    // a different seed produces different predictions
    REQUIRE(run("train" + train_args + " --seed 4 --out run_c") == 0);
    CHECK(slurp(dir.path / "run_a" / "checkpoint" / "params.txt") !=
          slurp(dir.path / "run_c" / "checkpoint" / "params.txt"));
  }

  SUBCASE("report recomputes and compares runs") {
    REQUIRE(run("report --workdir " + dir.str() +
                " --run run_a --out summary") == 0);
    CHECK(fs::exists(dir.path / "summary" / "comparison.csv"));
    CHECK(fs::exists(dir.path / "summary" /
                     "cdf_multi_catchment_no_q.csv"));
    const auto table = slurp(dir.path / "summary" / "comparison.csv");
    CHECK(table.find("multi_catchment_no_q") != std::string::npos);
  }
}

TEST_CASE("crossval emits per-fold artifacts and an aggregate report") {
  TempDir dir("cv");
  REQUIRE(run("synth --workdir " + dir.str() +
              " --data data --catchments 2 --years 7 --seed 9") == 0);
  REQUIRE(run("crossval --workdir " + dir.str() +
              " --data data --out cv --arch multi_catchment_no_q --hidden 4 "
              "--layers 1 --dropout 0 --window 8 --max-epochs 2 --patience 2 "
              "--folds 2 --jobs 2 --seed 9") == 0);
  CHECK(fs::exists(dir.path / "cv" / "fold0" / "climatology.csv"));
  CHECK(fs::exists(dir.path / "cv" / "fold1" / "climatology.csv"));
  CHECK(fs::exists(dir.path / "cv" / "evaluation_report.json"));
  const auto report = slurp(dir.path / "cv" / "evaluation_report.json");
  CHECK(report.find("\"n_folds\": 2") != std::string::npos);
}

TEST_CASE("sweep emits ranked cells") {
  TempDir dir("sweep");
  REQUIRE(run("synth --workdir " + dir.str() +
              " --data data --catchments 2 --years 7 --seed 13") == 0);
  // a 2-cell grid via config file
  {
    std::ofstream cfg(dir.path / "sweep.json");
    cfg << R"({
      "grid": {"hidden_sizes": [3, 5], "num_layers": [1],
               "learning_rates": [0.001], "dropouts": [0.0]}
    })";
  }
  REQUIRE(run("sweep --workdir " + dir.str() + " --config " +
              (dir.path / "sweep.json").string() +
              " --data data --out sweep_out --arch multi_catchment_no_q "
              "--window 8 --max-epochs 2 --patience 2 --seed 13 "
              "--val-years 2004 2005") == 0);
  const auto result = slurp(dir.path / "sweep_out" / "sweep_result.json");
  CHECK(result.find("\"winner\"") != std::string::npos);
  CHECK(result.find("\"validation_loss\"") != std::string::npos);
}

TEST_CASE("documented exit codes") {
  TempDir dir("codes");
  // config error: unknown architecture
  CHECK(run("train --workdir " + dir.str() + " --arch transformer") == 2);
  // I/O error: missing data directory
  CHECK(run("train --workdir " + dir.str() +
            " --data nowhere --arch multi_catchment_no_q") == 5);
  // data error: malformed CSV
  fs::create_directories(dir.path / "bad");
  {
    std::ofstream f(dir.path / "bad" / "x.csv");
    f << "date,discharge_m3_s\n2001-01-01,5\n2001-01-09,5\n";
    std::ofstream s(dir.path / "bad" / "static_attributes.csv");
    s << "catchment_id,area_km2\nx,10\n";
  }
  CHECK(run("train --workdir " + dir.str() +
            " --data bad --arch multi_catchment_no_q") == 3);
}
