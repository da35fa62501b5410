// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0

#include "dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace hydra::data {

namespace fs = std::filesystem;

const std::vector<double>* CatchmentDataset::find_extra(
    const std::string& name) const {
  for (size_t i = 0; i < extra_names.size(); ++i) {
    if (extra_names[i] == name) return &extras[i];
  }
  return nullptr;
}

void CatchmentDataset::validate() const {
  const auto n = length();
  if (n == 0) throw DataError("catchment " + id + " has an empty record");
  if (driver_names.size() != drivers.size() ||
      extra_names.size() != extras.size()) {
    throw DataError("catchment " + id + " has mismatched variable tables");
  }
  for (size_t v = 0; v < drivers.size(); ++v) {
    if (drivers[v].size() != n) {
      throw DataError("catchment " + id + " variable " + driver_names[v] +
                      " has length " + std::to_string(drivers[v].size()) +
                      ", expected " + std::to_string(n));
    }
  }
  for (size_t v = 0; v < extras.size(); ++v) {
    if (extras[v].size() != n) {
      throw DataError("catchment " + id + " extra " + extra_names[v] +
                      " has length " + std::to_string(extras[v].size()) +
                      ", expected " + std::to_string(n));
    }
  }
  for (size_t i = 0; i < n; ++i) {
    if (!(discharge[i] >= 0.0)) {
      throw DataError("catchment " + id + " has negative or NaN discharge " +
                      format_double(discharge[i]) + " on " +
                      format_date(date_at(i)));
    }
  }
}

std::vector<int> CatchmentDataset::complete_years() const {
  std::vector<int> years;
  const Date last = date_at(length() - 1);
  for (int y = date_year(start); y <= date_year(last); ++y) {
    if (make_date(y, 1, 1) >= start && make_date(y, 12, 31) <= last) {
      years.push_back(y);
    }
  }
  return years;
}

namespace {

struct RawTable {
  std::vector<std::string> columns;              // excluding the date column
  std::vector<Date> dates;
  std::vector<std::vector<double>> values;       // [column][row]
};

RawTable read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  auto header = split_csv_line(line);
  if (header.empty() || header[0] != "date") {
    throw DataError(path + ":1: first column must be 'date'");
  }
  RawTable table;
  table.columns.assign(header.begin() + 1, header.end());
  table.values.resize(table.columns.size());

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " columns, got " +
                      std::to_string(cells.size()));
    }
    try {
      table.dates.push_back(parse_date(cells[0]));
      for (size_t c = 0; c < table.columns.size(); ++c) {
        table.values[c].push_back(
            parse_double(cells[c + 1], table.columns[c]));
      }
    } catch (const DataError& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (table.dates.empty()) throw DataError(path + ": no data rows");
  return table;
}

void check_contiguous(const std::string& path, const std::vector<Date>& dates) {
  for (size_t i = 1; i < dates.size(); ++i) {
    const int gap = dates[i] - dates[i - 1];
    if (gap == 1) continue;
    if (gap <= 0) {
      throw DataError(path + ": dates not strictly increasing near " +
                      format_date(dates[i]));
    }
    std::string missing;
    for (int k = 1; k < gap && k <= 5; ++k) {
      if (!missing.empty()) missing += ", ";
      missing += format_date(dates[i - 1] + k);
    }
    if (gap > 6) missing += ", ...";
    throw DataError(path + ": gap in date coverage, missing " + missing);
  }
}

}  // namespace

CatchmentDataset read_dynamic_csv(const std::string& path) {
  auto table = read_table(path);
  check_contiguous(path, table.dates);

  CatchmentDataset ds;
  ds.id = fs::path(path).stem().string();
  ds.start = table.dates.front();

  bool saw_discharge = false;
  // Column split into discharge vs the rest happens here; the shared /
  // extra split needs the whole collection and happens in ingest_csv.
  std::vector<std::pair<std::string, std::vector<double>>> named;
  for (size_t c = 0; c < table.columns.size(); ++c) {
    if (table.columns[c] == kDischargeColumn) {
      ds.discharge = std::move(table.values[c]);
      saw_discharge = true;
    } else {
      named.emplace_back(table.columns[c], std::move(table.values[c]));
    }
  }
  if (!saw_discharge) {
    throw DataError(path + ": missing required column '" +
                    std::string(kDischargeColumn) + "'");
  }
  std::sort(named.begin(), named.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [name, vals] : named) {
    ds.driver_names.push_back(name);
    ds.drivers.push_back(std::move(vals));
  }
  ds.validate();
  return ds;
}

std::vector<CatchmentDataset> ingest_csv(
    const std::vector<std::string>& dynamic_paths,
    const std::string& static_path,
    const std::set<std::string>& forced_extras) {
  if (dynamic_paths.empty()) throw DataError("no dynamic CSV files given");
  std::vector<CatchmentDataset> datasets;
  for (const auto& p : dynamic_paths) datasets.push_back(read_dynamic_csv(p));
  std::sort(datasets.begin(), datasets.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });

  // Shared drivers = intersection of per-catchment variable sets;
  // everything else is a catchment-specific extra.
  std::map<std::string, size_t> presence;
  for (const auto& ds : datasets) {
    for (const auto& n : ds.driver_names) ++presence[n];
  }
  for (auto& ds : datasets) {
    std::vector<std::string> drv_names, ext_names;
    std::vector<std::vector<double>> drv, ext;
    for (size_t v = 0; v < ds.driver_names.size(); ++v) {
      if (presence[ds.driver_names[v]] == datasets.size() &&
          forced_extras.count(ds.driver_names[v]) == 0) {
        drv_names.push_back(ds.driver_names[v]);
        drv.push_back(std::move(ds.drivers[v]));
      } else {
        ext_names.push_back(ds.driver_names[v]);
        ext.push_back(std::move(ds.drivers[v]));
      }
    }
    ds.driver_names = std::move(drv_names);
    ds.drivers = std::move(drv);
    ds.extra_names = std::move(ext_names);
    ds.extras = std::move(ext);
  }

  // Static attributes.
  std::ifstream in(static_path);
  if (!in) throw IoError("cannot open " + static_path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(static_path + ": empty file");
  auto header = split_csv_line(line);
  if (header.empty() || header[0] != "catchment_id") {
    throw DataError(static_path + ":1: first column must be 'catchment_id'");
  }
  std::map<std::string, std::map<std::string, double>> static_rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError(static_path + ":" + std::to_string(line_no) +
                      ": expected " + std::to_string(header.size()) +
                      " columns, got " + std::to_string(cells.size()));
    }
    auto& row = static_rows[cells[0]];
    for (size_t c = 1; c < header.size(); ++c) {
      row[header[c]] = parse_double(cells[c], static_path + ":" +
                                                  std::to_string(line_no));
    }
  }
  for (auto& ds : datasets) {
    auto it = static_rows.find(ds.id);
    if (it == static_rows.end()) {
      throw DataError(static_path + ": no static attributes for catchment " +
                      ds.id);
    }
    ds.statics = it->second;
  }
  return datasets;
}

std::vector<CatchmentDataset> ingest_dir(const std::string& dir,
                                         const std::set<std::string>& forced_extras) {
  std::vector<std::string> files;
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto name = entry.path().filename().string();
    if (name == kStaticFileName) continue;
    if (entry.path().extension() == ".csv") files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  const auto static_path = (fs::path(dir) / kStaticFileName).string();
  return ingest_csv(files, static_path, forced_extras);
}

void export_csv(const std::vector<CatchmentDataset>& datasets,
                const std::string& dir) {
  fs::create_directories(dir);
  for (const auto& ds : datasets) {
    const auto path = (fs::path(dir) / (ds.id + ".csv")).string();
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "date";
    for (const auto& n : ds.driver_names) out << "," << n;
    for (const auto& n : ds.extra_names) out << "," << n;
    out << "," << kDischargeColumn << "\n";
    for (size_t i = 0; i < ds.length(); ++i) {
      out << format_date(ds.date_at(i));
      for (const auto& col : ds.drivers) out << "," << format_double(col[i]);
      for (const auto& col : ds.extras) out << "," << format_double(col[i]);
      out << "," << format_double(ds.discharge[i]) << "\n";
    }
    if (!out) throw IoError("failed writing " + path);
  }

  // one static table covering every catchment; columns are the union
  std::set<std::string> attr_names;
  for (const auto& ds : datasets) {
    for (const auto& [k, v] : ds.statics) attr_names.insert(k);
  }
  const auto path = (fs::path(dir) / kStaticFileName).string();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "catchment_id";
  for (const auto& n : attr_names) out << "," << n;
  out << "\n";
  for (const auto& ds : datasets) {
    out << ds.id;
    for (const auto& n : attr_names) {
      auto it = ds.statics.find(n);
      if (it == ds.statics.end()) {
        throw DataError("catchment " + ds.id + " lacks static attribute " + n);
      }
      out << "," << format_double(it->second);
    }
    out << "\n";
  }
  if (!out) throw IoError("failed writing " + path);
}

std::vector<int> common_complete_years(
    const std::vector<CatchmentDataset>& datasets) {
  if (datasets.empty()) return {};
  std::vector<int> years = datasets[0].complete_years();
  for (const auto& ds : datasets) {
    auto own = ds.complete_years();
    std::vector<int> kept;
    std::set_intersection(years.begin(), years.end(), own.begin(), own.end(),
                          std::back_inserter(kept));
    years = std::move(kept);
  }
  return years;
}

}  // namespace hydra::data
