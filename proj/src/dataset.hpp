// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Catchment dataset model and CSV ingestion/export.
//
// On disk, each catchment is one dynamic CSV named <catchment_id>.csv
// with a `date` column (ISO-8601, contiguous daily), a `discharge_m3_s`
// column, and one column per dynamic variable. Variables present in
// every catchment are the shared drivers; columns only some catchments
// have are catchment-specific extras. Static attributes live in one
// static_attributes.csv with a `catchment_id` column.

#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "common.hpp"

namespace hydra::data {

inline constexpr const char* kDischargeColumn = "discharge_m3_s";
inline constexpr const char* kStaticFileName = "static_attributes.csv";

struct CatchmentDataset {
  std::string id;
  Date start{};                               // first day of the record
  std::vector<std::string> driver_names;      // sorted; shared across catchments
  std::vector<std::vector<double>> drivers;   // [variable][day]
  std::vector<double> discharge;              // m^3/s
  std::vector<std::string> extra_names;       // sorted; this catchment only
  std::vector<std::vector<double>> extras;    // [variable][day]
  std::map<std::string, double> statics;

  std::size_t length() const { return discharge.size(); }
  Date date_at(std::size_t i) const { return start + static_cast<int>(i); }
  // Index of d in the record, or -1 when out of range.
  std::int64_t index_of(Date d) const {
    const std::int64_t i = d - start;
    return (i >= 0 && i < static_cast<std::int64_t>(length())) ? i : -1;
  }
  const std::vector<double>* find_extra(const std::string& name) const;
  void validate() const;

  // Calendar years fully covered by the record (Jan 1 .. Dec 31).
  std::vector<int> complete_years() const;
};

// Reads one dynamic CSV plus its share of the static table.
CatchmentDataset read_dynamic_csv(const std::string& path);

// Ingests a directory of per-catchment CSVs plus the static table,
// splitting columns into shared drivers and per-catchment extras. A
// column is an extra when it is absent from some catchments or when it
// is named in forced_extras. Results are sorted by catchment id.
std::vector<CatchmentDataset> ingest_dir(
    const std::string& dir, const std::set<std::string>& forced_extras = {});
std::vector<CatchmentDataset> ingest_csv(
    const std::vector<std::string>& dynamic_paths,
    const std::string& static_path,
    const std::set<std::string>& forced_extras = {});

void export_csv(const std::vector<CatchmentDataset>& datasets,
                const std::string& dir);

// Years fully covered by every dataset, sorted ascending.
std::vector<int> common_complete_years(
    const std::vector<CatchmentDataset>& datasets);

}  // namespace hydra::data
