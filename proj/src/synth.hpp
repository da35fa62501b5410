// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic multi-catchment generator: seasonal weather drivers, a
// snow store, and a linear reservoir producing daily discharge. Stands
// in for real reanalysis/gauge data at desk scale.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dataset.hpp"

namespace hydra::data {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct SynthConfig {
  int n_catchments = 6;
  int n_years = 10;
  int start_year = 2000;
  // fraction of catchments that also get an upstream-gauge extra series
  double upstream_fraction = 0.5;

  // per-catchment physical parameters, drawn uniformly from each range
  Range reservoir_retention{0.93, 0.97};   // storage carryover a
  Range outflow_fraction{0.5, 0.9};        // discharge coefficient k as a
                                           // fraction of (1 - a)
  Range area_km2{400.0, 20000.0};
  Range gauge_elevation_m{300.0, 3500.0};
  Range temperature_amplitude_k{8.0, 14.0};
  Range wet_day_probability{0.2, 0.45};
  Range wet_day_precip_mm{4.0, 10.0};
  Range evaporation_coefficient{0.04, 0.08};  // mm per kelvin above base
  Range year_wetness{0.7, 1.3};               // per-year precip multiplier

  double snow_threshold_k = 273.15;
  double melt_rate_mm_per_k = 2.5;
  double discharge_noise = 0.05;      // multiplicative, uniform +-
  double initial_storage_mm = 20.0;

  void validate() const;
};

inline constexpr const char* kUpstreamColumn = "upstream_discharge_m3_s";

// Driver columns produced by the generator.
std::vector<std::string> synth_driver_names();

std::vector<CatchmentDataset> synthesize_catchments(const SynthConfig& config,
                                                    std::uint64_t seed);

}  // namespace hydra::data
