// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0

#include "synth.hpp"

#include <algorithm>
#include <cmath>

namespace hydra::data {

namespace {

constexpr double kTwoPi = 6.283185307179586;

double draw(const Range& r, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(r.lo, r.hi);
  return dist(rng);
}

void check_range(const Range& r, const std::string& name, double lo_limit,
                 double hi_limit) {
  if (!(r.lo <= r.hi) || r.lo < lo_limit || r.hi > hi_limit) {
    throw ConfigError("synth range " + name + " [" + format_double(r.lo) +
                      ", " + format_double(r.hi) + "] outside [" +
                      format_double(lo_limit) + ", " + format_double(hi_limit) +
                      "]");
  }
}

}  // namespace

void SynthConfig::validate() const {
  if (n_catchments < 1) throw ConfigError("synth: n_catchments must be >= 1");
  if (n_years < 6) {
    throw ConfigError(
        "synth: n_years must be >= 6 to leave room for train/val/test, got " +
        std::to_string(n_years));
  }
  if (upstream_fraction < 0.0 || upstream_fraction > 1.0) {
    throw ConfigError("synth: upstream_fraction must lie in [0,1]");
  }
  check_range(reservoir_retention, "reservoir_retention", 0.5, 0.999);
  check_range(outflow_fraction, "outflow_fraction", 0.01, 0.95);
  check_range(area_km2, "area_km2", 1.0, 1e6);
  check_range(gauge_elevation_m, "gauge_elevation_m", 0.0, 9000.0);
  check_range(temperature_amplitude_k, "temperature_amplitude_k", 0.0, 40.0);
  check_range(wet_day_probability, "wet_day_probability", 0.0, 1.0);
  check_range(wet_day_precip_mm, "wet_day_precip_mm", 0.0, 500.0);
  check_range(evaporation_coefficient, "evaporation_coefficient", 0.0, 1.0);
  check_range(year_wetness, "year_wetness", 0.0, 5.0);
  if (discharge_noise < 0.0 || discharge_noise >= 0.5) {
    throw ConfigError("synth: discharge_noise must lie in [0, 0.5)");
  }
}

std::vector<std::string> synth_driver_names() {
  return {"evaporation_mm_day", "net_solar_radiation_j_m2",
          "precipitation_mm_day", "snow_water_equivalent_mm", "temperature_k"};
}

std::vector<CatchmentDataset> synthesize_catchments(const SynthConfig& config,
                                                    std::uint64_t seed) {
  config.validate();

  const Date start = make_date(config.start_year, 1, 1);
  const Date end = make_date(config.start_year + config.n_years, 1, 1);
  const int n_days = end - start;
  const int n_upstream = static_cast<int>(
      std::ceil(config.upstream_fraction * config.n_catchments));

  std::vector<CatchmentDataset> out;
  for (int ci = 0; ci < config.n_catchments; ++ci) {
    auto rng = make_rng(seed, "synth_catchment", static_cast<std::uint64_t>(ci));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> sym(-1.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const double retention = draw(config.reservoir_retention, rng);
    const double outflow_coeff =
        draw(config.outflow_fraction, rng) * (1.0 - retention);
    const double area = draw(config.area_km2, rng);
    const double elevation = draw(config.gauge_elevation_m, rng);
    const double temp_amp = draw(config.temperature_amplitude_k, rng);
    const double wet_prob = draw(config.wet_day_probability, rng);
    const double wet_mm = draw(config.wet_day_precip_mm, rng);
    const double evap_coeff = draw(config.evaporation_coefficient, rng);
    // standard lapse rate off a temperate sea-level mean
    const double temp_mean = 288.0 - 0.0065 * elevation;

    std::vector<double> wetness(static_cast<size_t>(config.n_years));
    for (auto& w : wetness) w = draw(config.year_wetness, rng);

    std::vector<double> precip(n_days), evap(n_days), temp(n_days),
        swe(n_days), solar(n_days), q(n_days);

    double snow = 0.0;
    double storage = config.initial_storage_mm;
    for (int t = 0; t < n_days; ++t) {
      const Date d = start + t;
      const double doy = day_of_year_index(d);
      const double phase = kTwoPi * (doy - 15.0) / 365.0;
      const int year_idx = date_year(d) - config.start_year;

      temp[t] = temp_mean - temp_amp * std::cos(phase) + 1.5 * gauss(rng);
      solar[t] = 1.4e7 * (1.0 - 0.55 * std::cos(kTwoPi * doy / 365.0)) *
                 (1.0 + 0.05 * sym(rng));

      const double season_wet = 1.0 + 0.3 * std::sin(kTwoPi * (doy + 60.0) / 365.0);
      const double p_wet = std::clamp(wet_prob * season_wet, 0.0, 1.0);
      double p = 0.0;
      if (unit(rng) < p_wet) {
        std::exponential_distribution<double> intensity(1.0 / wet_mm);
        p = intensity(rng) * wetness[static_cast<size_t>(year_idx)];
      }
      precip[t] = p;

      double rain = 0.0, melt = 0.0;
      if (temp[t] < config.snow_threshold_k) {
        snow += p;
      } else {
        rain = p;
        melt = std::min(snow,
                        config.melt_rate_mm_per_k *
                            (temp[t] - config.snow_threshold_k));
        snow -= melt;
      }
      swe[t] = snow;

      const double potential_evap =
          std::max(0.0, evap_coeff * (temp[t] - 265.0));
      storage = retention * storage + rain + melt;
      const double actual_evap = std::min(potential_evap, storage);
      storage -= actual_evap;
      evap[t] = actual_evap;

      // noise stays below 1/(1+noise) of the retention headroom, so the
      // water balance can never go negative
      q[t] = outflow_coeff * storage *
             (1.0 + config.discharge_noise * sym(rng));
      // mm over the basin -> m^3/s
      q[t] *= area * 1e3 / 86400.0;
    }

    CatchmentDataset ds;
    char idbuf[16];
    std::snprintf(idbuf, sizeof idbuf, "c%02d", ci);
    ds.id = idbuf;
    ds.start = start;
    ds.driver_names = synth_driver_names();
    ds.drivers = {std::move(evap), std::move(solar), std::move(precip),
                  std::move(swe), std::move(temp)};
    ds.discharge = std::move(q);
    ds.statics = {{"area_km2", area},
                  {"discharge_coefficient", outflow_coeff},
                  {"gauge_elevation_m", elevation},
                  {"reservoir_retention", retention}};

    if (ci < n_upstream) {
      // lagged, scaled copy of the gauge discharge with its own noise
      std::vector<double> upstream(static_cast<size_t>(n_days));
      for (int t = 0; t < n_days; ++t) {
        const int lag_idx = std::max(0, t - 2);
        upstream[static_cast<size_t>(t)] =
            0.8 * ds.discharge[static_cast<size_t>(lag_idx)] *
            (1.0 + 0.1 * sym(rng));
      }
      ds.extra_names.push_back(kUpstreamColumn);
      ds.extras.push_back(std::move(upstream));
    }

    ds.validate();
    out.push_back(std::move(ds));
  }
  return out;
}

}  // namespace hydra::data
