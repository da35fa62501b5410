// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0

#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace hydra::metrics {

double quantile_loss(double tau, double y, double y_hat) {
  if (std::isnan(y) || std::isnan(y_hat)) {
    throw DataError("quantile_loss: NaN input");
  }
  if (tau <= 0.0 || tau >= 1.0) {
    throw ConfigError("quantile level must lie in (0,1), got " +
                      format_double(tau));
  }
  const double diff = y - y_hat;
  return y < y_hat ? (tau - 1.0) * diff : tau * diff;
}

double cumulative_quantile_loss(double y, const QuantileTriple& forecast) {
  return (quantile_loss(0.1, y, forecast.q10) +
          quantile_loss(0.5, y, forecast.q50) +
          quantile_loss(0.9, y, forecast.q90)) /
         3.0;
}

double empirical_quantile(std::vector<double> values, double tau) {
  if (values.empty()) {
    throw Error("empirical_quantile of an empty sample");
  }
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * tau;
  const auto lo = static_cast<size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

Climatology Climatology::fit(const std::vector<Date>& dates,
                             const std::vector<double>& values) {
  if (dates.size() != values.size()) {
    throw DimensionError("climatology fit: " + std::to_string(dates.size()) +
                         " dates vs " + std::to_string(values.size()) +
                         " values");
  }
  std::set<int> years;
  for (const auto& d : dates) years.insert(date_year(d));
  if (years.size() < 2) {
    throw DataError("climatology fit needs at least 2 training years, got " +
                    std::to_string(years.size()));
  }

  std::vector<std::vector<double>> buckets(365);
  for (size_t i = 0; i < dates.size(); ++i) {
    buckets[static_cast<size_t>(day_of_year_index(dates[i]) - 1)].push_back(
        values[i]);
  }

  Climatology clim;
  clim.table_.resize(365);
  for (int doy = 0; doy < 365; ++doy) {
    const auto* bucket = &buckets[static_cast<size_t>(doy)];
    if (bucket->empty()) {
      // nearest covered calendar day, circular distance, earlier day wins ties
      int best = -1, best_dist = 400;
      for (int other = 0; other < 365; ++other) {
        if (buckets[static_cast<size_t>(other)].empty()) continue;
        const int raw = std::abs(other - doy);
        const int dist = std::min(raw, 365 - raw);
        if (dist < best_dist) {
          best_dist = dist;
          best = other;
        }
      }
      if (best < 0) throw DataError("climatology fit: empty training record");
      bucket = &buckets[static_cast<size_t>(best)];
      clim.fallback_days_.push_back(doy + 1);
    }
    clim.table_[static_cast<size_t>(doy)] =
        QuantileTriple{empirical_quantile(*bucket, 0.1),
                       empirical_quantile(*bucket, 0.5),
                       empirical_quantile(*bucket, 0.9)};
  }
  return clim;
}

const QuantileTriple& Climatology::at(Date d) const {
  return table_[static_cast<size_t>(day_of_year_index(d) - 1)];
}

double mean_cumulative_loss(const std::vector<double>& observations,
                            const std::vector<QuantileTriple>& forecasts) {
  if (observations.empty() || observations.size() != forecasts.size()) {
    throw DimensionError("mean_cumulative_loss: " +
                         std::to_string(observations.size()) +
                         " observations vs " +
                         std::to_string(forecasts.size()) + " forecasts");
  }
  double total = 0.0;
  for (size_t i = 0; i < observations.size(); ++i) {
    total += cumulative_quantile_loss(observations[i], forecasts[i]);
  }
  return total / static_cast<double>(observations.size());
}

double cqes(const std::vector<double>& observations,
            const std::vector<QuantileTriple>& forecasts,
            const std::vector<QuantileTriple>& climatology) {
  const double loss_model = mean_cumulative_loss(observations, forecasts);
  const double loss_clim = mean_cumulative_loss(observations, climatology);
  if (loss_clim == 0.0) {
    throw UndefinedScoreError(
        "CQES undefined: climatology loss is zero over the evaluation set");
  }
  return 1.0 - loss_model / loss_clim;
}

double empirical_coverage(const std::vector<double>& observations,
                          const std::vector<double>& thresholds) {
  if (observations.empty() || observations.size() != thresholds.size()) {
    throw Error("empirical_coverage requires nonempty aligned series");
  }
  std::int64_t exceeded = 0;
  for (size_t i = 0; i < observations.size(); ++i) {
    if (observations[i] > thresholds[i]) ++exceeded;
  }
  return static_cast<double>(exceeded) /
         static_cast<double>(observations.size());
}

double crossing_fraction(const std::vector<QuantileTriple>& forecasts) {
  if (forecasts.empty()) return 0.0;
  std::int64_t crossed = 0;
  for (const auto& f : forecasts) {
    if (f.q10 > f.q90) ++crossed;
  }
  return static_cast<double>(crossed) / static_cast<double>(forecasts.size());
}

ad::Tensor pinball_total_loss(ad::Tape* tape, const ad::Tensor& predictions,
                              const ad::Tensor& targets) {
  if (predictions.rank() != 2 || predictions.dim(1) != 3 ||
      targets.rank() != 2 || targets.dim(1) != 1 ||
      targets.dim(0) != predictions.dim(0)) {
    throw DimensionError("pinball_total_loss: predictions " +
                         ad::shape_str(predictions.shape()) + " vs targets " +
                         ad::shape_str(targets.shape()));
  }
  for (double v : targets.values()) {
    if (std::isnan(v)) throw DataError("pinball_total_loss: NaN target");
  }
  const auto batch = predictions.dim(0);
  ad::Tensor total;
  for (int j = 0; j < 3; ++j) {
    const double tau = kQuantileLevels[j];
    ad::Tensor pred_col = ad::slice_cols(tape, predictions, j, j + 1);
    ad::Tensor under = ad::sub(tape, targets, pred_col);   // y - y_hat
    ad::Tensor over = ad::sub(tape, pred_col, targets);    // y_hat - y
    ad::Tensor term =
        ad::add(tape,
                ad::scale(tape, ad::reduce_sum(tape, ad::relu(tape, under)), tau),
                ad::scale(tape, ad::reduce_sum(tape, ad::relu(tape, over)),
                          1.0 - tau));
    total = j == 0 ? term : ad::add(tape, total, term);
  }
  return ad::scale(tape, total, 1.0 / (3.0 * static_cast<double>(batch)));
}

}  // namespace hydra::metrics
