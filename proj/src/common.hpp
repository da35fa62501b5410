// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace hydra {

// Error taxonomy. Each class maps to one CLI exit code / C-API status,
// so callers can tell configuration mistakes from bad data from training
// failures without parsing messages.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct DataError : Error {
  using Error::Error;
};
struct DimensionError : Error {
  using Error::Error;
};
struct TrainingError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};
// Raised when a score is mathematically undefined (e.g. zero climatology
// loss); callers report these explicitly instead of dropping records.
struct UndefinedScoreError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Dates. Stored as a serial day count (days since 1970-01-01, proleptic
// Gregorian) so arithmetic and gap checks are integer operations.

struct Date {
  std::int32_t serial = 0;

  friend bool operator==(Date a, Date b) { return a.serial == b.serial; }
  friend bool operator!=(Date a, Date b) { return a.serial != b.serial; }
  friend bool operator<(Date a, Date b) { return a.serial < b.serial; }
  friend bool operator<=(Date a, Date b) { return a.serial <= b.serial; }
  friend bool operator>(Date a, Date b) { return a.serial > b.serial; }
  friend bool operator>=(Date a, Date b) { return a.serial >= b.serial; }
  Date operator+(int days) const { return Date{serial + days}; }
  Date operator-(int days) const { return Date{serial - days}; }
  int operator-(Date other) const { return serial - other.serial; }
};

Date make_date(int year, int month, int day);
void civil_from_date(Date d, int& year, int& month, int& day);
int date_year(Date d);

// Calendar-day index in [1, 365]; Feb 29 shares index 59 with Feb 28 so
// leap years do not create a 366th bucket.
int day_of_year_index(Date d);

// ISO-8601 "YYYY-MM-DD".
std::string format_date(Date d);
Date parse_date(const std::string& text);  // throws DataError

// ---------------------------------------------------------------------------
// Deterministic RNG derivation. Every independent stream (parameter init,
// batch shuffling, dropout, synth per catchment, ...) is seeded from
// (root seed, label, index) so job scheduling cannot perturb results.

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);
std::uint64_t label_seed(std::uint64_t seed, const std::string& label,
                         std::uint64_t index = 0);
std::mt19937_64 make_rng(std::uint64_t seed, const std::string& label,
                         std::uint64_t index = 0);

// ---------------------------------------------------------------------------
// Number formatting. All persisted floats go through these so that
// identical doubles always serialize to identical bytes (round-trip exact).

std::string format_double(double v);
double parse_double(const std::string& text, const std::string& context);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace hydra
