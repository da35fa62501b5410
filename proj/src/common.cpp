// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0

#include "common.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace hydra {

namespace {

// Howard Hinnant's days-from-civil algorithm (public domain).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y += (m <= 2);
}

constexpr int kDaysBeforeMonth[12] = {0,   31,  59,  90,  120, 151,
                                      181, 212, 243, 273, 304, 334};

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Date make_date(int year, int month, int day) {
  if (month < 1 || month > 12 || day < 1 || day > 31) {
    throw DataError("invalid calendar date " + std::to_string(year) + "-" +
                    std::to_string(month) + "-" + std::to_string(day));
  }
  return Date{static_cast<std::int32_t>(
      days_from_civil(year, static_cast<unsigned>(month),
                      static_cast<unsigned>(day)))};
}

void civil_from_date(Date d, int& year, int& month, int& day) {
  std::int64_t y;
  unsigned m, dd;
  civil_from_days(d.serial, y, m, dd);
  year = static_cast<int>(y);
  month = static_cast<int>(m);
  day = static_cast<int>(dd);
}

int date_year(Date d) {
  int y, m, dd;
  civil_from_date(d, y, m, dd);
  return y;
}

int day_of_year_index(Date d) {
  int y = 0, m = 0, dd = 0;
  civil_from_date(d, y, m, dd);
  (void)y;
  if (m == 2 && dd == 29) dd = 28;  // merged with Feb 28
  // Non-leap month offsets on purpose: with Feb 29 merged away, every
  // calendar day lands in the same bucket in leap and non-leap years.
  return kDaysBeforeMonth[m - 1] + dd;
}

std::string format_date(Date d) {
  int y, m, dd;
  civil_from_date(d, y, m, dd);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, dd);
  return buf;
}

Date parse_date(const std::string& text) {
  int y = 0, m = 0, d = 0;
  if (std::sscanf(text.c_str(), "%d-%d-%d", &y, &m, &d) != 3) {
    throw DataError("unparseable date '" + text + "' (expected YYYY-MM-DD)");
  }
  return make_date(y, m, d);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL + salt * 0xd1342543de82ef95ULL);
  return splitmix64(s);
}

std::uint64_t label_seed(std::uint64_t seed, const std::string& label,
                         std::uint64_t index) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a over the label
  for (unsigned char c : label) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return mix_seed(mix_seed(seed, h), index);
}

std::mt19937_64 make_rng(std::uint64_t seed, const std::string& label,
                         std::uint64_t index) {
  return std::mt19937_64(label_seed(seed, label, index));
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& text, const std::string& context) {
  char* end = nullptr;
  double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || (end && *end != '\0')) {
    throw DataError("unparseable number '" + text + "' in " + context);
  }
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace hydra
