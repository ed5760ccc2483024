#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "pimodnn/numerics/errors.hpp"

namespace pimodnn::plant {

/// Seconds since 1970-01-01T00:00:00Z.
using Timestamp = std::int64_t;

inline constexpr std::int64_t kSecondsPerDay = 86400;

namespace detail {

// Civil-calendar conversions after H. Hinnant's public-domain algorithms.
constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct Civil {
  std::int64_t year;
  unsigned month;
  unsigned day;
};

constexpr Civil civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return {y + (m <= 2), m, d};
}

constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) { return a / b - ((a % b != 0) && ((a < 0) != (b < 0))); }

}  // namespace detail

inline Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour = 0, int minute = 0, int second = 0) {
  return detail::days_from_civil(year, month, day) * kSecondsPerDay + hour * 3600 + minute * 60 + second;
}

/// Fraction of the UTC day elapsed, in [0, 1).
inline double time_of_day(Timestamp t) {
  const std::int64_t s = t - detail::floor_div(t, kSecondsPerDay) * kSecondsPerDay;
  return static_cast<double>(s) / static_cast<double>(kSecondsPerDay);
}

inline double hour_of_day(Timestamp t) { return 24.0 * time_of_day(t); }

/// 0 = Sunday ... 6 = Saturday.
inline int weekday(Timestamp t) {
  const std::int64_t days = detail::floor_div(t, kSecondsPerDay);
  return static_cast<int>(((days + 4) % 7 + 7) % 7);
}

/// 1-based day of the year.
inline int day_of_year(Timestamp t) {
  const std::int64_t days = detail::floor_div(t, kSecondsPerDay);
  const auto c = detail::civil_from_days(days);
  return static_cast<int>(days - detail::days_from_civil(c.year, 1, 1)) + 1;
}

inline std::string format_iso8601(Timestamp t) {
  const std::int64_t days = detail::floor_div(t, kSecondsPerDay);
  const std::int64_t rem = t - days * kSecondsPerDay;
  const auto c = detail::civil_from_days(days);
  char buf[80];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<long long>(c.year), c.month,
                c.day, static_cast<long long>(rem / 3600), static_cast<long long>((rem / 60) % 60),
                static_cast<long long>(rem % 60));
  return buf;
}

/// Accepts `YYYY-MM-DDTHH:MM:SSZ` and `YYYY-MM-DD` (midnight UTC).
inline Timestamp parse_iso8601(std::string_view s) {
  int y = 0, h = 0, mi = 0, se = 0;
  unsigned mo = 0, d = 0;
  const std::string str(s);
  int n = 0;
  if (str.size() == 10 && std::sscanf(str.c_str(), "%4d-%2u-%2u%n", &y, &mo, &d, &n) == 3 && n == 10) {
    // date only
  } else if (std::sscanf(str.c_str(), "%4d-%2u-%2uT%2d:%2d:%2dZ%n", &y, &mo, &d, &h, &mi, &se, &n) == 6 &&
             n == static_cast<int>(str.size())) {
    // full timestamp
  } else {
    throw InputError("invalid ISO-8601 timestamp '" + str + "'");
  }
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || se > 59)
    throw InputError("invalid ISO-8601 timestamp '" + str + "'");
  return make_timestamp(y, mo, d, h, mi, se);
}

}  // namespace pimodnn::plant
