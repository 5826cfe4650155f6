#pragma once

// Timestamps are whole seconds since 1970-01-01T00:00:00 (UTC, no leap seconds).

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "dhc/errors.hpp"

namespace dhc {

using Seconds = std::int64_t;

inline constexpr Seconds kSecondsPerDay = 86400;
inline constexpr Seconds kSecondsPerHour = 3600;

// Howard Hinnant's days_from_civil / civil_from_days.
constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct CivilDate {
  std::int64_t year;
  unsigned month;
  unsigned day;
};

constexpr CivilDate civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return {y + (m <= 2), m, d};
}

// Start of the default synthetic heating season.
inline constexpr Seconds kDefaultSeasonStart = days_from_civil(2019, 1, 15) * kSecondsPerDay;

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

inline std::string format_iso8601(Seconds t) {
  const std::int64_t day = floor_div(t, kSecondsPerDay);
  const long long rem = static_cast<long long>(t - day * kSecondsPerDay);
  const CivilDate c = civil_from_days(day);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02lld:%02lld:%02lld", static_cast<long long>(c.year), c.month,
                c.day, rem / 3600, (rem / 60) % 60, rem % 60);
  return buf;
}

inline Seconds parse_iso8601(std::string_view s) {
  long long y = 0;
  unsigned mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  const std::string text(s);
  if (std::sscanf(text.c_str(), "%lld-%u-%uT%u:%u:%u", &y, &mo, &d, &h, &mi, &sec) < 5 || mo < 1 || mo > 12 ||
      d < 1 || d > 31 || h > 23 || mi > 59 || sec > 60)
    throw InvalidArgument("bad ISO-8601 timestamp '" + text + "'");
  return days_from_civil(y, mo, d) * kSecondsPerDay + static_cast<Seconds>(h) * 3600 + mi * 60 + sec;
}

}  // namespace dhc
