#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace malmas::data {

/// Parses ISO-8601 calendar dates and datetimes: YYYY-MM-DD, optionally
/// followed by 'T' or ' ' and HH:MM[:SS[.fraction]], optionally followed by
/// 'Z' or a +HH:MM / +HHMM offset. Returns seconds since the Unix epoch (UTC).
std::optional<double> parse_iso8601(std::string_view text);

struct CivilTime {
  std::int64_t year;
  int month;        // 1..12
  int day;          // 1..31
  int day_of_week;  // 0 = Monday .. 6 = Sunday
  int hour;         // 0..23
};

CivilTime civil_from_epoch(double epoch_seconds);

std::int64_t days_from_civil(std::int64_t year, int month, int day);

}  // namespace malmas::data
