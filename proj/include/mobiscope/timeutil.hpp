#pragma once

#include <cstdint>
#include <string>

namespace mobiscope {

constexpr int64_t kSecondsPerDay = 86400;

// Local calendar day index (days since 1970-01-01 in the given UTC offset).
inline int64_t local_day(int64_t epoch_s, int tz_offset_minutes) {
  int64_t shifted = epoch_s + static_cast<int64_t>(tz_offset_minutes) * 60;
  int64_t d = shifted / kSecondsPerDay;
  if (shifted % kSecondsPerDay < 0) --d;
  return d;
}

inline int64_t day_start_epoch(int64_t day, int tz_offset_minutes) {
  return day * kSecondsPerDay - static_cast<int64_t>(tz_offset_minutes) * 60;
}

// 0 = Monday .. 6 = Sunday. Day 0 (1970-01-01) was a Thursday.
inline int weekday(int64_t day) {
  int64_t w = (day + 3) % 7;
  if (w < 0) w += 7;
  return static_cast<int>(w);
}

inline bool is_weekend(int64_t day) { return weekday(day) >= 5; }

struct CivilDate {
  int year;
  unsigned month;
  unsigned day;
};

CivilDate civil_from_day(int64_t day);
int64_t day_from_civil(int year, unsigned month, unsigned day);
std::string format_date(int64_t day);

}  // namespace mobiscope
