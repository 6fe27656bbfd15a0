#ifndef FRM_TIME_HPP
#define FRM_TIME_HPP

#include <cstdint>
#include <string>

namespace frm {

// Hours since the Unix epoch. All market epochs are hour-aligned.
using HourTs = std::int64_t;
// Days since the Unix epoch.
using DayTs = std::int64_t;

inline constexpr int kHoursPerDay = 24;

constexpr DayTs day_of(HourTs h) {
    // floor division, hours can be negative in principle
    return h >= 0 ? h / kHoursPerDay : -((-h + kHoursPerDay - 1) / kHoursPerDay);
}

constexpr HourTs first_hour(DayTs d) { return d * kHoursPerDay; }

// 1970-01-01 was a Thursday; Monday = 0.
constexpr int weekday_of(DayTs d) {
    std::int64_t w = (d + 3) % 7;
    return static_cast<int>(w < 0 ? w + 7 : w);
}

struct CivilDate {
    int year;
    unsigned month;  // 1..12
    unsigned day;    // 1..31
};

CivilDate civil_from_day(DayTs d);
DayTs day_from_civil(int year, unsigned month, unsigned day);

// Day of year, 1-based (Jan 1 -> 1).
int day_of_year(DayTs d);

// Parses "YYYY-MM-DDTHH:00:00Z". Throws std::invalid_argument on malformed input.
HourTs parse_hour_utc(const std::string& s);
std::string format_hour_utc(HourTs h);

// Parses "YYYY-MM-DD".
DayTs parse_day(const std::string& s);
std::string format_day(DayTs d);

}  // namespace frm

#endif
