#include "frm/time.hpp"

#include <cstdio>
#include <stdexcept>

namespace frm {

// Civil date conversions after Howard Hinnant's chrono-compatible algorithms.
CivilDate civil_from_day(DayTs z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    return {static_cast<int>(y + (m <= 2)), m, d};
}

DayTs day_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

int day_of_year(DayTs d) {
    const CivilDate c = civil_from_day(d);
    return static_cast<int>(d - day_from_civil(c.year, 1, 1)) + 1;
}

HourTs parse_hour_utc(const std::string& s) {
    int y = 0;
    unsigned mo = 0, dy = 0, hh = 0, mi = 0, ss = 0;
    char z = 0;
    if (std::sscanf(s.c_str(), "%d-%2u-%2uT%2u:%2u:%2u%c", &y, &mo, &dy, &hh, &mi, &ss, &z) != 7 ||
        z != 'Z' || mo < 1 || mo > 12 || dy < 1 || dy > 31 || hh > 23 || mi != 0 || ss != 0) {
        throw std::invalid_argument("bad UTC hour timestamp: '" + s + "'");
    }
    return first_hour(day_from_civil(y, mo, dy)) + static_cast<HourTs>(hh);
}

std::string format_hour_utc(HourTs h) {
    const CivilDate c = civil_from_day(day_of(h));
    const int hh = static_cast<int>(h - first_hour(day_of(h)));
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:00:00Z", c.year, c.month, c.day, hh);
    return buf;
}

DayTs parse_day(const std::string& s) {
    int y = 0;
    unsigned mo = 0, dy = 0;
    if (std::sscanf(s.c_str(), "%d-%2u-%2u", &y, &mo, &dy) != 3 || mo < 1 || mo > 12 || dy < 1 ||
        dy > 31) {
        throw std::invalid_argument("bad date: '" + s + "'");
    }
    return day_from_civil(y, mo, dy);
}

std::string format_day(DayTs d) {
    const CivilDate c = civil_from_day(d);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", c.year, c.month, c.day);
    return buf;
}

}  // namespace frm
