#ifndef FRM_DATA_HPP
#define FRM_DATA_HPP

#include <array>
#include <string>
#include <vector>

#include "frm/market.hpp"
#include "frm/time.hpp"

namespace frm {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr int kFeatureDim = 64;

struct IngestReport {
    std::size_t rows = 0;
    std::vector<HourTs> gaps;  // missing hours inside the covered range
};

// Reads `timestamp,price` CSV (ISO-8601 UTC hours) into a validated series.
// Gaps are legal but reported. Throws ParseError with the offending line
// number on malformed rows; InvariantError on duplicate/unsorted timestamps.
PriceSeries ingest_csv(const std::string& path, const std::string& market_id,
                       IngestReport* report = nullptr);

void write_csv(const PriceSeries& series, const std::string& path);

// Price standardization statistics of one training window.
struct Standardizer {
    double mean = 0.0;
    double std = 1.0;

    double apply(double x) const { return (x - mean) / std; }
    double invert(double z) const { return z * std + mean; }
};

// Mean/std over all hourly prices of the given days; std is floored at 1e-12
// so constant windows standardize to zero instead of dividing by zero.
Standardizer fit_standardizer(const PriceSeries& series, DayTs first_day, DayTs last_day);

// Input vector for one forecast day: 24 prices of d-1, 24 prices of d-7,
// 7-way weekday one-hot, sin/cos of the day-of-year angle, and the 7 daily
// mean prices of d-7..d-1. Price entries are standardized.
struct FeatureVector {
    std::array<double, kFeatureDim> values{};
    DayTs target_day = 0;
    std::string market_id;
};

FeatureVector build_features(const PriceSeries& series, DayTs target_day,
                             const Standardizer& stats);

struct TrainingSample {
    FeatureVector features;
    std::array<double, kHoursPerDay> target{};  // standardized actual prices of target_day
};

// 180 consecutive candidate target days ending the day before `forecast_day`.
// Days whose feature lags or targets hit a data gap are skipped, not imputed.
struct TrainingWindow {
    std::vector<TrainingSample> samples;
    Standardizer stats;
    DayTs first_day = 0;
    DayTs last_day = 0;
    std::string market_id;
};

inline constexpr int kWindowDays = 180;
// Feature lags reach back 7 days and need full days d-1 and d-7.
inline constexpr int kFeatureLagDays = 7;

TrainingWindow build_training_window(const PriceSeries& series, DayTs forecast_day,
                                     int window_days = kWindowDays);

}  // namespace frm

#endif
