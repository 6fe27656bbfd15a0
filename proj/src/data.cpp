#include "frm/data.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace frm {

PriceSeries ingest_csv(const std::string& path, const std::string& market_id,
                       IngestReport* report) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);

    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "timestamp,price") {
        throw ParseError(path + ":1: expected header 'timestamp,price', got '" + line + "'");
    }

    std::vector<PriceRecord> records;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": missing comma");
        }
        const std::string ts = line.substr(0, comma);
        const std::string price_str = line.substr(comma + 1);
        HourTs hour = 0;
        double price = 0.0;
        try {
            hour = parse_hour_utc(ts);
            std::size_t pos = 0;
            price = std::stod(price_str, &pos);
            if (pos != price_str.size()) throw std::invalid_argument("trailing junk");
        } catch (const std::exception& e) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        records.push_back({hour, price});
    }

    PriceSeries series(market_id, std::move(records));
    if (report) {
        report->rows = series.size();
        report->gaps = series.gaps();
    }
    return series;
}

void write_csv(const PriceSeries& series, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out << "timestamp,price\n";
    char buf[32];
    for (const auto& r : series.records()) {
        std::snprintf(buf, sizeof(buf), "%.10g", r.price);
        out << format_hour_utc(r.hour) << ',' << buf << '\n';
    }
}

Standardizer fit_standardizer(const PriceSeries& series, DayTs first_day, DayTs last_day) {
    double sum = 0.0, sumsq = 0.0;
    std::size_t n = 0;
    for (DayTs d = first_day; d <= last_day; ++d) {
        for (int h = 0; h < kHoursPerDay; ++h) {
            if (auto p = series.price_at(first_hour(d) + h)) {
                sum += *p;
                sumsq += *p * *p;
                ++n;
            }
        }
    }
    if (n == 0) throw DataGapError(series.market_id() + ": no data in standardization span");
    Standardizer s;
    s.mean = sum / static_cast<double>(n);
    const double var = std::max(0.0, sumsq / static_cast<double>(n) - s.mean * s.mean);
    s.std = std::max(std::sqrt(var), 1e-12);
    return s;
}

FeatureVector build_features(const PriceSeries& series, DayTs target_day,
                             const Standardizer& stats) {
    // Lags must be complete: a gap inside any of d-7..d-1 disqualifies the day.
    for (int lag = 1; lag <= kFeatureLagDays; ++lag) {
        if (!series.has_full_day(target_day - lag)) {
            throw DataGapError(series.market_id() + ": insufficient history before " +
                               format_day(target_day) + " (gap in day " +
                               format_day(target_day - lag) + ")");
        }
    }

    FeatureVector fv;
    fv.target_day = target_day;
    fv.market_id = series.market_id();

    std::size_t k = 0;
    const auto d1 = series.day_prices(target_day - 1);
    for (double p : d1) fv.values[k++] = stats.apply(p);
    const auto d7 = series.day_prices(target_day - 7);
    for (double p : d7) fv.values[k++] = stats.apply(p);

    const int wd = weekday_of(target_day);
    for (int i = 0; i < 7; ++i) fv.values[k++] = (i == wd) ? 1.0 : 0.0;

    const double angle =
        2.0 * std::numbers::pi * static_cast<double>(day_of_year(target_day) - 1) / 365.25;
    fv.values[k++] = std::sin(angle);
    fv.values[k++] = std::cos(angle);

    for (int lag = 7; lag >= 1; --lag) {
        const auto day = series.day_prices(target_day - lag);
        double mean = 0.0;
        for (double p : day) mean += p;
        mean /= kHoursPerDay;
        fv.values[k++] = stats.apply(mean);
    }
    return fv;
}

TrainingWindow build_training_window(const PriceSeries& series, DayTs forecast_day,
                                     int window_days) {
    TrainingWindow w;
    w.market_id = series.market_id();
    w.last_day = forecast_day - 1;
    w.first_day = forecast_day - window_days;
    w.stats = fit_standardizer(series, w.first_day, w.last_day);

    for (DayTs d = w.first_day; d <= w.last_day; ++d) {
        bool usable = series.has_full_day(d);
        for (int lag = 1; usable && lag <= kFeatureLagDays; ++lag) {
            usable = series.has_full_day(d - lag);
        }
        if (!usable) continue;  // gaps are skipped, never imputed

        TrainingSample s;
        s.features = build_features(series, d, w.stats);
        const auto prices = series.day_prices(d);
        for (int h = 0; h < kHoursPerDay; ++h) s.target[h] = w.stats.apply(prices[h]);
        w.samples.push_back(std::move(s));
    }
    return w;
}

}  // namespace frm
