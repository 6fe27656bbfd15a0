#ifndef FRM_BACKTEST_HPP
#define FRM_BACKTEST_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "frm/calibration.hpp"
#include "frm/data.hpp"
#include "frm/gsom.hpp"
#include "frm/market.hpp"
#include "frm/mlp.hpp"
#include "frm/strategies.hpp"

namespace frm {

struct ExperimentConfig {
    MarketSet markets;
    DayTs start_day = 0;
    int n_days = 30;
    int strategy = 1;
    int scheme = 1;  // strategy 3 only
    int mc_samples = 500;
    std::uint64_t seed = 0;
    MlpTrainConfig train;
    GsomParams gsom;
    bool use_gsom = true;
    bool perfect_foresight = false;  // forecasts = actuals, nu = 0
    bool no_uncertainty = false;     // nu = 0, thresholds = 1
    std::optional<ThresholdTable> fixed_thresholds;
    StrategyConfig strat;
    RescheduleConstraints resched;  // strategy 3 only, applied per day

    DayTs end_day() const { return start_day + n_days - 1; }
    // 180-day window plus 7-day feature lags must precede the range.
    DayTs earliest_required_day() const { return start_day - kWindowDays - kFeatureLagDays; }
};

// Day-ahead forecast of one market for one day; nu is the effective
// normalized uncertainty per hour (worse of MC-dropout and GSOM).
struct DayForecast {
    DayTs day = 0;
    std::array<double, kHoursPerDay> p_hat{};
    std::array<double, kHoursPerDay> nu{};
};

struct ForecastSet {
    std::vector<std::string> market_ids;  // config ordering
    // per market, one entry per backtest day
    std::map<std::string, std::vector<DayForecast>> by_market;
    DayTs start_day = 0;
    int n_days = 0;
};

struct DayRevenue {
    DayTs day = 0;
    double revenue = 0.0;
    double cumulative = 0.0;
};

struct BacktestReport {
    int strategy = 1;
    int scheme = 1;
    DayTs start_day = 0;
    int n_days = 0;
    std::vector<PlanEntry> bid_log;
    std::vector<DayRevenue> revenue_by_day;
    double total_revenue = 0.0;
    // strategy market selection vs the actual max-priced market
    std::vector<std::string> market_ids;
    std::vector<std::vector<std::size_t>> selection_confusion;  // chosen x actual
    double selection_accuracy = 0.0;
    double baseline_accuracy = 0.0;  // ungated forecast argmax, no market knowledge
    ThresholdTable thresholds;
    std::optional<UaStats> ua;

    std::string to_json() const;
};

// Fails before any computation when the configured range is not covered.
void preflight_coverage(const ExperimentConfig& cfg, const PriceBook& book);

// Walk-forward forecasting: for each day, retrain on the trailing window and
// forecast with MC dropout; GSOM supplies the second uncertainty opinion.
ForecastSet produce_forecasts(const ExperimentConfig& cfg, const PriceBook& book);

// Hour samples (prediction, actual, nu across markets) for UA calibration.
std::vector<HourSample> calibration_samples(const ExperimentConfig& cfg, const PriceBook& book,
                                            const ForecastSet& forecasts);

// Bidding, clearing and accounting over precomputed forecasts.
BacktestReport run_strategy(const ExperimentConfig& cfg, const PriceBook& book,
                            const ForecastSet& forecasts, const ThresholdTable& thresholds);

// Full pipeline: preflight, forecast, calibrate, bid, account.
BacktestReport run_experiment(const ExperimentConfig& cfg, const PriceBook& book);

struct ComparisonRow {
    std::string label;
    double selection_accuracy = 0.0;
    double total_revenue = 0.0;
};

struct Comparison {
    std::vector<ComparisonRow> rows;
    std::vector<DayTs> days;
    // cumulative revenue per report, aligned with `rows`
    std::vector<std::vector<double>> cumulative;

    std::string to_csv() const;  // date,label1,label2,...
};

Comparison compare_strategies(const std::vector<BacktestReport>& reports,
                              const std::vector<std::string>& labels);

std::string forecast_set_to_json(const ForecastSet& forecasts);
ForecastSet forecast_set_from_json(const std::string& text);

// CSV/JSON artifacts under `dir` (created if missing).
void write_report(const BacktestReport& report, const std::string& dir);
void write_forecast_csv(const ForecastSet& forecasts, const std::string& path);
void write_threshold_csv(const ThresholdTable& table, const UaStats& stats,
                         const std::string& path);

}  // namespace frm

#endif
