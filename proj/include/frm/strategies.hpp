#ifndef FRM_STRATEGIES_HPP
#define FRM_STRATEGIES_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "frm/market.hpp"

namespace frm {

struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StrategyConfig {
    double mpp = 0.0;     // requested fee on every bid
    double t_comp_h = 1.0;  // forecast lead reserved before the bidding deadline
    std::uint64_t seed = 0;
    std::string default_market;  // strategy 3 schemes 1-3 without forecasts
};

// Forecast view of one market over the bidding interval, aligned to the
// epoch list of StrategyInputs. nu is the effective normalized uncertainty
// (both uncertainty measures must pass, so the larger one is carried).
struct MarketEpochForecast {
    std::string market_id;
    std::vector<double> f_fee;
    std::vector<double> nu;
};

struct StrategyInputs {
    std::vector<HourTs> epochs;
    std::vector<MarketEpochForecast> day_ahead;  // listed in tie-break order
    std::optional<MarketEpochForecast> epoch_ahead;
    std::map<std::string, double> thresholds;  // UT per day-ahead market

    void validate() const;
};

enum class BidPhase { DayAheadRound, EpochAheadFallback };

struct PlanEntry {
    HourTs epoch = 0;
    std::string market_id;
    double capacity = 0.0;
    double requested_fee = 0.0;
    BidPhase phase = BidPhase::DayAheadRound;
    // filled in by annotate_clearing
    bool cleared = false;
    bool accepted = false;
    double paid_price = 0.0;
    double revenue = 0.0;
};

struct BiddingPlan {
    std::vector<PlanEntry> entries;

    double total_revenue() const;
};

struct RescheduleConstraints {
    double energy_kwh = 0.0;  // E
    double p_max_kw = 0.0;
    int e_earliest = 0;
    int e_latest = 0;  // inclusive, epoch indices into the interval
    int epochs_per_hour = 1;

    int e_total() const { return e_latest - e_earliest + 1; }
    void validate() const;
};

// roundUp(E / P_max) * e_h; throws InfeasibleError when the result exceeds
// the schedulable range.
int n_min(const RescheduleConstraints& c);

// Per epoch: among day-ahead markets whose nu is strictly below their
// threshold, bid the full capacity on the highest forecast at MPP. Epochs
// with no eligible market are left for the epoch-ahead fallback.
BiddingPlan strategy1(const StrategyInputs& in, const std::vector<double>& capacity,
                      const StrategyConfig& cfg);

// Strategy 1 plus the multi-stage comparison: the day-ahead bid is skipped
// whenever the epoch-ahead forecast beats the best eligible day-ahead one.
BiddingPlan strategy2(const StrategyInputs& in, const std::vector<double>& capacity,
                      const StrategyConfig& cfg);

// Reschedulable-load strategy. Schemes:
//   1 constant power across the range
//   2 P_max on the first N_min epochs
//   3 P_max on N_min seeded-random distinct epochs
//   4 P_max on the N_min epochs whose best-market forecast is highest
BiddingPlan strategy3(const StrategyInputs& in, const RescheduleConstraints& c, int scheme,
                      const StrategyConfig& cfg);

// Clears every not-yet-cleared entry against the historical prices and fills
// in the acceptance/revenue annotations.
void annotate_clearing(BiddingPlan& plan, const PriceBook& book, double epoch_duration_h = 1.0);

// Strategies 1-2 residual round: full capacity of every epoch without an
// accepted day-ahead bid goes to the epoch-ahead market at MPP.
std::vector<PlanEntry> fallback_unplaced_or_rejected(const BiddingPlan& cleared,
                                                     const StrategyInputs& in,
                                                     const std::vector<double>& capacity,
                                                     const std::string& epoch_ahead_id,
                                                     const StrategyConfig& cfg);

// Strategy 3 residual round: every rejected bid is repeated on the
// epoch-ahead market.
std::vector<PlanEntry> fallback_rejected(const BiddingPlan& cleared,
                                         const std::string& epoch_ahead_id);

}  // namespace frm

#endif
