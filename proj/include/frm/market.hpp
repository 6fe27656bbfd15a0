#ifndef FRM_MARKET_HPP
#define FRM_MARKET_HPP

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "frm/time.hpp"

namespace frm {

struct DataGapError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InvariantError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class MarketKind { DayAhead, EpochAhead };

// Static description of one reserve market.
struct MarketSpec {
    std::string id;
    MarketKind kind = MarketKind::DayAhead;
    double epoch_duration_h = 1.0;
    int epochs_per_interval = 24;  // 24 day-ahead, 1 epoch-ahead
    double bid_deadline_offset_h = 12.0;  // lead before interval start
    bool symmetric = true;
    bool peak_hours_only = false;

    void validate() const;
};

// A configured market set. Exactly one EpochAhead market; ordering is the
// tie-break ordering used everywhere.
struct MarketSet {
    std::vector<MarketSpec> markets;
    double portfolio_capacity_mw = 10.0;

    void validate() const;
    const MarketSpec& epoch_ahead() const;
    std::vector<const MarketSpec*> day_ahead() const;
    const MarketSpec* find(const std::string& id) const;
};

struct PriceRecord {
    HourTs hour;
    double price;  // currency/MW/h, >= 0
};

// Validated hourly clearing-price history for one market.
class PriceSeries {
public:
    PriceSeries() = default;
    // Throws InvariantError on unsorted/duplicate timestamps or bad prices.
    PriceSeries(std::string market_id, std::vector<PriceRecord> records);

    const std::string& market_id() const { return market_id_; }
    const std::vector<PriceRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    std::optional<double> price_at(HourTs hour) const;
    // True iff all 24 hours of the day are present.
    bool has_full_day(DayTs day) const;
    // The 24 prices of a full day; throws DataGapError when incomplete.
    std::vector<double> day_prices(DayTs day) const;

    // Hours missing between the first and last record.
    std::vector<HourTs> gaps() const;

private:
    std::string market_id_;
    std::vector<PriceRecord> records_;
    std::map<HourTs, double> by_hour_;
};

// Per-market histories, keyed by market id.
class PriceBook {
public:
    void add(PriceSeries series);
    const PriceSeries& series(const std::string& market_id) const;
    bool has(const std::string& market_id) const;
    std::vector<std::string> market_ids() const;

private:
    std::map<std::string, PriceSeries> series_;
};

struct Bid {
    std::string market_id;
    HourTs epoch;
    double capacity;       // MW, > 0
    double requested_fee;  // currency/MW/h, >= 0
};

struct AuctionResult {
    std::string market_id;
    HourTs epoch;
    double clearing_price;
    bool accepted;
    double procured_capacity;  // sum of accepted capacities in this simulation
};

// Replay clearing: a bid is accepted iff requested_fee <= historical clearing
// price and the price is positive (zero price means no market was held).
std::vector<AuctionResult> clear_auction(std::span<const Bid> bids, const PriceSeries& history);
std::vector<AuctionResult> clear_auction(std::span<const Bid> bids, const PriceBook& book);

struct RevenueBreakdown {
    double total = 0.0;
    std::vector<double> per_bid;  // aligned with the bid list
};

// Accepted bid pays capacity * clearing_price * epoch duration.
RevenueBreakdown revenue(std::span<const AuctionResult> results, std::span<const Bid> bids,
                         double epoch_duration_h = 1.0);

}  // namespace frm

#endif
