#include "frm/market.hpp"

#include <algorithm>
#include <cmath>

namespace frm {

void MarketSpec::validate() const {
    if (id.empty()) throw InvariantError("market id must not be empty");
    if (epochs_per_interval < 1) throw InvariantError(id + ": epochs_per_interval must be >= 1");
    if (!(epoch_duration_h > 0.0)) throw InvariantError(id + ": epoch_duration must be > 0");
    if (kind == MarketKind::EpochAhead && epochs_per_interval != 1) {
        throw InvariantError(id + ": epoch-ahead market must have epochs_per_interval = 1");
    }
}

void MarketSet::validate() const {
    int n_epoch_ahead = 0;
    for (const auto& m : markets) {
        m.validate();
        if (m.kind == MarketKind::EpochAhead) ++n_epoch_ahead;
    }
    if (n_epoch_ahead != 1) {
        throw InvariantError("market set must contain exactly one epoch-ahead market, got " +
                             std::to_string(n_epoch_ahead));
    }
    if (portfolio_capacity_mw < 0.0) throw InvariantError("portfolio capacity must be >= 0");
}

const MarketSpec& MarketSet::epoch_ahead() const {
    for (const auto& m : markets) {
        if (m.kind == MarketKind::EpochAhead) return m;
    }
    throw InvariantError("no epoch-ahead market configured");
}

std::vector<const MarketSpec*> MarketSet::day_ahead() const {
    std::vector<const MarketSpec*> out;
    for (const auto& m : markets) {
        if (m.kind == MarketKind::DayAhead) out.push_back(&m);
    }
    return out;
}

const MarketSpec* MarketSet::find(const std::string& id) const {
    for (const auto& m : markets) {
        if (m.id == id) return &m;
    }
    return nullptr;
}

PriceSeries::PriceSeries(std::string market_id, std::vector<PriceRecord> records)
    : market_id_(std::move(market_id)), records_(std::move(records)) {
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& r = records_[i];
        if (!std::isfinite(r.price) || r.price < 0.0) {
            throw InvariantError(market_id_ + ": price at " + format_hour_utc(r.hour) +
                                 " must be finite and >= 0");
        }
        if (i > 0 && records_[i - 1].hour >= r.hour) {
            throw InvariantError(market_id_ + ": timestamps must be strictly increasing at " +
                                 format_hour_utc(r.hour));
        }
        by_hour_.emplace(r.hour, r.price);
    }
}

std::optional<double> PriceSeries::price_at(HourTs hour) const {
    auto it = by_hour_.find(hour);
    if (it == by_hour_.end()) return std::nullopt;
    return it->second;
}

bool PriceSeries::has_full_day(DayTs day) const {
    const HourTs h0 = first_hour(day);
    for (int h = 0; h < kHoursPerDay; ++h) {
        if (!by_hour_.count(h0 + h)) return false;
    }
    return true;
}

std::vector<double> PriceSeries::day_prices(DayTs day) const {
    std::vector<double> out;
    out.reserve(kHoursPerDay);
    const HourTs h0 = first_hour(day);
    for (int h = 0; h < kHoursPerDay; ++h) {
        auto p = price_at(h0 + h);
        if (!p) {
            throw DataGapError(market_id_ + ": missing hour " + format_hour_utc(h0 + h));
        }
        out.push_back(*p);
    }
    return out;
}

std::vector<HourTs> PriceSeries::gaps() const {
    std::vector<HourTs> out;
    for (std::size_t i = 1; i < records_.size(); ++i) {
        for (HourTs h = records_[i - 1].hour + 1; h < records_[i].hour; ++h) out.push_back(h);
    }
    return out;
}

void PriceBook::add(PriceSeries series) {
    auto id = series.market_id();
    series_.insert_or_assign(std::move(id), std::move(series));
}

const PriceSeries& PriceBook::series(const std::string& market_id) const {
    auto it = series_.find(market_id);
    if (it == series_.end()) throw DataGapError("no price history for market " + market_id);
    return it->second;
}

bool PriceBook::has(const std::string& market_id) const { return series_.count(market_id) > 0; }

std::vector<std::string> PriceBook::market_ids() const {
    std::vector<std::string> ids;
    for (const auto& [id, _] : series_) ids.push_back(id);
    return ids;
}

namespace {

AuctionResult clear_one(const Bid& bid, const PriceSeries& history) {
    const auto price = history.price_at(bid.epoch);
    if (!price) {
        throw DataGapError("no clearing price for market " + bid.market_id + " at epoch " +
                           format_hour_utc(bid.epoch));
    }
    const bool accepted = *price > 0.0 && bid.requested_fee <= *price;
    return {bid.market_id, bid.epoch, *price, accepted, accepted ? bid.capacity : 0.0};
}

}  // namespace

std::vector<AuctionResult> clear_auction(std::span<const Bid> bids, const PriceSeries& history) {
    std::vector<AuctionResult> out;
    out.reserve(bids.size());
    for (const auto& bid : bids) out.push_back(clear_one(bid, history));
    return out;
}

std::vector<AuctionResult> clear_auction(std::span<const Bid> bids, const PriceBook& book) {
    std::vector<AuctionResult> out;
    out.reserve(bids.size());
    for (const auto& bid : bids) out.push_back(clear_one(bid, book.series(bid.market_id)));
    return out;
}

RevenueBreakdown revenue(std::span<const AuctionResult> results, std::span<const Bid> bids,
                         double epoch_duration_h) {
    if (results.size() != bids.size()) {
        throw InvariantError("results and bids must correspond one-to-one");
    }
    RevenueBreakdown out;
    out.per_bid.reserve(bids.size());
    for (std::size_t i = 0; i < bids.size(); ++i) {
        if (results[i].market_id != bids[i].market_id || results[i].epoch != bids[i].epoch) {
            throw InvariantError("result/bid mismatch at index " + std::to_string(i));
        }
        const double r = results[i].accepted
                             ? bids[i].capacity * results[i].clearing_price * epoch_duration_h
                             : 0.0;
        out.per_bid.push_back(r);
        out.total += r;
    }
    return out;
}

}  // namespace frm
