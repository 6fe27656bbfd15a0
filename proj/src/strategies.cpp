#include "frm/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "frm/mlp.hpp"  // subseed

namespace frm {

void StrategyInputs::validate() const {
    for (const auto& m : day_ahead) {
        if (m.f_fee.size() != epochs.size() || m.nu.size() != epochs.size()) {
            throw DataGapError("missing forecast for market " + m.market_id + ": expected " +
                               std::to_string(epochs.size()) + " epochs");
        }
        if (!thresholds.count(m.market_id)) {
            throw DataGapError("no uncertainty threshold for market " + m.market_id);
        }
    }
    if (epoch_ahead &&
        (epoch_ahead->f_fee.size() != epochs.size() || epoch_ahead->nu.size() != epochs.size())) {
        throw DataGapError("missing epoch-ahead forecast for market " + epoch_ahead->market_id);
    }
}

double BiddingPlan::total_revenue() const {
    double total = 0.0;
    for (const auto& e : entries) total += e.revenue;
    return total;
}

void RescheduleConstraints::validate() const {
    if (!(energy_kwh > 0.0)) throw InvariantError("reschedulable energy must be > 0");
    if (!(p_max_kw > 0.0)) throw InvariantError("P_max must be > 0");
    if (e_earliest > e_latest) throw InvariantError("e_earliest must not exceed e_latest");
    if (epochs_per_hour < 1) throw InvariantError("epochs per hour must be >= 1");
}

int n_min(const RescheduleConstraints& c) {
    c.validate();
    const int n = static_cast<int>(std::ceil(c.energy_kwh / c.p_max_kw)) * c.epochs_per_hour;
    if (n > c.e_total()) {
        throw InfeasibleError("schedule infeasible: needs " + std::to_string(n) +
                              " epochs but only " + std::to_string(c.e_total()) + " available");
    }
    return n;
}

namespace {

// Index of the eligible day-ahead market with the highest forecast for epoch
// index k, or nullopt when no market passes its uncertainty gate. Forecast
// ties keep the earlier market in the configured ordering.
std::optional<std::size_t> best_eligible(const StrategyInputs& in, std::size_t k) {
    std::optional<std::size_t> best;
    for (std::size_t m = 0; m < in.day_ahead.size(); ++m) {
        const auto& mf = in.day_ahead[m];
        if (!(mf.nu[k] < in.thresholds.at(mf.market_id))) continue;
        if (!best || mf.f_fee[k] > in.day_ahead[*best].f_fee[k]) best = m;
    }
    return best;
}

BiddingPlan day_ahead_round(const StrategyInputs& in, const std::vector<double>& capacity,
                            const StrategyConfig& cfg, bool epoch_ahead_comparison) {
    in.validate();
    if (capacity.size() != in.epochs.size()) {
        throw InvariantError("capacity vector must cover every epoch");
    }
    if (epoch_ahead_comparison && !in.epoch_ahead) {
        throw DataGapError("strategy 2 requires an epoch-ahead forecast");
    }

    BiddingPlan plan;
    for (std::size_t k = 0; k < in.epochs.size(); ++k) {
        if (capacity[k] <= 0.0) continue;
        const auto best = best_eligible(in, k);
        if (!best) continue;
        if (epoch_ahead_comparison &&
            in.epoch_ahead->f_fee[k] > in.day_ahead[*best].f_fee[k]) {
            continue;  // the tertiary market is expected to pay more
        }
        plan.entries.push_back({in.epochs[k], in.day_ahead[*best].market_id, capacity[k],
                                cfg.mpp, BidPhase::DayAheadRound});
    }
    return plan;
}

}  // namespace

BiddingPlan strategy1(const StrategyInputs& in, const std::vector<double>& capacity,
                      const StrategyConfig& cfg) {
    return day_ahead_round(in, capacity, cfg, false);
}

BiddingPlan strategy2(const StrategyInputs& in, const std::vector<double>& capacity,
                      const StrategyConfig& cfg) {
    return day_ahead_round(in, capacity, cfg, true);
}

BiddingPlan strategy3(const StrategyInputs& in, const RescheduleConstraints& c, int scheme,
                      const StrategyConfig& cfg) {
    if (scheme < 1 || scheme > 4) {
        throw std::invalid_argument("scheme must be 1..4, got " + std::to_string(scheme));
    }
    c.validate();
    if (c.e_latest >= static_cast<int>(in.epochs.size())) {
        throw InvariantError("schedulable range exceeds the bidding interval");
    }
    const int nmin = n_min(c);

    const bool have_forecasts = !in.day_ahead.empty() || in.epoch_ahead.has_value();
    if (scheme == 4 && !have_forecasts) {
        throw DataGapError("scheme 4 requires forecasts");
    }
    if (have_forecasts) in.validate();

    // Market per epoch index: best gated day-ahead forecast, with the
    // (ungated) epoch-ahead market competing when present. Without forecasts,
    // schemes 1-3 fall back to the configured default market.
    auto market_for = [&](std::size_t k) -> std::pair<std::string, double> {
        if (!have_forecasts) {
            if (cfg.default_market.empty()) {
                throw DataGapError("no forecasts and no default market configured");
            }
            return {cfg.default_market, 0.0};
        }
        const auto best = best_eligible(in, k);
        std::string id;
        double fee = -std::numeric_limits<double>::infinity();
        if (best) {
            id = in.day_ahead[*best].market_id;
            fee = in.day_ahead[*best].f_fee[k];
        }
        if (in.epoch_ahead && in.epoch_ahead->f_fee[k] > fee) {
            id = in.epoch_ahead->market_id;
            fee = in.epoch_ahead->f_fee[k];
        }
        if (id.empty()) throw DataGapError("no market available for epoch index " +
                                           std::to_string(k));
        return {id, fee};
    };

    std::vector<std::size_t> selected;  // epoch indices that get capacity
    std::vector<double> cap;            // capacity per selected epoch
    switch (scheme) {
        case 1: {
            // constant power over the schedulable window
            const double hours = static_cast<double>(c.e_total()) / c.epochs_per_hour;
            const double power = c.energy_kwh / hours;
            for (int e = c.e_earliest; e <= c.e_latest; ++e) {
                selected.push_back(static_cast<std::size_t>(e));
                cap.push_back(power);
            }
            break;
        }
        case 2: {
            for (int e = c.e_earliest; e < c.e_earliest + nmin; ++e) {
                selected.push_back(static_cast<std::size_t>(e));
                cap.push_back(c.p_max_kw);
            }
            break;
        }
        case 3: {
            std::mt19937_64 rng(subseed(cfg.seed, 3));
            std::vector<int> range;
            for (int e = c.e_earliest; e <= c.e_latest; ++e) range.push_back(e);
            // partial Fisher-Yates, bounded draws via rejection for a stable
            // stream of uniform indices
            auto uniform_index = [&rng](std::size_t n) {
                const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
                std::uint64_t v;
                do {
                    v = rng();
                } while (v >= limit);
                return static_cast<std::size_t>(v % n);
            };
            for (int i = 0; i < nmin; ++i) {
                const std::size_t j = i + uniform_index(range.size() - i);
                std::swap(range[i], range[j]);
            }
            std::sort(range.begin(), range.begin() + nmin);
            for (int i = 0; i < nmin; ++i) {
                selected.push_back(static_cast<std::size_t>(range[i]));
                cap.push_back(c.p_max_kw);
            }
            break;
        }
        case 4: {
            // epochs ranked by their best market's forecast, ties to the
            // lower epoch index
            std::vector<std::size_t> order;
            for (int e = c.e_earliest; e <= c.e_latest; ++e) {
                order.push_back(static_cast<std::size_t>(e));
            }
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return market_for(a).second > market_for(b).second;
            });
            order.resize(static_cast<std::size_t>(nmin));
            std::sort(order.begin(), order.end());
            for (std::size_t e : order) {
                selected.push_back(e);
                cap.push_back(c.p_max_kw);
            }
            break;
        }
    }

    BiddingPlan plan;
    for (std::size_t i = 0; i < selected.size(); ++i) {
        const std::size_t k = selected[i];
        plan.entries.push_back({in.epochs[k], market_for(k).first, cap[i], cfg.mpp,
                                BidPhase::DayAheadRound});
    }
    return plan;
}

void annotate_clearing(BiddingPlan& plan, const PriceBook& book, double epoch_duration_h) {
    for (auto& e : plan.entries) {
        if (e.cleared) continue;
        const auto price = book.series(e.market_id).price_at(e.epoch);
        if (!price) {
            throw DataGapError("no clearing price for market " + e.market_id + " at epoch " +
                               format_hour_utc(e.epoch));
        }
        e.cleared = true;
        e.accepted = *price > 0.0 && e.requested_fee <= *price;
        e.paid_price = e.accepted ? *price : 0.0;
        e.revenue = e.accepted ? e.capacity * *price * epoch_duration_h : 0.0;
    }
}

std::vector<PlanEntry> fallback_unplaced_or_rejected(const BiddingPlan& cleared,
                                                     const StrategyInputs& in,
                                                     const std::vector<double>& capacity,
                                                     const std::string& epoch_ahead_id,
                                                     const StrategyConfig& cfg) {
    std::set<HourTs> covered;
    for (const auto& e : cleared.entries) {
        if (!e.cleared) throw InvariantError("fallback requires a cleared day-ahead plan");
        if (e.accepted) covered.insert(e.epoch);
    }
    std::vector<PlanEntry> out;
    for (std::size_t k = 0; k < in.epochs.size(); ++k) {
        if (capacity[k] <= 0.0 || covered.count(in.epochs[k])) continue;
        out.push_back({in.epochs[k], epoch_ahead_id, capacity[k], cfg.mpp,
                       BidPhase::EpochAheadFallback});
    }
    return out;
}

std::vector<PlanEntry> fallback_rejected(const BiddingPlan& cleared,
                                         const std::string& epoch_ahead_id) {
    std::vector<PlanEntry> out;
    for (const auto& e : cleared.entries) {
        if (!e.cleared) throw InvariantError("fallback requires a cleared day-ahead plan");
        if (e.accepted || e.market_id == epoch_ahead_id) continue;
        out.push_back({e.epoch, epoch_ahead_id, e.capacity, e.requested_fee,
                       BidPhase::EpochAheadFallback});
    }
    return out;
}

}  // namespace frm
