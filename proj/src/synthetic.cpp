#include "frm/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "frm/mlp.hpp"  // subseed

namespace frm {

PriceBook generate_synthetic(DayTs first_day, DayTs last_day, const SyntheticParams& p) {
    if (first_day > last_day) throw InvariantError("empty synthetic range");

    std::mt19937_64 regime_rng(subseed(p.seed, 1));
    std::mt19937_64 fcrn_rng(subseed(p.seed, 2));
    std::mt19937_64 fcrd_rng(subseed(p.seed, 3));
    std::mt19937_64 mfrr_rng(subseed(p.seed, 4));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<PriceRecord> fcrn, fcrd, mfrr;
    bool stress = false;
    const double two_pi = 2.0 * std::numbers::pi;

    for (DayTs d = first_day; d <= last_day; ++d) {
        const double flip = unit(regime_rng);
        stress = stress ? flip < p.stress_stay_prob : flip < p.stress_enter_prob;

        const int wd = weekday_of(d);
        const double weekday_bump = (wd >= 5) ? -1.0 : 0.5;  // weekends sag a little

        const bool fcrd_zero =
            unit(fcrd_rng) < (stress ? p.fcrd_zero_day_prob_stress : p.fcrd_zero_day_prob);

        // fresh crash factor every stress day: the level is not recoverable
        // from any lagged feature
        const double crash =
            stress ? p.fcrn_crash_lo + (p.fcrn_crash_hi - p.fcrn_crash_lo) * unit(fcrn_rng) : 1.0;

        for (int h = 0; h < kHoursPerDay; ++h) {
            const HourTs hour = first_hour(d) + h;
            const double phase = two_pi * (h - 6) / 24.0;

            double vn = crash * (p.fcrn_level + weekday_bump + p.fcrn_daily_amp * std::sin(phase)) +
                        p.fcrn_noise * gauss(fcrn_rng);
            if (stress) vn += p.fcrn_stress_noise * gauss(fcrn_rng);
            fcrn.push_back({hour, std::max(0.0, vn)});

            double vd = 0.0;
            if (!fcrd_zero) {
                vd = p.fcrd_level + 0.8 * std::sin(phase) + p.fcrd_noise * gauss(fcrd_rng);
            }
            fcrd.push_back({hour, std::max(0.0, vd)});

            double vm;
            if (stress) {
                vm = p.mfrr_stress_level + 2.0 * std::sin(phase) +
                     p.mfrr_stress_noise * gauss(mfrr_rng);
            } else {
                vm = p.mfrr_base + p.mfrr_noise * gauss(mfrr_rng);
                if (unit(mfrr_rng) < p.mfrr_spike_prob) {
                    vm += p.mfrr_spike_scale * (0.5 + unit(mfrr_rng));
                }
            }
            mfrr.push_back({hour, std::max(0.0, vm)});
        }
    }

    PriceBook book;
    book.add(PriceSeries("FCR-N", std::move(fcrn)));
    book.add(PriceSeries("FCR-D", std::move(fcrd)));
    book.add(PriceSeries("mFRR", std::move(mfrr)));
    return book;
}

MarketSet synthetic_market_set(double portfolio_capacity_mw) {
    MarketSet set;
    set.portfolio_capacity_mw = portfolio_capacity_mw;
    MarketSpec fcrn{"FCR-N", MarketKind::DayAhead, 1.0, 24, 0.0, true, false};
    MarketSpec fcrd{"FCR-D", MarketKind::DayAhead, 1.0, 24, 0.0, false, false};
    MarketSpec mfrr{"mFRR", MarketKind::EpochAhead, 1.0, 1, 0.0, false, false};
    set.markets = {fcrn, fcrd, mfrr};
    return set;
}

}  // namespace frm
