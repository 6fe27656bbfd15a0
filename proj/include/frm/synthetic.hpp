#ifndef FRM_SYNTHETIC_HPP
#define FRM_SYNTHETIC_HPP

#include <cstdint>

#include "frm/market.hpp"

namespace frm {

// Synthetic three-market price generator with the statistical signature of
// the Finnish reserve markets: a smooth, learnable day-ahead market (FCR-N),
// a day-ahead market with frequent zero-price days (FCR-D), and an hour-ahead
// market (mFRR) that is cheap most of the time but jumps to multi-day
// high-price regimes during grid "stress" periods.
//
// A day-level two-state Markov chain drives the stress regime. During stress
// the mFRR level is elevated and persistent (so lag features make it
// learnable), FCR-N crashes by a fresh random factor each day (so its level
// becomes unpredictable and its forecasts uncertain), and FCR-D zero-price
// days become more frequent. Outside stress FCR-N is the highest-priced
// market nearly every hour.
struct SyntheticParams {
    std::uint64_t seed = 42;

    double stress_enter_prob = 0.10;  // per day, normal -> stress
    double stress_stay_prob = 0.80;   // per day, stress -> stress

    // FCR-N: daily sinusoid around a weekday-dependent level
    double fcrn_level = 11.0;
    double fcrn_daily_amp = 3.0;
    double fcrn_noise = 0.4;
    double fcrn_stress_noise = 1.5;
    // day-level multiplicative crash during stress, drawn uniformly per day
    double fcrn_crash_lo = 0.25;
    double fcrn_crash_hi = 1.0;

    // FCR-D: low flat price, whole days at zero
    double fcrd_level = 5.0;
    double fcrd_noise = 0.5;
    double fcrd_zero_day_prob = 0.25;
    double fcrd_zero_day_prob_stress = 0.55;

    // mFRR: low base, elevated during stress, rare lone spikes
    double mfrr_base = 3.0;
    double mfrr_noise = 0.7;
    double mfrr_stress_level = 21.0;
    double mfrr_stress_noise = 2.0;
    double mfrr_spike_prob = 0.008;  // per hour, outside stress
    double mfrr_spike_scale = 35.0;
};

// Hourly series for markets "FCR-N", "FCR-D", "mFRR" covering
// [first_day, last_day] inclusive. Deterministic given the seed.
PriceBook generate_synthetic(DayTs first_day, DayTs last_day, const SyntheticParams& params);

// The market set matching the generated data: FCR-N and FCR-D day-ahead,
// mFRR epoch-ahead, in that tie-break order.
MarketSet synthetic_market_set(double portfolio_capacity_mw = 10.0);

}  // namespace frm

#endif
