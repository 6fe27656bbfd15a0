#include "frm/calibration.hpp"

#include <cmath>
#include <stdexcept>

namespace frm {

std::size_t argmax_market(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("argmax over empty market set");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;  // tie keeps the earlier market
    }
    return best;
}

bool classify_accuracy(std::span<const double> pred, std::span<const double> actual) {
    if (pred.size() != actual.size() || pred.size() < 2) {
        throw std::invalid_argument("classify_accuracy: mismatched or trivial market sets");
    }
    return argmax_market(pred) == argmax_market(actual);
}

bool classify_certainty(double nu, double u_th) { return nu < u_th; }

UaStats compute_ua(const ConfusionCounts& c) {
    if (c.total() == 0) throw std::invalid_argument("compute_ua: no evaluated hours");
    UaStats s;
    if (c.n_ac + c.n_ic > 0) {
        s.p_acc_given_cert = static_cast<double>(c.n_ac) / static_cast<double>(c.n_ac + c.n_ic);
    }
    if (c.n_au + c.n_iu > 0) {
        s.p_inacc_given_uncert =
            static_cast<double>(c.n_iu) / static_cast<double>(c.n_au + c.n_iu);
    }
    s.ua = static_cast<double>(c.n_ac + c.n_iu) / static_cast<double>(c.total());
    return s;
}

double ThresholdTable::threshold_for(const std::string& market_id) const {
    for (std::size_t i = 0; i < market_ids.size(); ++i) {
        if (market_ids[i] == market_id) return u_th[i];
    }
    throw std::invalid_argument("no threshold for market " + market_id);
}

ConfusionCounts count_confusion(std::span<const HourSample> hours,
                                std::span<const double> thresholds) {
    ConfusionCounts c;
    for (const auto& h : hours) {
        if (h.pred.size() != thresholds.size() || h.actual.size() != thresholds.size() ||
            h.nu.size() != thresholds.size()) {
            throw std::invalid_argument("hour sample does not match the market set");
        }
        const std::size_t sel = argmax_market(h.pred);
        const bool accurate = sel == argmax_market(h.actual);
        const bool certain = classify_certainty(h.nu[sel], thresholds[sel]);
        if (accurate) {
            certain ? ++c.n_ac : ++c.n_au;
        } else {
            certain ? ++c.n_ic : ++c.n_iu;
        }
    }
    return c;
}

ThresholdTable search_thresholds(std::span<const HourSample> hours,
                                 const std::vector<std::string>& market_ids) {
    if (hours.empty()) throw std::invalid_argument("search_thresholds: empty evaluation set");
    const std::size_t n_markets = market_ids.size();

    // An hour's certainty depends only on the threshold of its argmax-predicted
    // market, so the joint UA objective separates per market: maximizing
    // n_ac + n_iu within each market's hour partition reproduces the full
    // 101^|M| enumeration exactly.
    struct MarketHour {
        bool accurate;
        double nu;
    };
    std::vector<std::vector<MarketHour>> by_market(n_markets);
    for (const auto& h : hours) {
        if (h.pred.size() != n_markets || h.actual.size() != n_markets ||
            h.nu.size() != n_markets) {
            throw std::invalid_argument("hour sample does not match the market set");
        }
        const std::size_t sel = argmax_market(h.pred);
        by_market[sel].push_back({sel == argmax_market(h.actual), h.nu[sel]});
    }

    ThresholdTable table;
    table.market_ids = market_ids;
    table.u_th.resize(n_markets, 0.0);

    for (std::size_t m = 0; m < n_markets; ++m) {
        std::size_t best_score = 0;
        double best_t = 0.0;
        bool first = true;
        for (int step = 0; step < kGridSteps; ++step) {
            const double t = static_cast<double>(step) / 100.0;
            std::size_t score = 0;
            for (const auto& mh : by_market[m]) {
                const bool certain = classify_certainty(mh.nu, t);
                if ((mh.accurate && certain) || (!mh.accurate && !certain)) ++score;
            }
            if (first || score > best_score) {  // strict: ties keep the smaller t
                best_score = score;
                best_t = t;
                first = false;
            }
        }
        table.u_th[m] = best_t;
    }

    table.counts = count_confusion(hours, table.u_th);
    table.achieved_ua = compute_ua(table.counts).ua;
    return table;
}

}  // namespace frm
