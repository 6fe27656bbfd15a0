// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion is independent and prints its measured numbers so a
// failure is diagnosable from the log alone.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "frm/backtest.hpp"
#include "frm/synthetic.hpp"

using namespace frm;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
int failures = 0;

void report(int criterion, bool pass, const std::string& what) {
    std::printf("criterion %d: %s - %s\n", criterion, pass ? "PASS" : "FAIL", what.c_str());
    if (!pass) ++failures;
}

// ---------------------------------------------------------------- criterion 1

bool minimum_epochs() {
    // the 44 kWh / 22 kW electric-vehicle case needs exactly two hourly epochs
    RescheduleConstraints ev{44.0, 22.0, 0, 7, 1};
    if (n_min(ev) != 2) return false;

    // randomized cases against an independent ceiling-arithmetic oracle
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> energy(1.0, 120.0);
    std::uniform_real_distribution<double> power(5.0, 50.0);
    std::uniform_int_distribution<int> per_hour(1, 4);
    for (int i = 0; i < 50; ++i) {
        RescheduleConstraints c;
        c.energy_kwh = energy(rng);
        c.p_max_kw = power(rng);
        c.epochs_per_hour = per_hour(rng);
        c.e_earliest = 0;
        c.e_latest = 400;  // always feasible
        const long long oracle =
            static_cast<long long>(std::ceil(c.energy_kwh / c.p_max_kw)) * c.epochs_per_hour;
        if (n_min(c) != oracle) return false;
    }
    return true;
}

// ---------------------------------------------------------------- criterion 2

PriceSeries synthetic_series(const std::string& id, DayTs first, DayTs last) {
    SyntheticParams p;
    return generate_synthetic(first, last, p).series(id);
}

bool mc_dropout_consistency() {
    const DayTs day = parse_day("2018-05-10");
    const auto series = synthetic_series("FCR-N", day - 190, day);
    const auto window = build_training_window(series, day);
    MlpTrainConfig cfg;
    cfg.epochs = 60;
    const auto model = train_mlp(window, cfg, 31);
    const auto fv = build_features(series, day, window.stats);

    const auto fr = predict_mc(model, fv, 500, 77);
    if (fr.samples.size() != 500) return false;
    for (int h = 0; h < kHoursPerDay; ++h) {
        double mean = 0.0;
        for (const auto& row : fr.samples) mean += row[h];
        mean /= 500.0;
        double ss = 0.0;
        for (const auto& row : fr.samples) ss += (row[h] - mean) * (row[h] - mean);
        const double u = std::sqrt(ss / 499.0);
        if (std::abs(fr.p_hat[h] - mean) > 1e-12 * std::max(1.0, std::abs(mean))) return false;
        if (std::abs(fr.u[h] - u) > 1e-12 * std::max(1.0, u)) return false;
    }

    // a dropout-free network is deterministic: zero spread on every hour
    cfg.dropout_rate = 0.0;
    cfg.epochs = 20;
    const auto det = train_mlp(window, cfg, 31);
    const auto dfr = predict_mc(det, fv, 500, 77);
    for (int h = 0; h < kHoursPerDay; ++h) {
        if (dfr.u[h] != 0.0) return false;
    }
    return true;
}

// ---------------------------------------------------------------- criterion 3

bool gsom_suite() {
    std::mt19937_64 rng(5);
    auto noisy = [&rng](double center, double spread) {
        std::normal_distribution<double> d(center, spread);
        FeatureVector fv;
        for (auto& v : fv.values) v = d(rng);
        return fv;
    };

    // two well-separated clusters get disjoint winner sets
    std::vector<FeatureVector> inputs;
    std::vector<std::vector<double>> prices;
    for (int i = 0; i < 20; ++i) {
        inputs.push_back(noisy(-12.0, 0.3));
        prices.push_back({4.0 + 0.05 * i});
    }
    for (int i = 0; i < 20; ++i) {
        inputs.push_back(noisy(12.0, 0.3));
        prices.push_back({18.0 + 0.05 * i});
    }
    const auto map = train_gsom(inputs, prices, GsomParams{}, 13);
    std::set<std::size_t> a, b;
    for (int i = 0; i < 20; ++i) {
        a.insert(map.winner(inputs[i].values));
        b.insert(map.winner(inputs[20 + i].values));
    }
    for (const auto w : a) {
        if (b.count(w)) return false;
    }

    // the reported spread equals the textbook sample standard deviation
    for (int i = 0; i < 40; i += 7) {
        const auto gu = gsom_uncertainty(map, inputs[i]);
        const auto& attached = map.nodes()[gu.winner].attached_prices;
        if (attached.size() < 2) continue;
        double mean = 0.0;
        for (const double p : attached) mean += p;
        mean /= static_cast<double>(attached.size());
        double ss = 0.0;
        for (const double p : attached) ss += (p - mean) * (p - mean);
        const double u = std::sqrt(ss / static_cast<double>(attached.size() - 1));
        if (std::abs(gu.u - u) > 1e-12 * std::max(1.0, u)) return false;
    }

    // a winner with no attached prices carries no evidence: +inf
    auto j = nlohmann::json::parse(map.to_json());
    j["nodes"][0]["prices"] = nlohmann::json::array();
    // pull the emptied node onto a fresh query point
    for (auto& w : j["nodes"][0]["weight"]) w = 1000.0;
    const auto edited = GsomMap::from_json(j.dump());
    FeatureVector far;
    far.values.fill(1000.0);
    const auto gu = gsom_uncertainty(edited, far);
    return gu.price_count == 0 && std::isinf(gu.u) && std::isinf(gu.nu);
}

// ---------------------------------------------------------------- criterion 4

bool calibration_suite() {
    // hand case: counts 3/1/1/1 give UA = 4/6
    const auto hand = compute_ua(ConfusionCounts{3, 1, 1, 1});
    if (std::abs(hand.ua - 4.0 / 6.0) > 1e-15) return false;
    if (!hand.p_acc_given_cert || std::abs(*hand.p_acc_given_cert - 0.75) > 1e-15) return false;
    if (!hand.p_inacc_given_uncert || std::abs(*hand.p_inacc_given_uncert - 0.5) > 1e-15) {
        return false;
    }

    // 3 markets x 720 hours, searched thresholds vs the full 101^3 enumeration
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> price(0.0, 20.0);
    std::uniform_real_distribution<double> unc(0.0, 1.1);
    std::vector<HourSample> hours;
    for (int i = 0; i < 720; ++i) {
        HourSample s;
        s.pred = {price(rng), price(rng), price(rng)};
        s.actual = {price(rng), price(rng), price(rng)};
        s.nu = {unc(rng), unc(rng), unc(rng)};
        // correlate certainty with accuracy so thresholds have signal
        if (argmax_market(s.pred) == argmax_market(s.actual)) s.nu[argmax_market(s.pred)] *= 0.4;
        hours.push_back(std::move(s));
    }
    const std::vector<std::string> ids{"A", "B", "C"};
    const auto table = search_thresholds(hours, ids);

    // oracle: precompute per-hour argmax / accuracy / gating nu, then walk the
    // full grid in lexicographic order keeping the first (smallest) optimum
    struct H {
        std::size_t m;
        bool acc;
        double nu;
    };
    std::vector<H> pre;
    for (const auto& s : hours) {
        const auto m = argmax_market(s.pred);
        pre.push_back({m, classify_accuracy(s.pred, s.actual), s.nu[m]});
    }
    double best_ua = -1.0;
    std::array<double, 3> best_th{};
    for (int i = 0; i < kGridSteps; ++i) {
        for (int jg = 0; jg < kGridSteps; ++jg) {
            for (int k = 0; k < kGridSteps; ++k) {
                const std::array<double, 3> th{i / 100.0, jg / 100.0, k / 100.0};
                std::size_t good = 0;
                for (const auto& h : pre) {
                    const bool certain = h.nu < th[h.m];
                    if (h.acc == certain) ++good;
                }
                const double ua = static_cast<double>(good) / static_cast<double>(pre.size());
                if (ua > best_ua + 1e-15) {
                    best_ua = ua;
                    best_th = th;
                }
            }
        }
    }
    if (std::abs(table.achieved_ua - best_ua) > 1e-12) return false;
    for (int m = 0; m < 3; ++m) {
        if (std::abs(table.u_th[m] - best_th[m]) > 1e-12) return false;
    }
    return true;
}

// ------------------------------------------------------------- criteria 5-8

const DayTs kStart = parse_day("2018-05-10");

ExperimentConfig base_config(const MarketSet& markets, int n_days) {
    ExperimentConfig cfg;
    cfg.markets = markets;
    cfg.start_day = kStart;
    cfg.n_days = n_days;
    cfg.seed = 2024;
    cfg.strat.mpp = 0.0;
    return cfg;
}

bool perfect_foresight_oracle(const PriceBook& book, const MarketSet& markets) {
    auto cfg = base_config(markets, 30);
    cfg.strategy = 2;
    cfg.perfect_foresight = true;
    const auto r = run_experiment(cfg, book);

    double best = 0.0;
    for (int off = 0; off < cfg.n_days; ++off) {
        for (int h = 0; h < kHoursPerDay; ++h) {
            const HourTs epoch = first_hour(kStart + off) + h;
            double mx = 0.0;
            for (const auto& m : markets.markets) {
                mx = std::max(mx, *book.series(m.id).price_at(epoch));
            }
            best += markets.portfolio_capacity_mw * mx;
        }
    }
    std::printf("  revenue %.6f vs per-epoch max %.6f, selection accuracy %.4f\n",
                r.total_revenue, best, r.selection_accuracy);
    return std::abs(r.total_revenue - best) <= 1e-9 * std::max(1.0, best) &&
           r.selection_accuracy == 1.0;
}

bool scheme4_dominance() {
    std::mt19937_64 rng(31337);
    std::uniform_real_distribution<double> price(0.0, 25.0);
    std::uniform_real_distribution<double> energy(5.0, 170.0);

    for (int inst = 0; inst < 1000; ++inst) {
        std::vector<double> prices(8);
        for (auto& p : prices) p = price(rng);
        RescheduleConstraints c{energy(rng), 22.0, 0, 7, 1};
        const int nmin = n_min(c);

        StrategyInputs in;
        for (int k = 0; k < 8; ++k) in.epochs.push_back(k);
        in.day_ahead = {{"M", prices, std::vector<double>(8, 0.0)}};
        in.thresholds = {{"M", 1.0}};
        StrategyConfig cfg;
        cfg.mpp = 0.0;
        cfg.seed = static_cast<std::uint64_t>(inst);

        PriceBook book;
        std::vector<PriceRecord> recs;
        for (int k = 0; k < 8; ++k) recs.push_back({k, prices[k]});
        book.add(PriceSeries("M", std::move(recs)));

        double rev[5] = {};
        for (int scheme = 1; scheme <= 4; ++scheme) {
            auto plan = strategy3(in, c, scheme, cfg);
            annotate_clearing(plan, book);
            rev[scheme] = plan.total_revenue();
        }
        for (int scheme = 1; scheme <= 3; ++scheme) {
            if (rev[4] + 1e-9 < rev[scheme]) return false;
        }

        // exhaustive check: scheme 4 is optimal among all C(8, nmin) choices
        // of P_max epochs
        std::vector<int> pick(nmin);
        for (int i = 0; i < nmin; ++i) pick[i] = i;
        double best = -1.0;
        while (true) {
            double total = 0.0;
            for (const int e : pick) total += 22.0 * prices[static_cast<std::size_t>(e)];
            best = std::max(best, total);
            int i = nmin - 1;
            while (i >= 0 && pick[i] == 8 - nmin + i) --i;
            if (i < 0) break;
            ++pick[i];
            for (int j2 = i + 1; j2 < nmin; ++j2) pick[j2] = pick[j2 - 1] + 1;
        }
        if (std::abs(rev[4] - best) > 1e-9) return false;
    }
    return true;
}

bool determinism_and_no_lookahead(const PriceBook& book, const MarketSet& markets) {
    // byte-identical reports from the same seed, training included
    auto cfg = base_config(markets, 2);
    cfg.strategy = 2;
    cfg.train.epochs = 30;
    cfg.mc_samples = 30;
    const auto a = run_experiment(cfg, book);
    const auto b = run_experiment(cfg, book);
    if (a.to_json() != b.to_json()) {
        std::printf("  repeated runs differ\n");
        return false;
    }

    // mutating prices at/after a deadline leaves that deadline's bids alone
    ThresholdTable fixed;
    fixed.market_ids = {"FCR-N", "FCR-D", "mFRR"};
    fixed.u_th = {0.5, 0.5, 0.5};
    std::mt19937_64 rng(606);
    std::uniform_int_distribution<int> offset(0, 40);
    for (int trial = 0; trial < 20; ++trial) {
        auto day_cfg = cfg;
        day_cfg.start_day = kStart + offset(rng);
        day_cfg.n_days = 1;
        day_cfg.fixed_thresholds = fixed;

        const auto before = run_strategy(day_cfg, book, produce_forecasts(day_cfg, book), fixed);

        PriceBook mutated;
        for (const auto& id : book.market_ids()) {
            std::vector<PriceRecord> recs;
            for (const auto& r : book.series(id).records()) {
                const bool future = r.hour >= first_hour(day_cfg.start_day);
                recs.push_back({r.hour, future ? r.price + 100.0 + trial : r.price});
            }
            mutated.add(PriceSeries(id, std::move(recs)));
        }
        const auto after =
            run_strategy(day_cfg, mutated, produce_forecasts(day_cfg, mutated), fixed);

        // the bids decided at this deadline (the day-ahead round) must be
        // identical; the epoch-ahead fallback has a later deadline and may
        // legitimately react to the day-ahead auction outcome
        auto placed = [](const BacktestReport& r) {
            std::vector<std::tuple<HourTs, std::string, double, double>> out;
            for (const auto& e : r.bid_log) {
                if (e.phase != BidPhase::DayAheadRound) continue;
                out.emplace_back(e.epoch, e.market_id, e.capacity, e.requested_fee);
            }
            return out;
        };
        if (placed(before) != placed(after)) {
            std::printf("  deadline %s: bids changed under a future-price mutation\n",
                        format_day(day_cfg.start_day).c_str());
            return false;
        }
    }
    return true;
}

bool directional_reproduction(const PriceBook& book, const MarketSet& markets) {
    auto cfg = base_config(markets, 30);
    cfg.strategy = 1;

    // one walk-forward forecasting pass feeds every variant below
    const auto forecasts = produce_forecasts(cfg, book);
    const auto samples = calibration_samples(cfg, book, forecasts);
    const auto thresholds = search_thresholds(samples, forecasts.market_ids);
    const double ua = thresholds.achieved_ua;

    auto cfg1 = cfg;
    const auto r1 = run_strategy(cfg1, book, forecasts, thresholds);

    // the uncertainty-blind variant: nu erased, nothing gated
    auto blind = forecasts;
    for (auto& [id, days] : blind.by_market) {
        for (auto& d : days) d.nu.fill(0.0);
    }
    ThresholdTable open;
    open.market_ids = thresholds.market_ids;
    open.u_th.assign(open.market_ids.size(), 1.0);
    auto cfg1b = cfg;
    cfg1b.no_uncertainty = true;
    const auto r1_blind = run_strategy(cfg1b, book, blind, open);

    auto cfg2 = cfg;
    cfg2.strategy = 2;
    const auto r2 = run_strategy(cfg2, book, forecasts, thresholds);

    double scheme_rev[5] = {};
    for (int scheme = 1; scheme <= 4; ++scheme) {
        auto cfg3 = cfg;
        cfg3.strategy = 3;
        cfg3.scheme = scheme;
        cfg3.resched = RescheduleConstraints{44.0, 22.0, 0, 23, 1};
        scheme_rev[scheme] = run_strategy(cfg3, book, forecasts, thresholds).total_revenue;
    }

    std::printf("  (a) accuracy: strategy2 %.4f vs strategy1 %.4f\n", r2.selection_accuracy,
                r1.selection_accuracy);
    std::printf("  (b) strategy1 revenue: with uncertainty %.2f vs without %.2f\n",
                r1.total_revenue, r1_blind.total_revenue);
    std::printf("  (c) scheme revenue: 1=%.2f 2=%.2f 3=%.2f 4=%.2f\n", scheme_rev[1],
                scheme_rev[2], scheme_rev[3], scheme_rev[4]);
    std::printf("  (d) calibrated UA %.4f (thresholds", ua);
    for (std::size_t m = 0; m < thresholds.u_th.size(); ++m) {
        std::printf(" %s=%.2f", thresholds.market_ids[m].c_str(), thresholds.u_th[m]);
    }
    std::printf(")\n");

    bool ok = true;
    ok &= r2.selection_accuracy > r1.selection_accuracy;
    ok &= r1.total_revenue > r1_blind.total_revenue;
    ok &= scheme_rev[4] > scheme_rev[1] && scheme_rev[4] > scheme_rev[2] &&
          scheme_rev[4] > scheme_rev[3];
    ok &= ua >= 0.70 && ua <= 0.85;
    return ok;
}

}  // namespace

int main() {
    report(1, minimum_epochs(), "minimum epoch count matches the ceiling-arithmetic oracle");
    report(2, mc_dropout_consistency(),
           "MC-dropout summary equals the dumped sample matrix; dropout 0 means zero spread");
    report(3, gsom_suite(),
           "map separates clusters, reports textbook spread, +inf on empty winners");
    report(4, calibration_suite(),
           "threshold search equals the exhaustive grid enumeration; UA hand cases exact");

    const auto markets = synthetic_market_set(10.0);
    SyntheticParams gen;
    const auto book =
        generate_synthetic(kStart - kWindowDays - kFeatureLagDays - 2, kStart + 80, gen);

    report(5, perfect_foresight_oracle(book, markets),
           "perfect-foresight strategy 2 attains the per-epoch maximum");
    report(6, scheme4_dominance(),
           "scheme 4 dominates schemes 1-3 and matches the exhaustive subset optimum");
    report(7, determinism_and_no_lookahead(book, markets),
           "same-seed runs are byte-identical; future-price mutations leave bids unchanged");
    report(8, directional_reproduction(book, markets),
           "synthetic 30-day orderings: accuracy, uncertainty gain, scheme 4, UA band");

    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures ? 1 : 0;
}
