#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "frm/backtest.hpp"
#include "frm/synthetic.hpp"

using namespace frm;

namespace {

const DayTs kStart = parse_day("2018-05-10");

PriceBook small_book(DayTs start, int n_days, std::uint64_t seed = 42) {
    SyntheticParams p;
    p.seed = seed;
    return generate_synthetic(start - kWindowDays - kFeatureLagDays - 2, start + n_days + 1, p);
}

ExperimentConfig fast_config(int n_days) {
    ExperimentConfig cfg;
    cfg.markets = synthetic_market_set(10.0);
    cfg.start_day = kStart;
    cfg.n_days = n_days;
    cfg.strategy = 2;
    cfg.mc_samples = 20;
    cfg.seed = 7;
    cfg.train.epochs = 25;
    cfg.strat.mpp = 0.0;
    return cfg;
}

}  // namespace

TEST_CASE("perfect foresight attains the per-epoch maximum") {
    const int n_days = 4;
    const auto book = small_book(kStart, n_days);
    auto cfg = fast_config(n_days);
    cfg.perfect_foresight = true;

    const auto report = run_experiment(cfg, book);

    // oracle: every epoch pays capacity x the highest market price
    double best_possible = 0.0;
    for (int off = 0; off < n_days; ++off) {
        for (int h = 0; h < kHoursPerDay; ++h) {
            const HourTs epoch = first_hour(kStart + off) + h;
            double mx = 0.0;
            for (const auto& m : cfg.markets.markets) {
                mx = std::max(mx, *book.series(m.id).price_at(epoch));
            }
            best_possible += 10.0 * mx;
        }
    }
    CHECK(report.total_revenue == doctest::Approx(best_possible).epsilon(1e-9));
    CHECK(report.selection_accuracy == doctest::Approx(1.0));
}

TEST_CASE("zero capacity yields an empty log and zero revenue") {
    const int n_days = 2;
    const auto book = small_book(kStart, n_days);
    auto cfg = fast_config(n_days);
    cfg.perfect_foresight = true;
    cfg.markets.portfolio_capacity_mw = 0.0;

    const auto report = run_experiment(cfg, book);
    CHECK(report.bid_log.empty());
    CHECK(report.total_revenue == 0.0);
    for (const auto& d : report.revenue_by_day) CHECK(d.revenue == 0.0);
}

TEST_CASE("repeated runs are byte-identical") {
    const int n_days = 2;
    const auto book = small_book(kStart, n_days);
    auto cfg = fast_config(n_days);

    const auto a = run_experiment(cfg, book);
    const auto b = run_experiment(cfg, book);
    CHECK(a.to_json() == b.to_json());

    auto other = cfg;
    other.seed = 8;
    const auto c = run_experiment(other, book);
    // a different seed changes the forecasts and with them the report
    CHECK(a.to_json() != c.to_json());
}

TEST_CASE("forecasts never see prices at or after the target day") {
    const int n_days = 1;
    const auto book = small_book(kStart, n_days);
    auto cfg = fast_config(n_days);

    const auto before = produce_forecasts(cfg, book);

    // perturb everything from the forecast day onward
    PriceBook mutated;
    for (const auto& id : book.market_ids()) {
        std::vector<PriceRecord> recs;
        for (const auto& r : book.series(id).records()) {
            recs.push_back({r.hour, r.hour >= first_hour(kStart) ? r.price + 500.0 : r.price});
        }
        mutated.add(PriceSeries(id, std::move(recs)));
    }
    const auto after = produce_forecasts(cfg, mutated);
    CHECK(forecast_set_to_json(before) == forecast_set_to_json(after));
}

TEST_CASE("bid log reconciles with the reported revenue") {
    const int n_days = 2;
    const auto book = small_book(kStart, n_days);
    auto cfg = fast_config(n_days);
    const auto report = run_experiment(cfg, book);

    const double duration = cfg.markets.epoch_ahead().epoch_duration_h;
    double from_log = 0.0;
    for (const auto& e : report.bid_log) {
        if (e.accepted) {
            const auto price = book.series(e.market_id).price_at(e.epoch);
            REQUIRE(price.has_value());
            CHECK(e.paid_price == *price);
            CHECK(e.revenue == doctest::Approx(e.capacity * *price * duration).epsilon(1e-12));
        } else {
            CHECK(e.revenue == 0.0);
        }
        from_log += e.revenue;
    }
    CHECK(report.total_revenue == doctest::Approx(from_log).epsilon(1e-12));

    // the daily cumulative sequence is consistent and ends at the total
    double running = 0.0;
    for (const auto& d : report.revenue_by_day) {
        running += d.revenue;
        CHECK(d.cumulative == doctest::Approx(running).epsilon(1e-12));
    }
    REQUIRE(!report.revenue_by_day.empty());
    CHECK(report.revenue_by_day.back().cumulative ==
          doctest::Approx(report.total_revenue).epsilon(1e-12));
}

TEST_CASE("insufficient coverage fails before any computation") {
    auto cfg = fast_config(2);
    SyntheticParams p;
    // history starts too late: the training window cannot be filled
    const auto book = generate_synthetic(kStart - 50, kStart + 3, p);
    CHECK_THROWS_AS(preflight_coverage(cfg, book), DataGapError);
    CHECK_THROWS_AS(run_experiment(cfg, book), DataGapError);
}

TEST_CASE("strategy 3 backtests settle every rejected bid on the fallback market") {
    const int n_days = 2;
    const auto book = small_book(kStart, n_days);
    auto cfg = fast_config(n_days);
    cfg.perfect_foresight = true;
    cfg.strategy = 3;
    cfg.scheme = 4;
    cfg.resched = RescheduleConstraints{44.0, 22.0, 0, 7, 1};

    const auto report = run_experiment(cfg, book);
    // two 22 kW bids per day, plus one fallback per rejected day-ahead bid
    std::size_t day_ahead_bids = 0;
    for (const auto& e : report.bid_log) {
        CHECK(e.capacity == 22.0);
        if (e.phase == BidPhase::DayAheadRound) ++day_ahead_bids;
    }
    CHECK(day_ahead_bids == static_cast<std::size_t>(2 * n_days));
}

TEST_CASE("forecast artifact round trip keeps infinite uncertainty") {
    ForecastSet f;
    f.start_day = kStart;
    f.n_days = 1;
    f.market_ids = {"A"};
    DayForecast df;
    df.day = kStart;
    for (int h = 0; h < kHoursPerDay; ++h) {
        df.p_hat[h] = h * 1.5;
        df.nu[h] = h == 3 ? std::numeric_limits<double>::infinity() : 0.1 * h;
    }
    f.by_market["A"].push_back(df);

    const auto back = forecast_set_from_json(forecast_set_to_json(f));
    const auto& bdf = back.by_market.at("A")[0];
    CHECK(std::isinf(bdf.nu[3]));
    for (int h = 0; h < kHoursPerDay; ++h) {
        CHECK(bdf.p_hat[h] == df.p_hat[h]);
        if (h != 3) CHECK(bdf.nu[h] == df.nu[h]);
    }
    CHECK_THROWS_AS(forecast_set_from_json("{\"format\":\"other\"}"), ParseError);
}

TEST_CASE("comparison table aligns cumulative revenue by day") {
    const int n_days = 3;
    const auto book = small_book(kStart, n_days);
    auto cfg = fast_config(n_days);
    cfg.perfect_foresight = true;

    auto cfg1 = cfg;
    cfg1.strategy = 1;
    const auto r1 = run_experiment(cfg1, book);
    const auto r2 = run_experiment(cfg, book);

    const auto cmp = compare_strategies({r1, r2}, {"s1", "s2"});
    REQUIRE(cmp.days.size() == 3);
    REQUIRE(cmp.cumulative.size() == 2);
    CHECK(cmp.cumulative[0].back() == doctest::Approx(r1.total_revenue));
    CHECK(cmp.cumulative[1].back() == doctest::Approx(r2.total_revenue));

    const auto csv = cmp.to_csv();
    CHECK(csv.rfind("date,s1,s2\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + 3 days

    CHECK_THROWS(compare_strategies({r1, r2}, {"only-one"}));
}
