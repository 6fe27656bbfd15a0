#include <doctest.h>

#include <random>

#include "frm/market.hpp"

using namespace frm;

namespace {

PriceSeries make_series(const std::string& id, HourTs start, std::vector<double> prices) {
    std::vector<PriceRecord> recs;
    for (std::size_t i = 0; i < prices.size(); ++i) {
        recs.push_back({start + static_cast<HourTs>(i), prices[i]});
    }
    return PriceSeries(id, std::move(recs));
}

}  // namespace

TEST_CASE("price series invariants") {
    CHECK_THROWS_AS(PriceSeries("m", {{0, 1.0}, {0, 2.0}}), InvariantError);  // duplicate
    CHECK_THROWS_AS(PriceSeries("m", {{5, 1.0}, {3, 2.0}}), InvariantError);  // unsorted
    CHECK_THROWS_AS(PriceSeries("m", {{0, -1.0}}), InvariantError);           // negative
    CHECK_NOTHROW(PriceSeries("m", {{0, 0.0}, {1, 2.5}}));                    // zero is legal
}

TEST_CASE("market spec invariants") {
    MarketSpec ea{"mFRR", MarketKind::EpochAhead, 1.0, 1, 0.0, false, false};
    CHECK_NOTHROW(ea.validate());
    ea.epochs_per_interval = 24;
    CHECK_THROWS_AS(ea.validate(), InvariantError);

    MarketSet set;
    set.markets = {MarketSpec{"FCR-N", MarketKind::DayAhead, 1.0, 24, 0.0, true, false}};
    CHECK_THROWS_AS(set.validate(), InvariantError);  // no epoch-ahead market
    set.markets.push_back(MarketSpec{"mFRR", MarketKind::EpochAhead, 1.0, 1, 0.0, false, false});
    CHECK_NOTHROW(set.validate());
    CHECK(set.epoch_ahead().id == "mFRR");
    CHECK(set.day_ahead().size() == 1);
}

TEST_CASE("clearing rules") {
    const auto history = make_series("FCR-N", 100, {15.0, 0.0});

    SUBCASE("zero fee is accepted at any positive price") {
        std::vector<Bid> bids{{"FCR-N", 100, 10.0, 0.0}};
        const auto res = clear_auction(bids, history);
        REQUIRE(res.size() == 1);
        CHECK(res[0].accepted);
        CHECK(res[0].clearing_price == 15.0);
    }
    SUBCASE("zero-price epoch rejects everything") {
        std::vector<Bid> bids{{"FCR-N", 101, 10.0, 5.0}};
        const auto res = clear_auction(bids, history);
        CHECK_FALSE(res[0].accepted);
    }
    SUBCASE("fee above clearing price is rejected") {
        std::vector<Bid> bids{{"FCR-N", 100, 10.0, 20.0}};
        const auto res = clear_auction(bids, history);
        CHECK_FALSE(res[0].accepted);
    }
    SUBCASE("fee equal to clearing price is accepted") {
        std::vector<Bid> bids{{"FCR-N", 100, 10.0, 15.0}};
        CHECK(clear_auction(bids, history)[0].accepted);
    }
    SUBCASE("missing epoch names market and epoch") {
        std::vector<Bid> bids{{"FCR-N", 999, 10.0, 0.0}};
        CHECK_THROWS_AS(clear_auction(bids, history), DataGapError);
    }
}

TEST_CASE("revenue accounting") {
    const auto history = make_series("FCR-N", 0, {12.3, 8.0});

    SUBCASE("accepted bid pays capacity x price x duration") {
        std::vector<Bid> bids{{"FCR-N", 0, 10.0, 0.0}};
        const auto res = clear_auction(bids, history);
        const auto rev = revenue(res, bids);
        CHECK(rev.total == doctest::Approx(123.0));
    }
    SUBCASE("all rejected gives zero") {
        std::vector<Bid> bids{{"FCR-N", 0, 10.0, 100.0}, {"FCR-N", 1, 5.0, 100.0}};
        const auto res = clear_auction(bids, history);
        CHECK(revenue(res, bids).total == 0.0);
    }
    SUBCASE("correspondence mismatch is an invariant violation") {
        std::vector<Bid> bids{{"FCR-N", 0, 10.0, 0.0}};
        std::vector<AuctionResult> wrong{{"FCR-N", 1, 8.0, true, 10.0}};
        CHECK_THROWS_AS(revenue(wrong, bids), InvariantError);
    }
}

TEST_CASE("clearing properties") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> price(0.0, 30.0);
    std::uniform_real_distribution<double> fee(0.0, 30.0);

    std::vector<double> prices;
    for (int i = 0; i < 200; ++i) prices.push_back(price(rng));
    const auto history = make_series("m", 0, prices);

    std::vector<Bid> bids;
    for (int i = 0; i < 200; ++i) bids.push_back({"m", i, 10.0, fee(rng)});

    SUBCASE("deterministic replay") {
        const auto a = clear_auction(bids, history);
        const auto b = clear_auction(bids, history);
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].accepted == b[i].accepted);
            CHECK(a[i].clearing_price == b[i].clearing_price);
        }
    }
    SUBCASE("lowering a fee never loses revenue") {
        const auto base = revenue(clear_auction(bids, history), bids).total;
        auto lowered = bids;
        for (auto& b : lowered) b.requested_fee *= 0.5;
        const auto less = revenue(clear_auction(lowered, history), lowered).total;
        CHECK(less >= base);
    }
    SUBCASE("uniform pricing per epoch") {
        std::vector<Bid> pair{{"m", 42, 3.0, 1.0}, {"m", 42, 7.0, 4.0}};
        const auto res = clear_auction(pair, history);
        if (res[0].accepted && res[1].accepted) {
            CHECK(res[0].clearing_price == res[1].clearing_price);
        }
    }
}
