#include "frm/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace frm {

namespace {

std::uint64_t stage_seed(const ExperimentConfig& cfg, std::size_t market_idx, int day_offset,
                         std::uint64_t stage) {
    return subseed(subseed(cfg.seed, (market_idx << 32) ^ static_cast<std::uint64_t>(day_offset)),
                   stage);
}

}  // namespace

void preflight_coverage(const ExperimentConfig& cfg, const PriceBook& book) {
    cfg.markets.validate();
    if (cfg.n_days < 1) throw InvariantError("experiment needs at least one day");
    for (const auto& m : cfg.markets.markets) {
        if (!book.has(m.id)) throw DataGapError("no price data for market " + m.id);
        const auto& s = book.series(m.id);
        for (DayTs d = cfg.earliest_required_day(); d <= cfg.end_day(); ++d) {
            if (!s.has_full_day(d)) {
                throw DataGapError(m.id + ": coverage gap on " + format_day(d) +
                                   " (range requires " + format_day(cfg.earliest_required_day()) +
                                   " through " + format_day(cfg.end_day()) + ")");
            }
        }
    }
}

ForecastSet produce_forecasts(const ExperimentConfig& cfg, const PriceBook& book) {
    ForecastSet out;
    out.start_day = cfg.start_day;
    out.n_days = cfg.n_days;

    for (std::size_t mi = 0; mi < cfg.markets.markets.size(); ++mi) {
        const auto& spec = cfg.markets.markets[mi];
        const auto& series = book.series(spec.id);
        out.market_ids.push_back(spec.id);
        auto& days = out.by_market[spec.id];
        days.reserve(static_cast<std::size_t>(cfg.n_days));

        for (int off = 0; off < cfg.n_days; ++off) {
            const DayTs day = cfg.start_day + off;
            DayForecast df;
            df.day = day;

            if (cfg.perfect_foresight) {
                const auto actual = series.day_prices(day);
                std::copy(actual.begin(), actual.end(), df.p_hat.begin());
                df.nu.fill(0.0);
            } else {
                const auto window = build_training_window(series, day);
                const auto model = train_mlp(window, cfg.train, stage_seed(cfg, mi, off, 1));
                const auto fv = build_features(series, day, window.stats);
                const auto fr =
                    predict_mc(model, fv, cfg.mc_samples, stage_seed(cfg, mi, off, 2));
                df.p_hat = fr.p_hat;
                df.nu = fr.nu;

                if (cfg.use_gsom) {
                    std::vector<FeatureVector> vectors;
                    std::vector<std::vector<double>> prices;
                    vectors.reserve(window.samples.size());
                    for (const auto& s : window.samples) {
                        vectors.push_back(s.features);
                        std::vector<double> p(kHoursPerDay);
                        for (int h = 0; h < kHoursPerDay; ++h) {
                            p[h] = window.stats.invert(s.target[h]);
                        }
                        prices.push_back(std::move(p));
                    }
                    const auto map =
                        train_gsom(vectors, prices, cfg.gsom, stage_seed(cfg, mi, off, 3));
                    const auto gu = gsom_uncertainty(map, fv);
                    // both opinions must clear the threshold, so the worse
                    // one is the effective uncertainty
                    for (int h = 0; h < kHoursPerDay; ++h) df.nu[h] = std::max(df.nu[h], gu.nu);
                }
            }
            if (cfg.no_uncertainty) df.nu.fill(0.0);
            days.push_back(df);
        }
    }
    return out;
}

std::vector<HourSample> calibration_samples(const ExperimentConfig&, const PriceBook& book,
                                            const ForecastSet& forecasts) {
    std::vector<HourSample> out;
    const std::size_t n_markets = forecasts.market_ids.size();
    for (int off = 0; off < forecasts.n_days; ++off) {
        const DayTs day = forecasts.start_day + off;
        for (int h = 0; h < kHoursPerDay; ++h) {
            HourSample s;
            s.pred.resize(n_markets);
            s.actual.resize(n_markets);
            s.nu.resize(n_markets);
            for (std::size_t mi = 0; mi < n_markets; ++mi) {
                const auto& id = forecasts.market_ids[mi];
                const auto& df = forecasts.by_market.at(id)[static_cast<std::size_t>(off)];
                s.pred[mi] = df.p_hat[h];
                s.nu[mi] = df.nu[h];
                const auto price = book.series(id).price_at(first_hour(day) + h);
                if (!price) throw DataGapError(id + ": missing actual price on " + format_day(day));
                s.actual[mi] = *price;
            }
            out.push_back(std::move(s));
        }
    }
    return out;
}

BacktestReport run_strategy(const ExperimentConfig& cfg, const PriceBook& book,
                            const ForecastSet& forecasts, const ThresholdTable& thresholds) {
    const auto& ea_spec = cfg.markets.epoch_ahead();
    const auto day_ahead_specs = cfg.markets.day_ahead();
    const double duration = ea_spec.epoch_duration_h;

    BacktestReport report;
    report.strategy = cfg.strategy;
    report.scheme = cfg.scheme;
    report.start_day = cfg.start_day;
    report.n_days = cfg.n_days;
    report.thresholds = thresholds;
    for (const auto& m : cfg.markets.markets) report.market_ids.push_back(m.id);
    const std::size_t n_markets = report.market_ids.size();
    report.selection_confusion.assign(n_markets, std::vector<std::size_t>(n_markets, 0));

    std::map<std::string, double> th;
    for (const auto& m : cfg.markets.markets) th[m.id] = thresholds.threshold_for(m.id);

    std::size_t accurate = 0, evaluated = 0;
    std::size_t baseline_hits = 0, baseline_total = 0;

    auto market_index = [&](const std::string& id) {
        return static_cast<std::size_t>(
            std::find(report.market_ids.begin(), report.market_ids.end(), id) -
            report.market_ids.begin());
    };

    for (int off = 0; off < cfg.n_days; ++off) {
        const DayTs day = cfg.start_day + off;

        StrategyInputs in;
        for (int h = 0; h < kHoursPerDay; ++h) in.epochs.push_back(first_hour(day) + h);
        in.thresholds = th;
        for (const auto* spec : day_ahead_specs) {
            const auto& df = forecasts.by_market.at(spec->id)[static_cast<std::size_t>(off)];
            MarketEpochForecast mf;
            mf.market_id = spec->id;
            mf.f_fee.assign(df.p_hat.begin(), df.p_hat.end());
            mf.nu.assign(df.nu.begin(), df.nu.end());
            in.day_ahead.push_back(std::move(mf));
        }
        {
            const auto& df = forecasts.by_market.at(ea_spec.id)[static_cast<std::size_t>(off)];
            MarketEpochForecast mf;
            mf.market_id = ea_spec.id;
            mf.f_fee.assign(df.p_hat.begin(), df.p_hat.end());
            mf.nu.assign(df.nu.begin(), df.nu.end());
            in.epoch_ahead = std::move(mf);
        }

        BiddingPlan plan;
        const std::vector<double> capacity(kHoursPerDay, cfg.markets.portfolio_capacity_mw);
        if (cfg.strategy == 1 || cfg.strategy == 2) {
            plan = cfg.strategy == 1 ? strategy1(in, capacity, cfg.strat)
                                     : strategy2(in, capacity, cfg.strat);
            annotate_clearing(plan, book, duration);
            auto fb = fallback_unplaced_or_rejected(plan, in, capacity, ea_spec.id, cfg.strat);
            plan.entries.insert(plan.entries.end(), fb.begin(), fb.end());
            annotate_clearing(plan, book, duration);
        } else if (cfg.strategy == 3) {
            StrategyConfig day_cfg = cfg.strat;
            day_cfg.seed = subseed(cfg.strat.seed, static_cast<std::uint64_t>(off));
            plan = strategy3(in, cfg.resched, cfg.scheme, day_cfg);
            annotate_clearing(plan, book, duration);
            auto fb = fallback_rejected(plan, ea_spec.id);
            plan.entries.insert(plan.entries.end(), fb.begin(), fb.end());
            annotate_clearing(plan, book, duration);
        } else {
            throw std::invalid_argument("unknown strategy " + std::to_string(cfg.strategy));
        }

        double day_revenue = 0.0;
        for (const auto& e : plan.entries) day_revenue += e.revenue;
        report.total_revenue += day_revenue;
        report.revenue_by_day.push_back({day, day_revenue, report.total_revenue});
        report.bid_log.insert(report.bid_log.end(), plan.entries.begin(), plan.entries.end());

        // selection accuracy vs the actual max-priced market
        std::map<HourTs, std::string> chosen;
        for (const auto& e : plan.entries) {
            if (e.phase == BidPhase::DayAheadRound && !chosen.count(e.epoch)) {
                chosen[e.epoch] = e.market_id;
            }
        }
        for (int h = 0; h < kHoursPerDay; ++h) {
            const HourTs epoch = first_hour(day) + h;
            std::vector<double> actual(n_markets);
            for (std::size_t mi = 0; mi < n_markets; ++mi) {
                actual[mi] = *book.series(report.market_ids[mi]).price_at(epoch);
            }
            const std::size_t actual_max = argmax_market(actual);

            std::string chosen_id;
            if (auto it = chosen.find(epoch); it != chosen.end()) {
                chosen_id = it->second;
            } else if (cfg.strategy != 3) {
                chosen_id = ea_spec.id;  // all capacity went to the fallback round
            }
            if (!chosen_id.empty()) {
                const std::size_t ci = market_index(chosen_id);
                ++report.selection_confusion[ci][actual_max];
                ++evaluated;
                if (ci == actual_max) ++accurate;
            }

            // baseline: raw day-ahead forecast argmax, no gate, no
            // epoch-ahead comparison
            if (!in.day_ahead.empty()) {
                std::vector<double> raw;
                for (const auto& mf : in.day_ahead) raw.push_back(mf.f_fee[h]);
                const auto& base_id = in.day_ahead[argmax_market(raw)].market_id;
                ++baseline_total;
                if (market_index(base_id) == actual_max) ++baseline_hits;
            }
        }
    }

    report.selection_accuracy =
        evaluated ? static_cast<double>(accurate) / static_cast<double>(evaluated) : 0.0;
    report.baseline_accuracy =
        baseline_total ? static_cast<double>(baseline_hits) / static_cast<double>(baseline_total)
                       : 0.0;

    const auto samples = calibration_samples(cfg, book, forecasts);
    report.ua = compute_ua(count_confusion(samples, thresholds.u_th));
    return report;
}

BacktestReport run_experiment(const ExperimentConfig& cfg, const PriceBook& book) {
    preflight_coverage(cfg, book);
    const auto forecasts = produce_forecasts(cfg, book);

    ThresholdTable thresholds;
    if (cfg.fixed_thresholds) {
        thresholds = *cfg.fixed_thresholds;
    } else if (cfg.no_uncertainty || cfg.perfect_foresight) {
        // nothing is gated: every hour is certain under nu = 0 and UT = 1
        thresholds.market_ids = forecasts.market_ids;
        thresholds.u_th.assign(forecasts.market_ids.size(), 1.0);
        const auto samples = calibration_samples(cfg, book, forecasts);
        thresholds.counts = count_confusion(samples, thresholds.u_th);
        thresholds.achieved_ua = compute_ua(thresholds.counts).ua;
    } else {
        const auto samples = calibration_samples(cfg, book, forecasts);
        thresholds = search_thresholds(samples, forecasts.market_ids);
    }
    return run_strategy(cfg, book, forecasts, thresholds);
}

Comparison compare_strategies(const std::vector<BacktestReport>& reports,
                              const std::vector<std::string>& labels) {
    if (reports.empty() || reports.size() != labels.size()) {
        throw std::invalid_argument("compare_strategies: one label per report required");
    }
    for (const auto& r : reports) {
        if (r.start_day != reports[0].start_day || r.n_days != reports[0].n_days) {
            throw std::invalid_argument("compare_strategies: reports cover different ranges");
        }
    }
    Comparison cmp;
    for (int off = 0; off < reports[0].n_days; ++off) {
        cmp.days.push_back(reports[0].start_day + off);
    }
    for (std::size_t i = 0; i < reports.size(); ++i) {
        cmp.rows.push_back(
            {labels[i], reports[i].selection_accuracy, reports[i].total_revenue});
        std::vector<double> cum;
        for (const auto& d : reports[i].revenue_by_day) cum.push_back(d.cumulative);
        cmp.cumulative.push_back(std::move(cum));
    }
    return cmp;
}

std::string Comparison::to_csv() const {
    std::string out = "date";
    for (const auto& r : rows) out += "," + r.label;
    out += "\n";
    char buf[32];
    for (std::size_t d = 0; d < days.size(); ++d) {
        out += format_day(days[d]);
        for (const auto& series : cumulative) {
            std::snprintf(buf, sizeof(buf), ",%.6f", series[d]);
            out += buf;
        }
        out += "\n";
    }
    return out;
}

namespace {

nlohmann::json entry_json(const PlanEntry& e) {
    return {{"epoch", format_hour_utc(e.epoch)},
            {"market", e.market_id},
            {"capacity", e.capacity},
            {"requested_fee", e.requested_fee},
            {"phase", e.phase == BidPhase::DayAheadRound ? "day_ahead" : "epoch_ahead_fallback"},
            {"accepted", e.accepted},
            {"paid_price", e.paid_price},
            {"revenue", e.revenue}};
}

}  // namespace

std::string BacktestReport::to_json() const {
    nlohmann::json j;
    j["strategy"] = strategy;
    if (strategy == 3) j["scheme"] = scheme;
    j["start_day"] = format_day(start_day);
    j["n_days"] = n_days;
    j["total_revenue"] = total_revenue;
    j["selection_accuracy"] = selection_accuracy;
    j["baseline_accuracy"] = baseline_accuracy;
    j["markets"] = market_ids;
    j["selection_confusion"] = selection_confusion;
    j["thresholds"] = {{"markets", thresholds.market_ids},
                       {"u_th", thresholds.u_th},
                       {"ua", thresholds.achieved_ua}};
    if (ua) {
        j["ua"] = {{"ua", ua->ua},
                   {"p_acc_given_cert",
                    ua->p_acc_given_cert ? nlohmann::json(*ua->p_acc_given_cert) : nullptr},
                   {"p_inacc_given_uncert", ua->p_inacc_given_uncert
                                                ? nlohmann::json(*ua->p_inacc_given_uncert)
                                                : nullptr}};
    }
    auto& days = j["revenue_by_day"] = nlohmann::json::array();
    for (const auto& d : revenue_by_day) {
        days.push_back({{"day", format_day(d.day)},
                        {"revenue", d.revenue},
                        {"cumulative", d.cumulative}});
    }
    auto& log = j["bid_log"] = nlohmann::json::array();
    for (const auto& e : bid_log) log.push_back(entry_json(e));
    return j.dump(2);
}

std::string forecast_set_to_json(const ForecastSet& forecasts) {
    nlohmann::json j;
    j["format"] = "frm-forecasts";
    j["version"] = 1;
    j["start_day"] = format_day(forecasts.start_day);
    j["n_days"] = forecasts.n_days;
    j["markets"] = forecasts.market_ids;
    auto& by_market = j["by_market"] = nlohmann::json::object();
    for (const auto& [id, days] : forecasts.by_market) {
        auto& arr = by_market[id] = nlohmann::json::array();
        for (const auto& df : days) {
            std::vector<double> p(df.p_hat.begin(), df.p_hat.end());
            // +inf is not representable in JSON; encode as null
            nlohmann::json nu = nlohmann::json::array();
            for (double v : df.nu) {
                if (std::isinf(v)) {
                    nu.push_back(nullptr);
                } else {
                    nu.push_back(v);
                }
            }
            arr.push_back({{"day", format_day(df.day)}, {"p_hat", p}, {"nu", nu}});
        }
    }
    return j.dump();
}

ForecastSet forecast_set_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != "frm-forecasts" || j.value("version", 0) != 1) {
        throw ParseError("unrecognized forecast artifact");
    }
    ForecastSet f;
    f.start_day = parse_day(j.at("start_day").get<std::string>());
    f.n_days = j.at("n_days").get<int>();
    f.market_ids = j.at("markets").get<std::vector<std::string>>();
    for (const auto& id : f.market_ids) {
        auto& days = f.by_market[id];
        for (const auto& dj : j.at("by_market").at(id)) {
            DayForecast df;
            df.day = parse_day(dj.at("day").get<std::string>());
            const auto p = dj.at("p_hat").get<std::vector<double>>();
            if (p.size() != kHoursPerDay) throw ParseError("forecast artifact: bad day length");
            std::copy(p.begin(), p.end(), df.p_hat.begin());
            const auto& nu = dj.at("nu");
            for (int h = 0; h < kHoursPerDay; ++h) {
                df.nu[h] = nu[h].is_null() ? std::numeric_limits<double>::infinity()
                                           : nu[h].get<double>();
            }
            days.push_back(df);
        }
    }
    return f;
}

void write_report(const BacktestReport& report, const std::string& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir + "/report.json");
        out << report.to_json() << '\n';
    }
    {
        std::ofstream out(dir + "/bids.csv");
        out << "strategy,scheme,epoch,market,capacity,requested_fee,phase,accepted,paid_price,"
               "revenue\n";
        for (const auto& e : report.bid_log) {
            out << report.strategy << ',' << report.scheme << ',' << format_hour_utc(e.epoch)
                << ',' << e.market_id << ',' << e.capacity << ',' << e.requested_fee << ','
                << (e.phase == BidPhase::DayAheadRound ? "day_ahead" : "epoch_ahead_fallback")
                << ',' << (e.accepted ? 1 : 0) << ',' << e.paid_price << ',' << e.revenue
                << '\n';
        }
    }
    {
        std::ofstream out(dir + "/revenue.csv");
        out << "date,revenue,cumulative\n";
        for (const auto& d : report.revenue_by_day) {
            out << format_day(d.day) << ',' << d.revenue << ',' << d.cumulative << '\n';
        }
    }
}

void write_forecast_csv(const ForecastSet& forecasts, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out << "market,day,hour,p_hat,u,nu\n";
    for (const auto& id : forecasts.market_ids) {
        for (const auto& df : forecasts.by_market.at(id)) {
            for (int h = 0; h < kHoursPerDay; ++h) {
                // u is recoverable as nu * p_hat when finite
                const double u = std::isinf(df.nu[h]) ? df.nu[h] : df.nu[h] * df.p_hat[h];
                out << id << ',' << format_day(df.day) << ',' << h << ',' << df.p_hat[h] << ','
                    << u << ',' << df.nu[h] << '\n';
            }
        }
    }
}

void write_threshold_csv(const ThresholdTable& table, const UaStats& stats,
                         const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out << "market,u_th,ua,p_acc_given_cert,p_inacc_given_uncert,n_ac,n_au,n_ic,n_iu\n";
    for (std::size_t i = 0; i < table.market_ids.size(); ++i) {
        out << table.market_ids[i] << ',' << table.u_th[i] << ',' << table.achieved_ua << ',';
        if (stats.p_acc_given_cert) out << *stats.p_acc_given_cert;
        out << ',';
        if (stats.p_inacc_given_uncert) out << *stats.p_inacc_given_uncert;
        out << ',' << table.counts.n_ac << ',' << table.counts.n_au << ',' << table.counts.n_ic
            << ',' << table.counts.n_iu << '\n';
    }
}

}  // namespace frm
