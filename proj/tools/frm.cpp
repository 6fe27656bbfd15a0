// frm: bidding-strategy backtester for multiple frequency-reserve markets.
//
// Subcommands: synth, ingest, train, forecast, calibrate, backtest, compare.
// Every run writes a manifest (config hash + seeds) so identical invocations
// reproduce identical artifacts.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "frm/backtest.hpp"
#include "frm/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "1.0.0";

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw frm::ParseError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

struct Cli {
    std::string config_path;
    std::string out_dir = "run";
    std::string forecasts_dir;  // upstream artifact for calibrate/backtest
    std::vector<std::string> market_filter;
    std::vector<std::string> compare_dirs;
    std::optional<std::uint64_t> seed_override;
    std::optional<int> strategy;
    std::optional<int> scheme;
    bool no_uncertainty = false;
    bool perfect_foresight = false;
    bool error_json = false;
};

struct RunConfig {
    json raw;
    std::string raw_text;
    frm::ExperimentConfig exp;
    std::string data_dir;
};

frm::MarketSpec market_from_json(const json& j) {
    frm::MarketSpec m;
    m.id = j.at("id").get<std::string>();
    const std::string kind = j.value("kind", "day_ahead");
    if (kind == "day_ahead") {
        m.kind = frm::MarketKind::DayAhead;
        m.epochs_per_interval = j.value("epochs_per_interval", 24);
    } else if (kind == "epoch_ahead") {
        m.kind = frm::MarketKind::EpochAhead;
        m.epochs_per_interval = j.value("epochs_per_interval", 1);
    } else {
        throw frm::ParseError("market " + m.id + ": kind must be day_ahead or epoch_ahead");
    }
    m.epoch_duration_h = j.value("epoch_duration_h", 1.0);
    m.bid_deadline_offset_h = j.value("bid_deadline_offset_h", 0.0);
    m.symmetric = j.value("symmetric", true);
    m.peak_hours_only = j.value("peak_hours_only", false);
    return m;
}

RunConfig load_config(const Cli& cli) {
    if (cli.config_path.empty()) throw frm::ParseError("--config is required");
    RunConfig rc;
    rc.raw_text = read_file(cli.config_path);
    rc.raw = json::parse(rc.raw_text);
    const json& j = rc.raw;

    auto& exp = rc.exp;
    for (const auto& mj : j.at("markets")) {
        auto m = market_from_json(mj);
        if (!cli.market_filter.empty() &&
            std::find(cli.market_filter.begin(), cli.market_filter.end(), m.id) ==
                cli.market_filter.end()) {
            continue;
        }
        exp.markets.markets.push_back(std::move(m));
    }
    exp.markets.portfolio_capacity_mw = j.value("capacity_mw", 10.0);
    exp.markets.validate();

    exp.start_day = frm::parse_day(j.at("start_day").get<std::string>());
    exp.n_days = j.value("n_days", 30);
    exp.strategy = cli.strategy.value_or(j.value("strategy", 1));
    exp.scheme = cli.scheme.value_or(j.value("scheme", 1));
    exp.mc_samples = j.value("mc_samples", 500);
    exp.seed = cli.seed_override.value_or(j.value("seed", std::uint64_t{42}));
    exp.train.epochs = j.value("train_epochs", 200);
    exp.train.learning_rate = j.value("learning_rate", 3e-3);
    exp.train.dropout_rate = j.value("dropout_rate", 0.40);
    exp.use_gsom = j.value("use_gsom", true);
    if (j.contains("gsom")) {
        const json& g = j["gsom"];
        exp.gsom.spread_factor = g.value("spread_factor", exp.gsom.spread_factor);
        exp.gsom.grow_learning_rate = g.value("grow_learning_rate", exp.gsom.grow_learning_rate);
        exp.gsom.smooth_learning_rate =
            g.value("smooth_learning_rate", exp.gsom.smooth_learning_rate);
        exp.gsom.start_radius = g.value("start_radius", exp.gsom.start_radius);
    }
    exp.no_uncertainty = cli.no_uncertainty || j.value("no_uncertainty", false);
    exp.perfect_foresight = cli.perfect_foresight || j.value("perfect_foresight", false);
    exp.strat.mpp = j.value("mpp", 0.1);
    exp.strat.t_comp_h = j.value("t_comp_h", 1.0);
    exp.strat.seed = exp.seed;
    exp.strat.default_market = j.value("default_market", std::string{});
    if (j.contains("resched")) {
        const json& r = j["resched"];
        exp.resched.energy_kwh = r.value("energy_kwh", 44.0);
        exp.resched.p_max_kw = r.value("p_max_kw", 22.0);
        exp.resched.e_earliest = r.value("e_earliest", 0);
        exp.resched.e_latest = r.value("e_latest", 7);
        exp.resched.epochs_per_hour = r.value("epochs_per_hour", 1);
    }

    rc.data_dir = j.value("data_dir", "data");
    if (const char* env = std::getenv("FRM_DATA_ROOT")) rc.data_dir = env;
    return rc;
}

frm::PriceBook load_book(const RunConfig& rc) {
    frm::PriceBook book;
    for (const auto& m : rc.exp.markets.markets) {
        const std::string path = rc.data_dir + "/" + m.id + ".csv";
        book.add(frm::ingest_csv(path, m.id));
    }
    return book;
}

void write_manifest(const Cli& cli, const RunConfig& rc, const std::string& subcommand,
                    const std::vector<std::string>& artifacts) {
    json m;
    m["tool_version"] = kToolVersion;
    m["subcommand"] = subcommand;
    m["config_path"] = cli.config_path;
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(rc.raw_text)));
    m["config_hash"] = hash;
    m["seed"] = rc.exp.seed;
    m["artifacts"] = artifacts;
    std::ofstream out(cli.out_dir + "/manifest.json");
    out << m.dump(2) << '\n';
}

frm::ThresholdTable load_thresholds(const std::string& dir) {
    const std::string path = dir + "/thresholds.json";
    if (!fs::exists(path)) {
        throw frm::ParseError("missing " + path + "; run the 'calibrate' subcommand first");
    }
    const auto j = json::parse(read_file(path));
    frm::ThresholdTable t;
    t.market_ids = j.at("markets").get<std::vector<std::string>>();
    t.u_th = j.at("u_th").get<std::vector<double>>();
    t.achieved_ua = j.value("ua", 0.0);
    return t;
}

frm::ForecastSet load_forecasts(const std::string& dir) {
    const std::string path = dir + "/forecasts.json";
    if (!fs::exists(path)) {
        throw frm::ParseError("missing " + path + "; run the 'forecast' subcommand first");
    }
    return frm::forecast_set_from_json(read_file(path));
}

int cmd_synth(const Cli& cli, const RunConfig& rc) {
    fs::create_directories(cli.out_dir);
    frm::SyntheticParams params;
    params.seed = rc.raw.value("synth_seed", rc.exp.seed);
    const frm::DayTs first = rc.exp.earliest_required_day() - 3;
    const auto book = frm::generate_synthetic(first, rc.exp.end_day(), params);
    std::vector<std::string> artifacts;
    for (const auto& id : book.market_ids()) {
        const std::string path = cli.out_dir + "/" + id + ".csv";
        frm::write_csv(book.series(id), path);
        artifacts.push_back(path);
        std::cout << "wrote " << path << " (" << book.series(id).size() << " rows)\n";
    }
    write_manifest(cli, rc, "synth", artifacts);
    return 0;
}

int cmd_ingest(const Cli& cli, const RunConfig& rc) {
    fs::create_directories(cli.out_dir);
    int failures = 0;
    std::vector<std::string> artifacts;
    for (const auto& m : rc.exp.markets.markets) {
        const std::string path = rc.data_dir + "/" + m.id + ".csv";
        try {
            frm::IngestReport rep;
            const auto series = frm::ingest_csv(path, m.id, &rep);
            std::cout << m.id << ": " << rep.rows << " rows, " << rep.gaps.size() << " gap hour"
                      << (rep.gaps.size() == 1 ? "" : "s") << '\n';
            for (const auto g : rep.gaps) {
                std::cout << "  gap: " << frm::format_hour_utc(g) << '\n';
            }
            const std::string dest = cli.out_dir + "/" + m.id + ".csv";
            frm::write_csv(series, dest);
            artifacts.push_back(dest);
        } catch (const std::exception& e) {
            std::cerr << m.id << ": " << e.what() << '\n';
            ++failures;
        }
    }
    write_manifest(cli, rc, "ingest", artifacts);
    return failures == 0 ? 0 : 1;
}

int cmd_train(const Cli& cli, const RunConfig& rc) {
    fs::create_directories(cli.out_dir);
    const auto book = load_book(rc);
    frm::preflight_coverage(rc.exp, book);
    std::vector<std::string> artifacts;
    std::size_t mi = 0;
    for (const auto& m : rc.exp.markets.markets) {
        const auto window = frm::build_training_window(book.series(m.id), rc.exp.start_day);
        const auto model =
            frm::train_mlp(window, rc.exp.train, frm::subseed(rc.exp.seed, mi + 1));
        const std::string path = cli.out_dir + "/" + m.id + ".model.json";
        model.save(path);
        artifacts.push_back(path);
        std::cout << m.id << ": trained on " << window.samples.size() << " samples -> " << path
                  << '\n';
        ++mi;
    }
    write_manifest(cli, rc, "train", artifacts);
    return 0;
}

int cmd_forecast(const Cli& cli, const RunConfig& rc) {
    fs::create_directories(cli.out_dir);
    const auto book = load_book(rc);
    frm::preflight_coverage(rc.exp, book);
    const auto forecasts = frm::produce_forecasts(rc.exp, book);
    std::ofstream(cli.out_dir + "/forecasts.json") << frm::forecast_set_to_json(forecasts);
    frm::write_forecast_csv(forecasts, cli.out_dir + "/forecasts.csv");
    write_manifest(cli, rc, "forecast",
                   {cli.out_dir + "/forecasts.json", cli.out_dir + "/forecasts.csv"});
    std::cout << "forecasts for " << forecasts.n_days << " days x " << forecasts.market_ids.size()
              << " markets -> " << cli.out_dir << '\n';
    return 0;
}

int cmd_calibrate(const Cli& cli, const RunConfig& rc) {
    fs::create_directories(cli.out_dir);
    const auto book = load_book(rc);
    const std::string src = cli.forecasts_dir.empty() ? cli.out_dir : cli.forecasts_dir;
    const auto forecasts = load_forecasts(src);
    const auto samples = frm::calibration_samples(rc.exp, book, forecasts);
    const auto table = frm::search_thresholds(samples, forecasts.market_ids);
    const auto stats = frm::compute_ua(table.counts);

    json tj;
    tj["markets"] = table.market_ids;
    tj["u_th"] = table.u_th;
    tj["ua"] = table.achieved_ua;
    std::ofstream(cli.out_dir + "/thresholds.json") << tj.dump(2) << '\n';
    frm::write_threshold_csv(table, stats, cli.out_dir + "/thresholds.csv");
    write_manifest(cli, rc, "calibrate",
                   {cli.out_dir + "/thresholds.json", cli.out_dir + "/thresholds.csv"});
    std::cout << "UA " << table.achieved_ua << " with thresholds:";
    for (std::size_t i = 0; i < table.market_ids.size(); ++i) {
        std::cout << ' ' << table.market_ids[i] << '=' << table.u_th[i];
    }
    std::cout << '\n';
    return 0;
}

int cmd_backtest(const Cli& cli, const RunConfig& rc) {
    fs::create_directories(cli.out_dir);
    const auto book = load_book(rc);
    frm::preflight_coverage(rc.exp, book);

    frm::BacktestReport report;
    if (!cli.forecasts_dir.empty()) {
        const auto forecasts = load_forecasts(cli.forecasts_dir);
        frm::ThresholdTable thresholds;
        if (rc.exp.no_uncertainty || rc.exp.perfect_foresight) {
            thresholds.market_ids = forecasts.market_ids;
            thresholds.u_th.assign(forecasts.market_ids.size(), 1.0);
        } else if (fs::exists(cli.forecasts_dir + "/thresholds.json")) {
            thresholds = load_thresholds(cli.forecasts_dir);
        } else {
            const auto samples = frm::calibration_samples(rc.exp, book, forecasts);
            thresholds = frm::search_thresholds(samples, forecasts.market_ids);
        }
        report = frm::run_strategy(rc.exp, book, forecasts, thresholds);
    } else {
        report = frm::run_experiment(rc.exp, book);
    }

    frm::write_report(report, cli.out_dir);
    write_manifest(cli, rc, "backtest",
                   {cli.out_dir + "/report.json", cli.out_dir + "/bids.csv",
                    cli.out_dir + "/revenue.csv"});
    std::cout << "strategy " << report.strategy;
    if (report.strategy == 3) std::cout << " scheme " << report.scheme;
    std::cout << ": revenue " << report.total_revenue << ", selection accuracy "
              << report.selection_accuracy << '\n';
    return 0;
}

int cmd_compare(const Cli& cli, const RunConfig& rc) {
    if (cli.compare_dirs.size() < 2) {
        throw frm::ParseError("compare needs at least two run directories");
    }
    fs::create_directories(cli.out_dir);
    std::vector<frm::BacktestReport> reports;
    std::vector<std::string> labels;
    for (const auto& dir : cli.compare_dirs) {
        const std::string path = dir + "/report.json";
        if (!fs::exists(path)) {
            throw frm::ParseError("missing " + path + "; run the 'backtest' subcommand first");
        }
        const auto j = json::parse(read_file(path));
        frm::BacktestReport r;
        r.strategy = j.at("strategy").get<int>();
        r.scheme = j.value("scheme", 1);
        r.start_day = frm::parse_day(j.at("start_day").get<std::string>());
        r.n_days = j.at("n_days").get<int>();
        r.total_revenue = j.at("total_revenue").get<double>();
        r.selection_accuracy = j.at("selection_accuracy").get<double>();
        for (const auto& dj : j.at("revenue_by_day")) {
            r.revenue_by_day.push_back({frm::parse_day(dj.at("day").get<std::string>()),
                                        dj.at("revenue").get<double>(),
                                        dj.at("cumulative").get<double>()});
        }
        std::string label = "strategy" + std::to_string(r.strategy);
        if (r.strategy == 3) label += "_scheme" + std::to_string(r.scheme);
        reports.push_back(std::move(r));
        labels.push_back(label);
    }
    const auto cmp = frm::compare_strategies(reports, labels);
    std::ofstream(cli.out_dir + "/cumulative.csv") << cmp.to_csv();
    json rows = json::array();
    for (const auto& row : cmp.rows) {
        rows.push_back({{"label", row.label},
                        {"selection_accuracy", row.selection_accuracy},
                        {"total_revenue", row.total_revenue}});
    }
    std::ofstream(cli.out_dir + "/comparison.json") << rows.dump(2) << '\n';
    write_manifest(cli, rc, "compare",
                   {cli.out_dir + "/cumulative.csv", cli.out_dir + "/comparison.json"});
    for (const auto& row : cmp.rows) {
        std::cout << row.label << ": revenue " << row.total_revenue << ", accuracy "
                  << row.selection_accuracy << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Frequency-reserve market bidding backtester"};
    app.require_subcommand(1);

    Cli cli;
    app.add_option("--config", cli.config_path, "Run configuration (JSON)");
    app.add_option("--out", cli.out_dir, "Output run directory");
    app.add_option("--seed", cli.seed_override, "Seed override");
    app.add_option("--strategy", cli.strategy, "Bidding strategy 1..3")
        ->check(CLI::Range(1, 3));
    app.add_option("--scheme", cli.scheme, "Rescheduling scheme 1..4 (strategy 3)")
        ->check(CLI::Range(1, 4));
    app.add_option("--markets", cli.market_filter, "Restrict to these market ids");
    app.add_flag("--no-uncertainty", cli.no_uncertainty, "Disable the uncertainty gate");
    app.add_flag("--perfect-foresight", cli.perfect_foresight, "Forecasts = actual prices");
    app.add_flag("--error-json", cli.error_json, "Machine-readable errors on stderr");

    auto* synth = app.add_subcommand("synth", "Generate synthetic market data");
    auto* ingest = app.add_subcommand("ingest", "Validate price CSVs into a data store");
    auto* train = app.add_subcommand("train", "Train per-market forecast models");
    auto* forecast = app.add_subcommand("forecast", "Walk-forward forecasts over the range");
    auto* calibrate = app.add_subcommand("calibrate", "Search uncertainty thresholds");
    calibrate->add_option("--forecasts", cli.forecasts_dir, "Run dir holding forecasts.json");
    auto* backtest = app.add_subcommand("backtest", "Run a strategy against history");
    backtest->add_option("--forecasts", cli.forecasts_dir,
                         "Reuse forecasts.json (and thresholds) from this run dir");
    auto* compare = app.add_subcommand("compare", "Compare finished backtest runs");
    compare->add_option("runs", cli.compare_dirs, "Run directories with report.json");

    CLI11_PARSE(app, argc, argv);

    try {
        const RunConfig rc = load_config(cli);
        if (synth->parsed()) return cmd_synth(cli, rc);
        if (ingest->parsed()) return cmd_ingest(cli, rc);
        if (train->parsed()) return cmd_train(cli, rc);
        if (forecast->parsed()) return cmd_forecast(cli, rc);
        if (calibrate->parsed()) return cmd_calibrate(cli, rc);
        if (backtest->parsed()) return cmd_backtest(cli, rc);
        if (compare->parsed()) return cmd_compare(cli, rc);
    } catch (const std::exception& e) {
        if (cli.error_json) {
            json err = {{"error", e.what()}};
            std::cerr << err.dump() << '\n';
        } else {
            std::cerr << "error: " << e.what() << '\n';
        }
        return 1;
    }
    return 0;
}
