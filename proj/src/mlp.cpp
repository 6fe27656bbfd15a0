#include "frm/mlp.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <json.hpp>

namespace frm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t subseed(std::uint64_t seed, std::uint64_t j) {
    return splitmix64(seed ^ splitmix64(j + 1));
}

std::array<double, MlpModel::kOut> MlpModel::forward(
    const std::array<double, kIn>& x, const std::array<double, kHidden>& mask) const {
    std::array<double, kHidden> h;
    for (int i = 0; i < kHidden; ++i) {
        double acc = b1_[i];
        const double* row = &w1_[static_cast<std::size_t>(i) * kIn];
        for (int j = 0; j < kIn; ++j) acc += row[j] * x[j];
        h[i] = acc > 0.0 ? acc * mask[i] : 0.0;
    }
    std::array<double, kOut> y;
    for (int i = 0; i < kOut; ++i) {
        double acc = b2_[i];
        const double* row = &w2_[static_cast<std::size_t>(i) * kHidden];
        for (int j = 0; j < kHidden; ++j) acc += row[j] * h[j];
        y[i] = acc;
    }
    return y;
}

MlpModel train_mlp(const TrainingWindow& window, const MlpTrainConfig& cfg, std::uint64_t seed) {
    if (window.samples.empty()) throw TrainingError("training window is empty");

    constexpr int In = MlpModel::kIn;
    constexpr int Hid = MlpModel::kHidden;
    constexpr int Out = MlpModel::kOut;

    MlpModel m;
    m.dropout_rate_ = cfg.dropout_rate;
    m.stats_ = window.stats;
    m.market_id_ = window.market_id;
    m.w1_.assign(static_cast<std::size_t>(Hid) * In, 0.0);
    m.b1_.assign(Hid, 0.0);
    m.w2_.assign(static_cast<std::size_t>(Out) * Hid, 0.0);
    m.b2_.assign(Out, 0.0);

    std::mt19937_64 rng(subseed(seed, 0));
    {
        // He initialization on both layers
        std::normal_distribution<double> g1(0.0, std::sqrt(2.0 / In));
        std::normal_distribution<double> g2(0.0, std::sqrt(2.0 / Hid));
        for (auto& w : m.w1_) w = g1(rng);
        for (auto& w : m.w2_) w = g2(rng);
    }

    const std::size_t n_params = m.w1_.size() + m.b1_.size() + m.w2_.size() + m.b2_.size();
    std::vector<double> adam_m(n_params, 0.0), adam_v(n_params, 0.0);
    std::vector<double> grad(n_params, 0.0);
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    const double keep = 1.0 - cfg.dropout_rate;
    std::bernoulli_distribution keep_dist(keep);
    const std::size_t n = window.samples.size();

    auto* gw1 = grad.data();
    auto* gb1 = gw1 + m.w1_.size();
    auto* gw2 = gb1 + m.b1_.size();
    auto* gb2 = gw2 + m.w2_.size();

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss = 0.0;

        for (const auto& sample : window.samples) {
            const auto& x = sample.features.values;

            std::array<double, Hid> mask;
            if (cfg.dropout_rate > 0.0) {
                for (int i = 0; i < Hid; ++i) mask[i] = keep_dist(rng) ? 1.0 / keep : 0.0;
            } else {
                mask.fill(1.0);
            }

            std::array<double, Hid> pre, h;
            for (int i = 0; i < Hid; ++i) {
                double acc = m.b1_[i];
                const double* row = &m.w1_[static_cast<std::size_t>(i) * In];
                for (int j = 0; j < In; ++j) acc += row[j] * x[j];
                pre[i] = acc;
                h[i] = acc > 0.0 ? acc * mask[i] : 0.0;
            }
            std::array<double, Out> y, dy;
            for (int i = 0; i < Out; ++i) {
                double acc = m.b2_[i];
                const double* row = &m.w2_[static_cast<std::size_t>(i) * Hid];
                for (int j = 0; j < Hid; ++j) acc += row[j] * h[j];
                y[i] = acc;
                const double err = acc - sample.target[i];
                loss += err * err;
                dy[i] = 2.0 * err / (Out * static_cast<double>(n));
            }

            std::array<double, Hid> dh{};
            for (int i = 0; i < Out; ++i) {
                const double* row = &m.w2_[static_cast<std::size_t>(i) * Hid];
                double* grow = &gw2[static_cast<std::size_t>(i) * Hid];
                for (int j = 0; j < Hid; ++j) {
                    grow[j] += dy[i] * h[j];
                    dh[j] += dy[i] * row[j];
                }
                gb2[i] += dy[i];
            }
            for (int i = 0; i < Hid; ++i) {
                if (pre[i] <= 0.0) continue;
                const double dpre = dh[i] * mask[i];
                if (dpre == 0.0) continue;
                double* grow = &gw1[static_cast<std::size_t>(i) * In];
                for (int j = 0; j < In; ++j) grow[j] += dpre * x[j];
                gb1[i] += dpre;
            }
        }

        if (!std::isfinite(loss)) {
            throw TrainingError(window.market_id + ": loss diverged to " + std::to_string(loss) +
                                " at epoch " + std::to_string(epoch));
        }

        const double bc1 = 1.0 - std::pow(beta1, epoch);
        const double bc2 = 1.0 - std::pow(beta2, epoch);
        auto adam_step = [&](double* params, std::size_t offset, std::size_t count) {
            for (std::size_t k = 0; k < count; ++k) {
                const double g = grad[offset + k];
                adam_m[offset + k] = beta1 * adam_m[offset + k] + (1.0 - beta1) * g;
                adam_v[offset + k] = beta2 * adam_v[offset + k] + (1.0 - beta2) * g * g;
                const double mhat = adam_m[offset + k] / bc1;
                const double vhat = adam_v[offset + k] / bc2;
                params[k] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + eps);
            }
        };
        std::size_t off = 0;
        adam_step(m.w1_.data(), off, m.w1_.size());
        off += m.w1_.size();
        adam_step(m.b1_.data(), off, m.b1_.size());
        off += m.b1_.size();
        adam_step(m.w2_.data(), off, m.w2_.size());
        off += m.w2_.size();
        adam_step(m.b2_.data(), off, m.b2_.size());
    }
    return m;
}

ForecastResult predict_mc(const MlpModel& model, const FeatureVector& x, int n_samples,
                          std::uint64_t seed) {
    if (n_samples < 2) {
        throw std::invalid_argument("predict_mc requires N >= 2, got " +
                                    std::to_string(n_samples));
    }
    constexpr int Hid = MlpModel::kHidden;
    constexpr int Out = MlpModel::kOut;

    ForecastResult fr;
    fr.market_id = x.market_id;
    fr.day = x.target_day;
    fr.n_samples = n_samples;
    fr.samples.resize(static_cast<std::size_t>(n_samples));

    const double keep = 1.0 - model.dropout_rate();
    for (int j = 0; j < n_samples; ++j) {
        std::array<double, Hid> mask;
        if (model.dropout_rate() > 0.0) {
            std::mt19937_64 rng(subseed(seed, static_cast<std::uint64_t>(j)));
            std::bernoulli_distribution keep_dist(keep);
            for (int i = 0; i < Hid; ++i) mask[i] = keep_dist(rng) ? 1.0 / keep : 0.0;
        } else {
            mask.fill(1.0);
        }
        const auto y = model.forward(x.values, mask);
        for (int h = 0; h < Out; ++h) fr.samples[j][h] = model.stats().invert(y[h]);
    }

    std::vector<double> column(static_cast<std::size_t>(n_samples));
    for (int h = 0; h < Out; ++h) {
        for (int j = 0; j < n_samples; ++j) column[j] = fr.samples[j][h];
        const auto s = summarize_samples(column);
        fr.p_hat[h] = s.mean;
        fr.u[h] = s.u;
        fr.nu[h] = s.nu;
    }
    return fr;
}

SampleSummary summarize_samples(std::span<const double> samples) {
    if (samples.size() < 2) {
        throw std::invalid_argument("sample standard deviation needs N >= 2");
    }
    double sum = 0.0;
    double lo = samples[0], hi = samples[0];
    for (double v : samples) {
        sum += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    SampleSummary s;
    s.mean = sum / static_cast<double>(samples.size());
    if (lo == hi) {
        s.u = 0.0;  // constant column: the spread is exactly zero
    } else {
        double ss = 0.0;
        for (double v : samples) {
            const double d = v - s.mean;
            ss += d * d;
        }
        s.u = std::sqrt(ss / static_cast<double>(samples.size() - 1));
    }
    s.nu = s.mean > kNuPriceFloor ? s.u / s.mean : std::numeric_limits<double>::infinity();
    return s;
}

std::string MlpModel::to_json() const {
    nlohmann::json j;
    j["format"] = "frm-mlp";
    j["version"] = 1;
    j["layers"] = {kIn, kHidden, kOut};
    j["w1"] = w1_;
    j["b1"] = b1_;
    j["w2"] = w2_;
    j["b2"] = b2_;
    j["dropout_rate"] = dropout_rate_;
    j["stats"] = {{"mean", stats_.mean}, {"std", stats_.std}};
    j["market_id"] = market_id_;
    return j.dump();
}

MlpModel MlpModel::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != "frm-mlp" || j.value("version", 0) != 1) {
        throw ParseError("unrecognized model artifact");
    }
    MlpModel m;
    m.w1_ = j.at("w1").get<std::vector<double>>();
    m.b1_ = j.at("b1").get<std::vector<double>>();
    m.w2_ = j.at("w2").get<std::vector<double>>();
    m.b2_ = j.at("b2").get<std::vector<double>>();
    m.dropout_rate_ = j.at("dropout_rate").get<double>();
    m.stats_.mean = j.at("stats").at("mean").get<double>();
    m.stats_.std = j.at("stats").at("std").get<double>();
    m.market_id_ = j.at("market_id").get<std::string>();
    if (m.w1_.size() != static_cast<std::size_t>(kHidden) * kIn || m.b1_.size() != kHidden ||
        m.w2_.size() != static_cast<std::size_t>(kOut) * kHidden || m.b2_.size() != kOut) {
        throw ParseError("model artifact has wrong layer sizes");
    }
    return m;
}

void MlpModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out << to_json();
}

MlpModel MlpModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

}  // namespace frm
