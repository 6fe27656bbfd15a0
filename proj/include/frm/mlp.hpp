#ifndef FRM_MLP_HPP
#define FRM_MLP_HPP

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "frm/data.hpp"

namespace frm {

struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Deterministic sub-seed for MC sample j; independent of evaluation order.
std::uint64_t subseed(std::uint64_t seed, std::uint64_t j);

struct MlpTrainConfig {
    int epochs = 200;
    double learning_rate = 3e-3;  // Adam step size
    double dropout_rate = 0.40;
};

// Fixed 64 -> 32 -> 24 network: rectified hidden layer, identity output,
// dropout on the hidden layer only (train and inference alike).
class MlpModel {
public:
    static constexpr int kIn = kFeatureDim;
    static constexpr int kHidden = 32;
    static constexpr int kOut = kHoursPerDay;

    MlpModel() = default;

    // Standardized-space forward pass. `mask` is the per-unit inverted-dropout
    // multiplier for the hidden layer (all ones = deterministic pass).
    std::array<double, kOut> forward(const std::array<double, kIn>& x,
                                     const std::array<double, kHidden>& mask) const;

    double dropout_rate() const { return dropout_rate_; }
    void set_dropout_rate(double r) { dropout_rate_ = r; }
    const Standardizer& stats() const { return stats_; }
    const std::string& market_id() const { return market_id_; }

    std::string to_json() const;
    static MlpModel from_json(const std::string& text);
    void save(const std::string& path) const;
    static MlpModel load(const std::string& path);

    friend MlpModel train_mlp(const TrainingWindow&, const MlpTrainConfig&, std::uint64_t);

private:
    std::vector<double> w1_;  // kHidden x kIn, row-major
    std::vector<double> b1_;  // kHidden
    std::vector<double> w2_;  // kOut x kHidden
    std::vector<double> b2_;  // kOut
    double dropout_rate_ = 0.40;
    Standardizer stats_;
    std::string market_id_;
};

// Minimizes MSE on the standardized targets with Adam. Deterministic given
// the seed; single-threaded. Throws TrainingError on NaN loss.
MlpModel train_mlp(const TrainingWindow& window, const MlpTrainConfig& cfg, std::uint64_t seed);

struct ForecastResult {
    std::string market_id;
    DayTs day = 0;
    std::array<double, kHoursPerDay> p_hat{};  // mean of the MC samples
    std::array<double, kHoursPerDay> u{};      // N-1 sample standard deviation
    std::array<double, kHoursPerDay> nu{};     // u / p_hat, +inf below the price floor
    int n_samples = 0;
    // Retained de-standardized sample matrix, n_samples rows x 24 columns.
    std::vector<std::array<double, kHoursPerDay>> samples;
};

// MC-dropout inference: N stochastic passes, de-standardized per pass, then
// per-hour mean / sample std / normalized uncertainty.
ForecastResult predict_mc(const MlpModel& model, const FeatureVector& x, int n_samples,
                          std::uint64_t seed);

// Predicted price below this magnitude makes nu undefined; such hours are
// treated as maximally uncertain.
inline constexpr double kNuPriceFloor = 1e-6;

struct SampleSummary {
    double mean = 0.0;
    double u = 0.0;   // N-1 sample standard deviation; exact 0 for a constant column
    double nu = 0.0;  // u / mean, +inf below the price floor
};

// Mean / sample std / normalized uncertainty of one hour's MC samples.
SampleSummary summarize_samples(std::span<const double> samples);

}  // namespace frm

#endif
