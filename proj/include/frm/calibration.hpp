#ifndef FRM_CALIBRATION_HPP
#define FRM_CALIBRATION_HPP

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace frm {

// Accurate/inaccurate x certain/uncertain counts over the evaluated hours.
struct ConfusionCounts {
    std::size_t n_ac = 0;
    std::size_t n_au = 0;
    std::size_t n_ic = 0;
    std::size_t n_iu = 0;

    std::size_t total() const { return n_ac + n_au + n_ic + n_iu; }
};

struct UaStats {
    std::optional<double> p_acc_given_cert;    // undefined when no certain hours
    std::optional<double> p_inacc_given_uncert;  // undefined when no uncertain hours
    double ua = 0.0;
};

// True iff the argmax market of the predictions matches the argmax market of
// the actuals. Ties break toward the lowest index in the shared market
// ordering, identically on both sides.
bool classify_accuracy(std::span<const double> pred, std::span<const double> actual);

// Index of the argmax under the fixed ordering tie-break.
std::size_t argmax_market(std::span<const double> values);

// Strict comparison: a threshold of 0 rejects every forecast.
bool classify_certainty(double nu, double u_th);

UaStats compute_ua(const ConfusionCounts& counts);

// One evaluated hour across the shared market ordering.
struct HourSample {
    std::vector<double> pred;
    std::vector<double> actual;
    std::vector<double> nu;
};

struct ThresholdTable {
    std::vector<std::string> market_ids;  // shared ordering
    std::vector<double> u_th;             // grid points in {0, 0.01, ..., 1}
    double achieved_ua = 0.0;
    ConfusionCounts counts;

    double threshold_for(const std::string& market_id) const;
};

inline constexpr int kGridSteps = 101;  // 0.00 .. 1.00, step 0.01

// The hour is certain iff the argmax-predicted market's nu passes that
// market's threshold; this is the decision the threshold gates.
ConfusionCounts count_confusion(std::span<const HourSample> hours,
                                std::span<const double> thresholds);

// Exhaustive grid search for the per-market thresholds maximizing joint UA.
// Ties go to the smallest threshold vector (lexicographic in the market
// ordering).
ThresholdTable search_thresholds(std::span<const HourSample> hours,
                                 const std::vector<std::string>& market_ids);

}  // namespace frm

#endif
