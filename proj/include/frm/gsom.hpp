#ifndef FRM_GSOM_HPP
#define FRM_GSOM_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "frm/data.hpp"

namespace frm {

struct GsomParams {
    double spread_factor = 0.5;          // in (0,1); sets the growth threshold
    double grow_learning_rate = 0.3;     // decays linearly over the growing pass
    double smooth_learning_rate = 0.05;  // smoothing pass, no growth
    int start_radius = 3;                // shrinks to 1
    int grow_passes = 1;
    int smooth_passes = 1;
    double error_spread = 0.25;  // error share pushed to neighbours of interior winners

    // GT = -D * ln(spread_factor), D = input dimensionality.
    double growth_threshold() const;
};

struct GsomNode {
    std::array<double, kFeatureDim> weight{};
    int gx = 0;
    int gy = 0;
    double accumulated_error = 0.0;
    std::vector<double> attached_prices;
};

class GsomMap {
public:
    GsomMap() = default;

    const std::vector<GsomNode>& nodes() const { return nodes_; }
    const GsomParams& params() const { return params_; }
    bool trained() const { return trained_; }

    // Index of the node nearest to x by Euclidean distance. Ties go to the
    // lowest node index.
    std::size_t winner(const std::array<double, kFeatureDim>& x) const;

    std::string to_json() const;
    static GsomMap from_json(const std::string& text);
    void save(const std::string& path) const;
    static GsomMap load(const std::string& path);

    friend GsomMap train_gsom(const std::vector<FeatureVector>&,
                              const std::vector<std::vector<double>>&, const GsomParams&,
                              std::uint64_t);

private:
    std::vector<GsomNode> nodes_;
    GsomParams params_;
    bool trained_ = false;
};

// Grows the map from the initial 2x2 grid over the inputs, smooths it, then
// attaches each sample's target prices to its final winner. `prices[i]` holds
// the actual prices paired with vectors[i] (typically the 24 hourly prices of
// that sample's target day).
GsomMap train_gsom(const std::vector<FeatureVector>& vectors,
                   const std::vector<std::vector<double>>& prices, const GsomParams& params,
                   std::uint64_t seed);

struct GsomUncertainty {
    double u = 0.0;        // sample std of the winner's attached prices; +inf if < 2
    double nu = 0.0;       // u / mean attached price, +inf below the price floor
    std::size_t winner = 0;
    std::size_t price_count = 0;
};

// Epistemic-uncertainty query: spread of the historical prices attached to
// the nearest node. A winner with fewer than two attached prices carries no
// usable evidence and reports +inf.
GsomUncertainty gsom_uncertainty(const GsomMap& map, const FeatureVector& x);

}  // namespace frm

#endif
