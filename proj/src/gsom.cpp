#include "frm/gsom.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "frm/mlp.hpp"  // subseed

namespace frm {

double GsomParams::growth_threshold() const {
    if (!(spread_factor > 0.0 && spread_factor < 1.0)) {
        throw std::invalid_argument("spread_factor must lie in (0,1)");
    }
    return -static_cast<double>(kFeatureDim) * std::log(spread_factor);
}

namespace {

double sq_distance(const std::array<double, kFeatureDim>& a,
                   const std::array<double, kFeatureDim>& b) {
    double acc = 0.0;
    for (int i = 0; i < kFeatureDim; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

struct GridIndex {
    std::map<std::pair<int, int>, std::size_t> by_pos;

    void insert(int x, int y, std::size_t idx) { by_pos[{x, y}] = idx; }
    const std::size_t* find(int x, int y) const {
        auto it = by_pos.find({x, y});
        return it == by_pos.end() ? nullptr : &it->second;
    }
};

constexpr int kOffsets[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};

}  // namespace

std::size_t GsomMap::winner(const std::array<double, kFeatureDim>& x) const {
    if (nodes_.empty()) throw std::logic_error("GSOM map has no nodes");
    std::size_t best = 0;
    double best_d = sq_distance(x, nodes_[0].weight);
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
        const double d = sq_distance(x, nodes_[i].weight);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

GsomMap train_gsom(const std::vector<FeatureVector>& vectors,
                   const std::vector<std::vector<double>>& prices, const GsomParams& params,
                   std::uint64_t seed) {
    if (vectors.empty()) throw std::invalid_argument("train_gsom: no input vectors");
    if (prices.size() != vectors.size()) {
        throw std::invalid_argument("train_gsom: one price list per input vector required");
    }

    GsomMap map;
    map.params_ = params;
    const double gt = params.growth_threshold();

    GridIndex grid;
    std::mt19937_64 rng(subseed(seed, 0));
    std::uniform_real_distribution<double> init(-0.05, 0.05);
    for (int gx = 0; gx <= 1; ++gx) {
        for (int gy = 0; gy <= 1; ++gy) {
            GsomNode node;
            node.gx = gx;
            node.gy = gy;
            for (auto& w : node.weight) w = init(rng);
            grid.insert(gx, gy, map.nodes_.size());
            map.nodes_.push_back(std::move(node));
        }
    }

    auto adapt = [&](std::size_t win, const std::array<double, kFeatureDim>& x, double lr,
                     int radius) {
        const auto& wn = map.nodes_[win];
        const int wx = wn.gx, wy = wn.gy;
        for (auto& node : map.nodes_) {
            const int dx = node.gx - wx, dy = node.gy - wy;
            const int d2 = dx * dx + dy * dy;
            if (d2 > radius * radius) continue;
            const double theta = std::exp(-static_cast<double>(d2) / (2.0 * radius * radius));
            const double step = lr * theta;
            for (int i = 0; i < kFeatureDim; ++i) {
                node.weight[i] += step * (x[i] - node.weight[i]);
            }
        }
    };

    auto is_boundary = [&](const GsomNode& node) {
        for (const auto& off : kOffsets) {
            if (!grid.find(node.gx + off[0], node.gy + off[1])) return true;
        }
        return false;
    };

    auto grow_from = [&](std::size_t win) {
        // spawn a node at every free orthogonal position next to the winner;
        // the new weight extrapolates across the winner from the opposite
        // neighbour when one exists
        const int wx = map.nodes_[win].gx, wy = map.nodes_[win].gy;
        for (const auto& off : kOffsets) {
            const int nx = wx + off[0], ny = wy + off[1];
            if (grid.find(nx, ny)) continue;
            GsomNode node;
            node.gx = nx;
            node.gy = ny;
            const std::size_t* opposite = grid.find(wx - off[0], wy - off[1]);
            const auto& w = map.nodes_[win].weight;
            if (opposite) {
                const auto& o = map.nodes_[*opposite].weight;
                for (int i = 0; i < kFeatureDim; ++i) node.weight[i] = 2.0 * w[i] - o[i];
            } else {
                node.weight = w;
            }
            grid.insert(nx, ny, map.nodes_.size());
            map.nodes_.push_back(std::move(node));
        }
        map.nodes_[win].accumulated_error = gt / 2.0;
    };

    // growing phase
    const std::size_t n = vectors.size();
    const std::size_t grow_steps = std::max<std::size_t>(1, params.grow_passes * n);
    std::size_t step = 0;
    for (int pass = 0; pass < params.grow_passes; ++pass) {
        for (const auto& fv : vectors) {
            const double frac = static_cast<double>(step) / static_cast<double>(grow_steps);
            const double lr = params.grow_learning_rate * (1.0 - frac);
            const int radius = std::max(
                1, params.start_radius - static_cast<int>(frac * (params.start_radius - 1) + 0.5));
            const std::size_t win = map.winner(fv.values);
            map.nodes_[win].accumulated_error += std::sqrt(sq_distance(fv.values, map.nodes_[win].weight));
            adapt(win, fv.values, lr, radius);
            if (map.nodes_[win].accumulated_error > gt) {
                if (is_boundary(map.nodes_[win])) {
                    grow_from(win);
                } else {
                    // interior winner: push error outward so growth happens
                    // at the map boundary
                    const double excess = map.nodes_[win].accumulated_error;
                    map.nodes_[win].accumulated_error = gt / 2.0;
                    const int wx = map.nodes_[win].gx, wy = map.nodes_[win].gy;
                    for (const auto& off : kOffsets) {
                        if (const std::size_t* nb = grid.find(wx + off[0], wy + off[1])) {
                            map.nodes_[*nb].accumulated_error += params.error_spread * excess;
                        }
                    }
                }
            }
            ++step;
        }
    }

    // smoothing phase: reduced rate, tight neighbourhood, no growth
    for (int pass = 0; pass < params.smooth_passes; ++pass) {
        for (const auto& fv : vectors) {
            const std::size_t win = map.winner(fv.values);
            adapt(win, fv.values, params.smooth_learning_rate, 1);
        }
    }

    for (std::size_t i = 0; i < vectors.size(); ++i) {
        const std::size_t win = map.winner(vectors[i].values);
        auto& attached = map.nodes_[win].attached_prices;
        attached.insert(attached.end(), prices[i].begin(), prices[i].end());
    }

    map.trained_ = true;
    return map;
}

GsomUncertainty gsom_uncertainty(const GsomMap& map, const FeatureVector& x) {
    if (!map.trained()) throw std::logic_error("gsom_uncertainty: map is not trained");
    constexpr double inf = std::numeric_limits<double>::infinity();

    GsomUncertainty out;
    out.winner = map.winner(x.values);
    const auto& p = map.nodes()[out.winner].attached_prices;
    out.price_count = p.size();
    if (p.size() < 2) {
        // no or single observation: no measurable spread, maximal uncertainty
        out.u = inf;
        out.nu = inf;
        return out;
    }
    double mean = 0.0;
    for (double v : p) mean += v;
    mean /= static_cast<double>(p.size());
    double ss = 0.0;
    for (double v : p) {
        const double d = v - mean;
        ss += d * d;
    }
    out.u = std::sqrt(ss / static_cast<double>(p.size() - 1));
    out.nu = mean > kNuPriceFloor ? out.u / mean : inf;
    return out;
}

std::string GsomMap::to_json() const {
    nlohmann::json j;
    j["format"] = "frm-gsom";
    j["version"] = 1;
    j["trained"] = trained_;
    j["params"] = {{"spread_factor", params_.spread_factor},
                   {"grow_learning_rate", params_.grow_learning_rate},
                   {"smooth_learning_rate", params_.smooth_learning_rate},
                   {"start_radius", params_.start_radius},
                   {"grow_passes", params_.grow_passes},
                   {"smooth_passes", params_.smooth_passes},
                   {"error_spread", params_.error_spread}};
    auto& nodes = j["nodes"] = nlohmann::json::array();
    for (const auto& n : nodes_) {
        nodes.push_back({{"gx", n.gx},
                         {"gy", n.gy},
                         {"error", n.accumulated_error},
                         {"weight", std::vector<double>(n.weight.begin(), n.weight.end())},
                         {"prices", n.attached_prices}});
    }
    return j.dump();
}

GsomMap GsomMap::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != "frm-gsom" || j.value("version", 0) != 1) {
        throw ParseError("unrecognized map artifact");
    }
    GsomMap m;
    m.trained_ = j.at("trained").get<bool>();
    const auto& p = j.at("params");
    m.params_.spread_factor = p.at("spread_factor").get<double>();
    m.params_.grow_learning_rate = p.at("grow_learning_rate").get<double>();
    m.params_.smooth_learning_rate = p.at("smooth_learning_rate").get<double>();
    m.params_.start_radius = p.at("start_radius").get<int>();
    m.params_.grow_passes = p.at("grow_passes").get<int>();
    m.params_.smooth_passes = p.at("smooth_passes").get<int>();
    m.params_.error_spread = p.at("error_spread").get<double>();
    for (const auto& nj : j.at("nodes")) {
        GsomNode n;
        n.gx = nj.at("gx").get<int>();
        n.gy = nj.at("gy").get<int>();
        n.accumulated_error = nj.at("error").get<double>();
        const auto w = nj.at("weight").get<std::vector<double>>();
        if (w.size() != kFeatureDim) throw ParseError("map artifact has wrong weight size");
        std::copy(w.begin(), w.end(), n.weight.begin());
        n.attached_prices = nj.at("prices").get<std::vector<double>>();
        m.nodes_.push_back(std::move(n));
    }
    return m;
}

void GsomMap::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out << to_json();
}

GsomMap GsomMap::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

}  // namespace frm
