#include "rpcl/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "rpcl/numeric.hpp"

namespace rpcl {

std::pair<std::size_t, std::size_t> select_winner_rival(std::span<const double> x,
                                                        const CenterSet& cs) {
    constexpr auto npos = std::numeric_limits<std::size_t>::max();
    std::size_t winner = npos, rival = npos;
    double d_win = 0.0, d_riv = 0.0;
    for (std::size_t k = 0; k < cs.centers.rows(); ++k) {
        if (!cs.active[k]) continue;
        double d = squared_distance(x, cs.centers.row(k));
        if (winner == npos || d < d_win) {
            rival = winner;
            d_riv = d_win;
            winner = k;
            d_win = d;
        } else if (rival == npos || d < d_riv) {
            rival = k;
            d_riv = d;
        }
    }
    if (winner == npos || rival == npos)
        throw std::runtime_error("select_winner_rival: insufficient centers (need >= 2 active)");
    return {winner, rival};
}

void rpcl_step(std::span<const double> x, CenterSet& cs, const RpclParams& p) {
    auto [c, r] = select_winner_rival(x, cs);
    auto mu_c = cs.centers.row(c);
    for (std::size_t j = 0; j < x.size(); ++j) mu_c[j] += p.eta * (x[j] - mu_c[j]);
    auto mu_r = cs.centers.row(r);
    for (std::size_t j = 0; j < x.size(); ++j) mu_r[j] -= p.eta * p.gamma * (x[j] - mu_r[j]);
    ++cs.wins[c];
}

namespace {

double bounding_radius(const Matrix& data) {
    std::vector<double> centroid(data.cols(), 0.0);
    for (std::size_t i = 0; i < data.rows(); ++i)
        for (std::size_t j = 0; j < data.cols(); ++j) centroid[j] += data(i, j);
    for (double& c : centroid) c /= static_cast<double>(data.rows());
    double r2 = 0.0;
    for (std::size_t i = 0; i < data.rows(); ++i)
        r2 = std::max(r2, squared_distance(data.row(i), centroid));
    return std::sqrt(r2);
}

double nearest_datum_distance(std::span<const double> center, const Matrix& data) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < data.rows(); ++i)
        best = std::min(best, squared_distance(center, data.row(i)));
    return std::sqrt(best);
}

}  // namespace

CenterSet fit_rpcl(const Matrix& data, std::size_t k_init, const RpclParams& p, Rng& rng) {
    if (data.empty()) throw std::invalid_argument("fit_rpcl: empty data");
    if (k_init < 2) throw std::invalid_argument("fit_rpcl: k_init must be >= 2");
    if (k_init > data.rows())
        throw std::invalid_argument("fit_rpcl: k_init exceeds sample count");
    if (p.eta <= 0.0 || p.eta >= 1.0) throw std::invalid_argument("fit_rpcl: need 0 < eta < 1");
    if (p.gamma < 0.0) throw std::invalid_argument("fit_rpcl: gamma must be >= 0");
    if (p.tol <= 0.0) throw std::invalid_argument("fit_rpcl: tol must be > 0");

    // Initialize at k_init distinct data points drawn by seeded sampling.
    std::vector<std::size_t> order(data.rows());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    CenterSet cs{Matrix(k_init, data.cols()), std::vector<bool>(k_init, true),
                 std::vector<std::size_t>(k_init, 0)};
    {
        std::size_t placed = 0;
        for (std::size_t idx : order) {
            bool dup = false;
            for (std::size_t k = 0; k < placed && !dup; ++k)
                dup = squared_distance(data.row(idx), cs.centers.row(k)) == 0.0;
            if (dup) continue;
            auto dst = cs.centers.row(placed);
            auto src = data.row(idx);
            std::copy(src.begin(), src.end(), dst.begin());
            if (++placed == k_init) break;
        }
        if (placed < k_init)
            throw std::invalid_argument("fit_rpcl: fewer distinct data points than k_init");
    }

    const double radius = bounding_radius(data);
    RpclParams step = p;
    for (std::size_t epoch = 0; epoch < p.epochs; ++epoch) {
        if (cs.active_count() < 2) break;  // no rival left to select
        if (p.anneal) {
            double decay = 1.0 - static_cast<double>(epoch) / static_cast<double>(p.epochs);
            step.eta = p.eta * decay;
            step.gamma = p.gamma * decay;
        }
        Matrix before = cs.centers;
        rng.shuffle(order);
        for (std::size_t idx : order) rpcl_step(data.row(idx), cs, step);

        // Expel centers stranded far outside the data.
        for (std::size_t k = 0; k < k_init && cs.active_count() > 1; ++k) {
            if (!cs.active[k]) continue;
            if (nearest_datum_distance(cs.centers.row(k), data) >
                p.expel_radius_factor * radius)
                cs.active[k] = false;
        }

        double max_move = 0.0;
        for (std::size_t k = 0; k < k_init; ++k) {
            if (!cs.active[k]) continue;
            max_move = std::max(max_move,
                                std::sqrt(squared_distance(before.row(k), cs.centers.row(k))));
        }
        if (max_move < p.tol) break;
    }
    return cs;
}

}  // namespace rpcl
