#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "rpcl/matrix.hpp"
#include "rpcl/rng.hpp"

namespace rpcl {

// Online competitive-learning state: K candidate centers, an active flag
// per center (surplus centers get expelled) and per-center win counts.
struct CenterSet {
    Matrix centers;              // K x d
    std::vector<bool> active;    // expelled centers never reactivate
    std::vector<std::size_t> wins;

    std::size_t active_count() const {
        std::size_t n = 0;
        for (bool a : active) n += a;
        return n;
    }
};

struct RpclParams {
    double eta = 0.05;          // winner learning rate, 0 < eta < 1
    double gamma = 0.05;        // rival de-learning strength, small vs 1
    std::size_t epochs = 50;
    double tol = 1e-5;          // max center movement per epoch for early stop
    double expel_radius_factor = 3.0;
    bool anneal = false;        // optional linear decay of eta over epochs
};

// Winner = nearest active center, rival = second nearest.
// Ties break toward the lowest index. Throws with fewer than 2 active centers.
std::pair<std::size_t, std::size_t> select_winner_rival(std::span<const double> x,
                                                        const CenterSet& cs);

// One sample update: winner learns toward x by eta, rival is de-learned
// away by eta*gamma, everything else stays put.
void rpcl_step(std::span<const double> x, CenterSet& cs, const RpclParams& p);

// Full run: seeded shuffled per-sample passes, post-epoch expulsion of
// centers stranded far outside the data, early stop on small movement.
CenterSet fit_rpcl(const Matrix& data, std::size_t k_init, const RpclParams& p, Rng& rng);

}  // namespace rpcl
