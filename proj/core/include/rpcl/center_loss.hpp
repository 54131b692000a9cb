#pragma once

#include <cstddef>
#include <vector>

#include "rpcl/matrix.hpp"

namespace rpcl {

// Maintained per-class feature centers for the rival-penalized center
// loss: L = L_s + beta * sum ||x - c_y||^2 - gamma * sum ||x - c_r||^2,
// where c_r is the nearest non-target center.
struct CenterLossState {
    Matrix class_centers;  // n_classes x d
    double beta_c = 0.008;
    double gamma_c = 0.002;
    double alpha = 0.5;  // center update rate, 0 < alpha <= 1
    bool initialized = false;
};

struct CenterLossOutput {
    double loss = 0.0;                       // base loss plus center terms
    Matrix grad_features;                    // center-term contribution only
    std::vector<std::size_t> rival_centers;  // nearest non-target center per sample
};

CenterLossOutput center_rpcl_loss(const Matrix& features,
                                  const std::vector<std::size_t>& labels,
                                  const CenterLossState& state, double base_loss);

// c_j <- c_j - alpha * mean_{i in class j} (c_j - x_i); classes absent
// from the batch are untouched.
void update_centers(CenterLossState& state, const Matrix& features,
                    const std::vector<std::size_t>& labels);

}  // namespace rpcl
