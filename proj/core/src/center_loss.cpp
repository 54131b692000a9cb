#include "rpcl/center_loss.hpp"

#include <limits>
#include <stdexcept>

#include "rpcl/numeric.hpp"

namespace rpcl {

CenterLossOutput center_rpcl_loss(const Matrix& features,
                                  const std::vector<std::size_t>& labels,
                                  const CenterLossState& state, double base_loss) {
    if (!state.initialized)
        throw std::invalid_argument("center_rpcl_loss: class centers not initialized");
    if (state.gamma_c >= state.beta_c)
        throw std::invalid_argument("center_rpcl_loss: need gamma_c < beta_c");
    if (labels.size() != features.rows())
        throw std::invalid_argument("center_rpcl_loss: label count mismatch");
    const std::size_t n = state.class_centers.rows();
    if (n < 2) throw std::invalid_argument("center_rpcl_loss: need >= 2 class centers");

    CenterLossOutput out;
    out.loss = base_loss;
    out.grad_features = Matrix(features.rows(), features.cols());
    out.rival_centers.resize(features.rows());

    for (std::size_t i = 0; i < features.rows(); ++i) {
        std::size_t y = labels[i];
        if (y >= n) throw std::invalid_argument("center_rpcl_loss: label out of range");
        auto x = features.row(i);

        std::size_t r = std::numeric_limits<std::size_t>::max();
        double best = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == y) continue;
            double dj = squared_distance(x, state.class_centers.row(j));
            if (r == std::numeric_limits<std::size_t>::max() || dj < best) {
                r = j;
                best = dj;
            }
        }
        out.rival_centers[i] = r;

        auto cy = state.class_centers.row(y);
        auto cr = state.class_centers.row(r);
        out.loss += state.beta_c * squared_distance(x, cy) - state.gamma_c * best;
        for (std::size_t a = 0; a < features.cols(); ++a)
            out.grad_features(i, a) =
                2.0 * state.beta_c * (x[a] - cy[a]) - 2.0 * state.gamma_c * (x[a] - cr[a]);
    }
    return out;
}

void update_centers(CenterLossState& state, const Matrix& features,
                    const std::vector<std::size_t>& labels) {
    if (features.rows() == 0) throw std::invalid_argument("update_centers: empty batch");
    const std::size_t n = state.class_centers.rows();
    std::vector<std::size_t> counts(n, 0);
    Matrix sums(n, features.cols());
    for (std::size_t i = 0; i < features.rows(); ++i) {
        std::size_t y = labels[i];
        if (y >= n) throw std::invalid_argument("update_centers: label out of range");
        ++counts[y];
        for (std::size_t a = 0; a < features.cols(); ++a) sums(y, a) += features(i, a);
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (counts[j] == 0) continue;
        for (std::size_t a = 0; a < features.cols(); ++a) {
            double mean_delta = state.class_centers(j, a) - sums(j, a) / static_cast<double>(counts[j]);
            state.class_centers(j, a) -= state.alpha * mean_delta;
        }
    }
}

}  // namespace rpcl
