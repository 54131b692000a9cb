#pragma once

#include <span>
#include <vector>

#include "rpcl/matrix.hpp"

namespace rpcl {

struct NormalizedRows {
    Matrix matrix;
    std::vector<bool> degenerate;  // true where the row norm was below epsilon
};

// Unit-normalizes every row. Rows with norm below epsilon are passed
// through unchanged and flagged in the mask.
NormalizedRows normalize_rows(const Matrix& m, double epsilon = 1e-12);

double row_norm(std::span<const double> row);
double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);

// output[i] = logits[i] - max - log(sum exp(logits[j] - max)),
// left-to-right summation for run-to-run determinism.
std::vector<double> log_softmax_stable(std::span<const double> logits);

// output[i][j] = cos angle(a_i, b_j), clamped to [-1, 1].
// Throws on zero rows, naming the offending row.
Matrix cosine_matrix(const Matrix& a, const Matrix& b);

// Clamp applied before any arccos so sin(theta) never vanishes.
inline constexpr double kCosClampBound = 1.0 - 1e-7;

inline double clamp_cosine(double c) {
    if (c > kCosClampBound) return kCosClampBound;
    if (c < -kCosClampBound) return -kCosClampBound;
    return c;
}

}  // namespace rpcl
