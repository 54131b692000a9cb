#include "rpcl/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rpcl {

double row_norm(std::span<const double> row) {
    double s = 0.0;
    for (double v : row) s += v * v;
    return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

NormalizedRows normalize_rows(const Matrix& m, double epsilon) {
    if (m.empty()) throw std::invalid_argument("normalize_rows: empty input");
    if (epsilon <= 0.0) throw std::invalid_argument("normalize_rows: epsilon must be > 0");
    NormalizedRows out{m, std::vector<bool>(m.rows(), false)};
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double n = row_norm(m.row(i));
        if (n < epsilon) {
            out.degenerate[i] = true;
            continue;
        }
        for (std::size_t j = 0; j < m.cols(); ++j) out.matrix(i, j) = m(i, j) / n;
    }
    return out;
}

std::vector<double> log_softmax_stable(std::span<const double> logits) {
    if (logits.empty()) throw std::invalid_argument("log_softmax_stable: empty input");
    double mx = logits[0];
    for (double v : logits) {
        if (!std::isfinite(v)) throw std::invalid_argument("log_softmax_stable: non-finite logit");
        mx = std::max(mx, v);
    }
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - mx);
    double lse = std::log(sum);
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - mx - lse;
    return out;
}

Matrix cosine_matrix(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols())
        throw std::invalid_argument("cosine_matrix: column mismatch");
    std::vector<double> na(a.rows()), nb(b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        na[i] = row_norm(a.row(i));
        if (na[i] == 0.0)
            throw std::invalid_argument("cosine_matrix: zero row " + std::to_string(i) + " in first argument");
    }
    for (std::size_t j = 0; j < b.rows(); ++j) {
        nb[j] = row_norm(b.row(j));
        if (nb[j] == 0.0)
            throw std::invalid_argument("cosine_matrix: zero row " + std::to_string(j) + " in second argument");
    }
    Matrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.rows(); ++j)
            out(i, j) = std::clamp(dot(a.row(i), b.row(j)) / (na[i] * nb[j]), -1.0, 1.0);
    return out;
}

}  // namespace rpcl
