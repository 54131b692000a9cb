#include "rpcl/margin_loss.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "rpcl/numeric.hpp"

namespace rpcl {

Variant variant_from_string(const std::string& name) {
    if (name == "softmax") return Variant::softmax;
    if (name == "cos") return Variant::cos;
    if (name == "arc") return Variant::arc;
    if (name == "rpcl_cos") return Variant::rpcl_cos;
    if (name == "rpcl_arc") return Variant::rpcl_arc;
    throw std::invalid_argument("unknown loss variant: " + name);
}

std::string to_string(Variant v) {
    switch (v) {
        case Variant::softmax: return "softmax";
        case Variant::cos: return "cos";
        case Variant::arc: return "arc";
        case Variant::rpcl_cos: return "rpcl_cos";
        case Variant::rpcl_arc: return "rpcl_arc";
    }
    return "?";
}

double MarginConfig::default_margin(Variant v) {
    switch (v) {
        case Variant::arc:
        case Variant::rpcl_arc: return 0.5;   // radians
        case Variant::cos:
        case Variant::rpcl_cos: return 0.35;  // cosine units
        default: return 0.0;
    }
}

std::string MarginConfig::validate() const {
    if (variant == Variant::softmax) return {};
    if (s <= 0.0) throw std::invalid_argument("MarginConfig: feature scale s must be > 0");
    if (m < 0.0) throw std::invalid_argument("MarginConfig: margin m must be >= 0");
    if (gamma < 0.0) throw std::invalid_argument("MarginConfig: gamma must be >= 0");
    if (uses_rival() && gamma > 0.0 && m > 0.0) {
        if (gamma > m / 2.0)
            throw std::invalid_argument(
                "MarginConfig: rival margin gamma must satisfy gamma << m (at most m/2)");
        if (gamma > m / 10.0)
            return "warning: gamma = " + std::to_string(gamma) + " is large relative to m = " +
                   std::to_string(m) + "; the rival margin is meant to be small (gamma << m)";
    }
    return {};
}

CosineLogits raw_cosine_logits(const Matrix& features, const ClassifierHead& head,
                               const MarginConfig& cfg) {
    if (features.cols() != head.W.cols())
        throw std::invalid_argument("raw_cosine_logits: feature/weight dimension mismatch");
    CosineLogits out;
    out.cos_thetas = cosine_matrix(features, head.W);
    out.logits = out.cos_thetas;
    for (double& v : out.logits.data()) v *= cfg.s;
    return out;
}

std::size_t select_rival(std::span<const double> raw_logits, std::size_t target) {
    if (raw_logits.size() < 2)
        throw std::invalid_argument("select_rival: need at least 2 classes");
    std::size_t best = target == 0 ? 1 : 0;
    for (std::size_t j = 0; j < raw_logits.size(); ++j) {
        if (j == target) continue;
        if (raw_logits[j] > raw_logits[best]) best = j;
    }
    return best;
}

namespace {

// Target-side margin logit and its derivative w.r.t. the raw cosine.
// Arc uses the monotone continuation s*(cos - m*sin m) past theta+m = pi.
void target_logit(const MarginConfig& cfg, double t, double& beta, double& dbeta_dt) {
    if (cfg.variant == Variant::cos || cfg.variant == Variant::rpcl_cos) {
        beta = cfg.s * (t - cfg.m);
        dbeta_dt = cfg.s;
        return;
    }
    bool clamped = t > kCosClampBound || t < -kCosClampBound;
    double tc = clamp_cosine(t);
    double theta = std::acos(tc);
    if (theta + cfg.m < std::numbers::pi) {
        beta = cfg.s * std::cos(theta + cfg.m);
        dbeta_dt = clamped ? 0.0 : cfg.s * std::sin(theta + cfg.m) / std::sin(theta);
    } else {
        beta = cfg.s * (tc - cfg.m * std::sin(cfg.m));
        dbeta_dt = clamped ? 0.0 : cfg.s;
    }
}

// Rival-side reverse margin g(., ., -gamma): loosens the logit upward.
void rival_logit(const MarginConfig& cfg, double t, double& beta, double& dbeta_dt) {
    if (cfg.variant == Variant::rpcl_cos) {
        beta = cfg.s * (t + cfg.gamma);
        dbeta_dt = cfg.s;
        return;
    }
    bool clamped = t > kCosClampBound || t < -kCosClampBound;
    double tc = clamp_cosine(t);
    double theta = std::acos(tc);
    double a = theta - cfg.gamma;
    if (a > 0.0) {
        beta = cfg.s * std::cos(a);
        dbeta_dt = clamped ? 0.0 : cfg.s * std::sin(a) / std::sin(theta);
    } else {
        beta = cfg.s;  // angle clamped at zero
        dbeta_dt = 0.0;
    }
}

}  // namespace

AdjustedLogits apply_rpcl_margins(const Matrix& cos_thetas,
                                  const std::vector<std::size_t>& labels,
                                  const MarginConfig& cfg) {
    if (cfg.variant == Variant::softmax)
        throw std::invalid_argument("apply_rpcl_margins: margins undefined for plain softmax");
    if (labels.size() != cos_thetas.rows())
        throw std::invalid_argument("apply_rpcl_margins: label count mismatch");
    const std::size_t n = cos_thetas.cols();
    AdjustedLogits out;
    out.logits = cos_thetas;
    for (double& v : out.logits.data()) v *= cfg.s;
    out.rival_indices.resize(cos_thetas.rows());
    for (std::size_t i = 0; i < cos_thetas.rows(); ++i) {
        std::size_t y = labels[i];
        if (y >= n) throw std::invalid_argument("apply_rpcl_margins: label out of range");
        std::size_t r = select_rival(out.logits.row(i), y);
        out.rival_indices[i] = r;
        double beta, d;
        target_logit(cfg, cos_thetas(i, y), beta, d);
        out.logits(i, y) = beta;
        if (cfg.uses_rival() && cfg.gamma > 0.0) {
            rival_logit(cfg, cos_thetas(i, r), beta, d);
            out.logits(i, r) = beta;
        }
    }
    return out;
}

double cross_entropy(const Matrix& adjusted_logits, const std::vector<std::size_t>& labels) {
    if (labels.size() != adjusted_logits.rows())
        throw std::invalid_argument("cross_entropy: label count mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < adjusted_logits.rows(); ++i) {
        if (labels[i] >= adjusted_logits.cols())
            throw std::invalid_argument("cross_entropy: label out of range");
        total += -log_softmax_stable(adjusted_logits.row(i))[labels[i]];
    }
    return total / static_cast<double>(adjusted_logits.rows());
}

LossOutput loss_and_grads(const Matrix& features, const std::vector<std::size_t>& labels,
                          const ClassifierHead& head, const MarginConfig& cfg) {
    if (features.cols() != head.W.cols())
        throw std::invalid_argument("loss_and_grads: feature/weight dimension mismatch");
    if (labels.size() != features.rows())
        throw std::invalid_argument("loss_and_grads: label count mismatch");
    const std::size_t N = features.rows();
    const std::size_t n = head.W.rows();
    const std::size_t d = features.cols();

    std::vector<double> nx(N), nw(n);
    for (std::size_t i = 0; i < N; ++i) {
        nx[i] = row_norm(features.row(i));
        if (nx[i] == 0.0) throw std::invalid_argument("loss_and_grads: zero feature row");
    }
    for (std::size_t j = 0; j < n; ++j) {
        nw[j] = row_norm(head.W.row(j));
        if (nw[j] == 0.0) throw std::invalid_argument("loss_and_grads: zero weight row");
    }

    Matrix cos = cosine_matrix(features, head.W);

    LossOutput out;
    out.adjusted_logits = Matrix(N, n);
    out.grad_features = Matrix(N, d);
    out.grad_W = Matrix(n, d);
    out.rival_indices.resize(N);

    // Per-entry derivative of the adjusted logit w.r.t. the raw cosine.
    Matrix dbeta_dt(N, n, cfg.s);
    for (std::size_t i = 0; i < N; ++i) {
        std::size_t y = labels[i];
        if (y >= n) throw std::invalid_argument("loss_and_grads: label out of range");
        for (std::size_t j = 0; j < n; ++j) out.adjusted_logits(i, j) = cfg.s * cos(i, j);
        std::size_t r = n >= 2 ? select_rival(out.adjusted_logits.row(i), y)
                               : throw std::invalid_argument("loss_and_grads: need >= 2 classes");
        out.rival_indices[i] = r;
        if (cfg.uses_margin()) {
            double beta, dd;
            target_logit(cfg, cos(i, y), beta, dd);
            out.adjusted_logits(i, y) = beta;
            dbeta_dt(i, y) = dd;
            if (cfg.uses_rival() && cfg.gamma > 0.0) {
                rival_logit(cfg, cos(i, r), beta, dd);
                out.adjusted_logits(i, r) = beta;
                dbeta_dt(i, r) = dd;
            }
        }
    }

    double total = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        auto logp = log_softmax_stable(out.adjusted_logits.row(i));
        std::size_t y = labels[i];
        total += -logp[y];
        // dL/dcos for every class, then chain through the normalization.
        auto u = features.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            double p = std::exp(logp[j]);
            double g_beta = (p - (j == y ? 1.0 : 0.0)) / static_cast<double>(N);
            double g_t = g_beta * dbeta_dt(i, j);
            if (g_t == 0.0) continue;
            auto w = head.W.row(j);
            double c = cos(i, j);
            for (std::size_t a = 0; a < d; ++a) {
                double uhat = u[a] / nx[i];
                double what = w[a] / nw[j];
                out.grad_features(i, a) += g_t * (what - c * uhat) / nx[i];
                out.grad_W(j, a) += g_t * (uhat - c * what) / nw[j];
            }
        }
        if (!std::isfinite(total))
            throw std::runtime_error("loss_and_grads: non-finite loss at cross-entropy stage");
    }
    out.loss = total / static_cast<double>(N);
    for (double v : out.grad_features.data())
        if (!std::isfinite(v))
            throw std::runtime_error("loss_and_grads: non-finite value at feature-gradient stage");
    return out;
}

}  // namespace rpcl
