#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rpcl/matrix.hpp"

namespace rpcl {

enum class Variant { softmax, cos, arc, rpcl_cos, rpcl_arc };

Variant variant_from_string(const std::string& name);
std::string to_string(Variant v);

// Loss family selector plus all margin hyperparameters.
//   s     feature scale (norm given to normalized embeddings)
//   m     target margin (cosine units for cos, radians for arc)
//   gamma reverse margin applied to the rival logit, gamma << m
struct MarginConfig {
    Variant variant = Variant::rpcl_cos;
    double s = 30.0;
    double m = 0.35;
    double gamma = 0.05;

    bool uses_rival() const { return variant == Variant::rpcl_cos || variant == Variant::rpcl_arc; }
    bool uses_margin() const { return variant != Variant::softmax; }

    // Throws on violated constraints; returns a warning string when
    // gamma is large relative to m (above m/10), empty otherwise.
    std::string validate() const;

    static double default_margin(Variant v);
};

// Final fully-connected classifier. Rows of W are identity centers and
// are unit-normalized before any logit computation; the bias is pinned
// to zero and kept only so the logit formula reads as W'x + b.
struct ClassifierHead {
    Matrix W;  // n_classes x d
    std::vector<double> b;  // always zero

    explicit ClassifierHead(Matrix weights)
        : W(std::move(weights)), b(W.rows(), 0.0) {}
    ClassifierHead() = default;
};

struct LossOutput {
    double loss = 0.0;
    Matrix adjusted_logits;          // N x n, post-margin
    Matrix grad_features;            // N x d, d(mean loss)/d(features)
    Matrix grad_W;                   // n x d, d(mean loss)/d(W)
    std::vector<std::size_t> rival_indices;  // per sample, never the label
};

struct CosineLogits {
    Matrix cos_thetas;  // N x n, clamped to [-1, 1]
    Matrix logits;      // s * cos_thetas
};

CosineLogits raw_cosine_logits(const Matrix& features, const ClassifierHead& head,
                               const MarginConfig& cfg);

// Highest raw logit among non-target classes; ties to the lowest index.
std::size_t select_rival(std::span<const double> raw_logits, std::size_t target);

struct AdjustedLogits {
    Matrix logits;
    std::vector<std::size_t> rival_indices;
};

// Three-case margin rule: target logit gets g(., ., m), the rival gets
// the reverse margin g(., ., -gamma) (rpcl variants only), every other
// logit is the plain scaled cosine.
AdjustedLogits apply_rpcl_margins(const Matrix& cos_thetas,
                                  const std::vector<std::size_t>& labels,
                                  const MarginConfig& cfg);

// Mean negative log-softmax of the target entries.
double cross_entropy(const Matrix& adjusted_logits, const std::vector<std::size_t>& labels);

// Forward plus exact analytic gradients of the mean loss through row
// normalization, scaling, the margin functions and softmax. The rival
// index is held constant under differentiation.
LossOutput loss_and_grads(const Matrix& features, const std::vector<std::size_t>& labels,
                          const ClassifierHead& head, const MarginConfig& cfg);

}  // namespace rpcl
