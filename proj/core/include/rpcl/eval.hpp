#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rpcl/datagen.hpp"
#include "rpcl/matrix.hpp"

namespace rpcl {

struct Curve {
    std::vector<std::pair<double, double>> points;
};

struct EvalReport {
    std::map<std::string, double> scalars;
    std::map<std::string, Curve> curves;
};

struct VerificationResult {
    double accuracy = 0.0;
    double threshold = 0.0;
    std::vector<double> pos_scores;
    std::vector<double> neg_scores;
};

// Cosine pair scores; accuracy maximized over sorted-score midpoints,
// ties resolved toward the lowest threshold.
VerificationResult verification_accuracy(const Matrix& embeddings, const PairProtocol& protocol);

// One (FPR, TPR) point per distinct threshold, endpoints (0,0) and (1,1).
Curve roc_curve(const std::vector<double>& pos_scores, const std::vector<double>& neg_scores);

// rate[k-1] = fraction of probes whose identity sits in the top-k gallery
// matches by cosine similarity; ties break toward the lower gallery index.
std::vector<double> cmc_curve(const Matrix& gallery, const std::vector<std::size_t>& gallery_ids,
                              const Matrix& probe, const std::vector<std::size_t>& probe_ids,
                              std::size_t max_k);

// (mean_pos - mean_neg)^2 / (var_pos + var_neg), population variances.
double fisher_criterion(const std::vector<double>& pos_scores,
                        const std::vector<double>& neg_scores);

// Angle statistics in degrees. Class centers are the renormalized means
// of the normalized class features.
//   intra  mean angle(feature, its class center)
//   inter  mean over classes of the minimum center-to-center angle
//   ww     mean over classes of the minimum angle between head weight rows
//   wc     mean angle(W_j, center_j)
struct AngleStats {
    double intra = 0.0;
    double inter = 0.0;
    double ww = 0.0;
    double wc = 0.0;
};

AngleStats angle_statistics(const Matrix& features, const std::vector<std::size_t>& labels,
                            const Matrix& head_W);

}  // namespace rpcl
