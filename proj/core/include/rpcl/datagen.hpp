#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rpcl/matrix.hpp"
#include "rpcl/rng.hpp"

namespace rpcl {

struct LabeledSet {
    Matrix features;  // N x dim
    std::vector<std::size_t> labels;
    std::size_t class_count = 0;
    bool normalized = false;  // rows were unit-normalized at generation
};

struct Pair {
    std::size_t a;
    std::size_t b;
    bool same;
};

struct PairProtocol {
    std::vector<Pair> pairs;
};

// Closed-set identification protocol: one gallery entry per identity,
// every probe identity present in the gallery.
struct GalleryProbe {
    std::vector<std::size_t> gallery_indices;  // into the HR set
    std::vector<std::size_t> gallery_ids;
    std::vector<std::size_t> probe_indices;    // into the LR set
    std::vector<std::size_t> probe_ids;
};

struct ClusterGenConfig {
    std::size_t n_classes = 8;
    std::size_t per_class = 500;
    std::size_t dim = 2;
    double spread = 0.05;       // isotropic Gaussian sigma around each mean
    double min_angle = 0.35;    // radians, enforced between class means
    bool normalize = false;     // unit-normalize samples after noise
};

// Class means drawn uniformly on the unit hypersphere with a minimum
// pairwise angle enforced by rejection; samples are mean + Gaussian noise.
LabeledSet generate_clusters(const ClusterGenConfig& cfg, Rng& rng);

// Low-resolution twin: additive feature noise inflating within-class
// variation; renormalizes when the source was normalized.
LabeledSet degrade_lr(const LabeledSet& data, double noise_sigma, Rng& rng);

// n_pos same-class and n_neg cross-class pairs, no repeated pair tuples.
PairProtocol make_pairs(const LabeledSet& data, std::size_t n_pos, std::size_t n_neg, Rng& rng);

GalleryProbe make_gallery_probe(const LabeledSet& hr, const LabeledSet& lr);

// Text format: header "dim n_classes n_rows", then per row
// "label v1 ... vd" at 17 significant digits. Bit-faithful round trip.
void save_set(const LabeledSet& data, const std::string& path);
LabeledSet load_set(const std::string& path);

}  // namespace rpcl
