#include "rpcl/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "rpcl/numeric.hpp"

namespace rpcl {

namespace {

std::vector<double> random_unit_vector(std::size_t dim, Rng& rng) {
    std::vector<double> v(dim);
    double n = 0.0;
    do {
        n = 0.0;
        for (auto& x : v) {
            x = rng.normal();
            n += x * x;
        }
    } while (n == 0.0);
    n = std::sqrt(n);
    for (auto& x : v) x /= n;
    return v;
}

}  // namespace

LabeledSet generate_clusters(const ClusterGenConfig& cfg, Rng& rng) {
    if (cfg.n_classes < 2) throw std::invalid_argument("generate_clusters: need >= 2 classes");
    if (cfg.per_class < 1) throw std::invalid_argument("generate_clusters: need per_class >= 1");
    if (cfg.spread <= 0.0) throw std::invalid_argument("generate_clusters: spread must be > 0");

    const double min_cos = std::cos(cfg.min_angle);
    constexpr int kMaxAttempts = 2000;
    std::vector<std::vector<double>> means;
    for (int attempt = 0;; ++attempt) {
        if (attempt >= kMaxAttempts)
            throw std::runtime_error(
                "generate_clusters: could not place class means with the requested minimum "
                "angle; try fewer classes, a higher dimension, or a smaller min_angle");
        means.clear();
        bool ok = true;
        for (std::size_t c = 0; c < cfg.n_classes && ok; ++c) {
            auto v = random_unit_vector(cfg.dim, rng);
            for (const auto& u : means)
                if (dot(v, u) > min_cos) {
                    ok = false;
                    break;
                }
            if (ok) means.push_back(std::move(v));
        }
        if (ok) break;
    }

    LabeledSet out;
    out.class_count = cfg.n_classes;
    out.normalized = cfg.normalize;
    out.features = Matrix(cfg.n_classes * cfg.per_class, cfg.dim);
    out.labels.resize(cfg.n_classes * cfg.per_class);
    std::size_t row = 0;
    for (std::size_t c = 0; c < cfg.n_classes; ++c) {
        for (std::size_t s = 0; s < cfg.per_class; ++s, ++row) {
            out.labels[row] = c;
            for (std::size_t a = 0; a < cfg.dim; ++a)
                out.features(row, a) = means[c][a] + cfg.spread * rng.normal();
            if (cfg.normalize) {
                double n = row_norm(out.features.row(row));
                if (n > 0.0)
                    for (std::size_t a = 0; a < cfg.dim; ++a) out.features(row, a) /= n;
            }
        }
    }
    return out;
}

LabeledSet degrade_lr(const LabeledSet& data, double noise_sigma, Rng& rng) {
    if (noise_sigma < 0.0) throw std::invalid_argument("degrade_lr: noise_sigma must be >= 0");
    LabeledSet out = data;
    if (noise_sigma == 0.0) return out;
    for (std::size_t i = 0; i < out.features.rows(); ++i) {
        for (std::size_t a = 0; a < out.features.cols(); ++a)
            out.features(i, a) += noise_sigma * rng.normal();
        if (data.normalized) {
            double n = row_norm(out.features.row(i));
            if (n > 0.0)
                for (std::size_t a = 0; a < out.features.cols(); ++a) out.features(i, a) /= n;
        }
    }
    return out;
}

PairProtocol make_pairs(const LabeledSet& data, std::size_t n_pos, std::size_t n_neg, Rng& rng) {
    const std::size_t N = data.features.rows();
    std::vector<std::vector<std::size_t>> by_class(data.class_count);
    for (std::size_t i = 0; i < N; ++i) by_class[data.labels[i]].push_back(i);

    std::size_t pos_avail = 0;
    for (const auto& c : by_class) pos_avail += c.size() * (c.size() - 1) / 2;
    std::size_t neg_avail = N * (N - 1) / 2 - pos_avail;
    if (n_pos > pos_avail)
        throw std::invalid_argument("make_pairs: not enough same-class pairs available");
    if (n_neg > neg_avail)
        throw std::invalid_argument("make_pairs: not enough cross-class pairs available");

    PairProtocol out;
    std::set<std::pair<std::size_t, std::size_t>> used;
    auto draw = [&](bool same, std::size_t count) {
        std::size_t placed = 0;
        while (placed < count) {
            std::size_t a, b;
            if (same) {
                const auto& cls = by_class[rng.below(data.class_count)];
                if (cls.size() < 2) continue;
                a = cls[rng.below(cls.size())];
                b = cls[rng.below(cls.size())];
            } else {
                a = rng.below(N);
                b = rng.below(N);
                if (data.labels[a] == data.labels[b]) continue;
            }
            if (a == b) continue;
            if (a > b) std::swap(a, b);
            if (!used.insert({a, b}).second) continue;
            out.pairs.push_back({a, b, same});
            ++placed;
        }
    };
    draw(true, n_pos);
    draw(false, n_neg);
    return out;
}

GalleryProbe make_gallery_probe(const LabeledSet& hr, const LabeledSet& lr) {
    if (hr.class_count != lr.class_count)
        throw std::invalid_argument("make_gallery_probe: identity spaces differ");
    GalleryProbe out;
    std::vector<bool> seen(hr.class_count, false);
    for (std::size_t i = 0; i < hr.features.rows(); ++i) {
        std::size_t id = hr.labels[i];
        if (seen[id]) continue;  // first HR sample per identity
        seen[id] = true;
        out.gallery_indices.push_back(i);
        out.gallery_ids.push_back(id);
    }
    std::vector<bool> lr_present(lr.class_count, false);
    for (std::size_t i = 0; i < lr.features.rows(); ++i) {
        lr_present[lr.labels[i]] = true;
        out.probe_indices.push_back(i);
        out.probe_ids.push_back(lr.labels[i]);
    }
    for (std::size_t c = 0; c < hr.class_count; ++c) {
        if (!seen[c] && lr_present[c])
            throw std::invalid_argument("make_gallery_probe: identity " + std::to_string(c) +
                                        " missing from gallery");
        if (!lr_present[c] && seen[c])
            throw std::invalid_argument("make_gallery_probe: identity " + std::to_string(c) +
                                        " missing from probe set");
    }
    return out;
}

void save_set(const LabeledSet& data, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_set: cannot open " + path);
    f << data.features.cols() << ' ' << data.class_count << ' ' << data.features.rows();
    f << ' ' << (data.normalized ? 1 : 0) << '\n';
    char buf[40];
    for (std::size_t i = 0; i < data.features.rows(); ++i) {
        f << data.labels[i];
        for (std::size_t a = 0; a < data.features.cols(); ++a) {
            std::snprintf(buf, sizeof(buf), " %.17g", data.features(i, a));
            f << buf;
        }
        f << '\n';
    }
    if (!f) throw std::runtime_error("save_set: write failure on " + path);
}

LabeledSet load_set(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_set: cannot open " + path);
    std::string line;
    if (!std::getline(f, line) || line.empty())
        throw std::runtime_error("load_set: no header in " + path);
    std::istringstream hdr(line);
    std::size_t dim, classes, rows;
    int normalized = 0;
    if (!(hdr >> dim >> classes >> rows >> normalized))
        throw std::runtime_error("load_set: malformed header in " + path);

    LabeledSet out;
    out.class_count = classes;
    out.normalized = normalized != 0;
    out.features = Matrix(rows, dim);
    out.labels.resize(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        if (!std::getline(f, line))
            throw std::runtime_error("load_set: missing row " + std::to_string(i) + " in " + path);
        std::istringstream ls(line);
        if (!(ls >> out.labels[i]))
            throw std::runtime_error("load_set: bad label at row " + std::to_string(i));
        if (out.labels[i] >= classes)
            throw std::runtime_error("load_set: label out of range at row " + std::to_string(i));
        for (std::size_t a = 0; a < dim; ++a)
            if (!(ls >> out.features(i, a)))
                throw std::runtime_error("load_set: dimension mismatch at row " +
                                         std::to_string(i));
        double extra;
        if (ls >> extra)
            throw std::runtime_error("load_set: dimension mismatch at row " + std::to_string(i));
    }
    return out;
}

}  // namespace rpcl
