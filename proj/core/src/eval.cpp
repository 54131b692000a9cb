#include "rpcl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "rpcl/numeric.hpp"

namespace rpcl {

namespace {

// RPCL_METRIC_THREADS caps the per-probe parallelism; default 1.
std::size_t metric_threads() {
    const char* env = std::getenv("RPCL_METRIC_THREADS");
    if (!env) return 1;
    long v = std::strtol(env, nullptr, 10);
    if (v < 1) return 1;
    return static_cast<std::size_t>(v);
}

double cosine(std::span<const double> a, std::span<const double> b) {
    double na = row_norm(a), nb = row_norm(b);
    if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine: zero vector");
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

double degrees(double cos_value) {
    return std::acos(std::clamp(cos_value, -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

}  // namespace

VerificationResult verification_accuracy(const Matrix& embeddings,
                                         const PairProtocol& protocol) {
    if (protocol.pairs.empty())
        throw std::invalid_argument("verification_accuracy: empty protocol");
    VerificationResult out;
    std::vector<std::pair<double, bool>> scored;
    for (const Pair& p : protocol.pairs) {
        if (p.a >= embeddings.rows() || p.b >= embeddings.rows())
            throw std::invalid_argument("verification_accuracy: pair index out of range");
        double s = cosine(embeddings.row(p.a), embeddings.row(p.b));
        scored.push_back({s, p.same});
        (p.same ? out.pos_scores : out.neg_scores).push_back(s);
    }
    std::sort(scored.begin(), scored.end());

    // Candidate thresholds: below everything, the midpoints of adjacent
    // distinct scores, and above everything. Predict "same" for score > t.
    std::vector<double> candidates{scored.front().first - 1.0};
    for (std::size_t i = 1; i < scored.size(); ++i)
        if (scored[i].first > scored[i - 1].first)
            candidates.push_back(0.5 * (scored[i - 1].first + scored[i].first));
    candidates.push_back(scored.back().first + 1.0);

    out.accuracy = -1.0;
    for (double t : candidates) {
        std::size_t correct = 0;
        for (const auto& [s, same] : scored) correct += (s > t) == same;
        double acc = static_cast<double>(correct) / static_cast<double>(scored.size());
        if (acc > out.accuracy) {
            out.accuracy = acc;
            out.threshold = t;
        }
    }
    return out;
}

Curve roc_curve(const std::vector<double>& pos_scores, const std::vector<double>& neg_scores) {
    if (pos_scores.empty() || neg_scores.empty())
        throw std::invalid_argument("roc_curve: empty score group");
    std::vector<double> thresholds;
    thresholds.insert(thresholds.end(), pos_scores.begin(), pos_scores.end());
    thresholds.insert(thresholds.end(), neg_scores.begin(), neg_scores.end());
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    Curve c;
    c.points.push_back({0.0, 0.0});
    for (double t : thresholds) {
        std::size_t tp = 0, fp = 0;
        for (double s : pos_scores) tp += s >= t;
        for (double s : neg_scores) fp += s >= t;
        std::pair<double, double> pt{static_cast<double>(fp) / neg_scores.size(),
                                     static_cast<double>(tp) / pos_scores.size()};
        if (pt != c.points.back()) c.points.push_back(pt);
    }
    if (c.points.back() != std::pair<double, double>{1.0, 1.0}) c.points.push_back({1.0, 1.0});
    return c;
}

std::vector<double> cmc_curve(const Matrix& gallery, const std::vector<std::size_t>& gallery_ids,
                              const Matrix& probe, const std::vector<std::size_t>& probe_ids,
                              std::size_t max_k) {
    if (gallery.rows() == 0 || probe.rows() == 0)
        throw std::invalid_argument("cmc_curve: empty gallery or probe");
    max_k = std::min(max_k, gallery.rows());

    auto probe_rank = [&](std::size_t p) {
        std::size_t true_g = gallery.rows();
        for (std::size_t g = 0; g < gallery.rows(); ++g)
            if (gallery_ids[g] == probe_ids[p]) {
                true_g = g;
                break;
            }
        if (true_g == gallery.rows())
            throw std::invalid_argument("cmc_curve: probe identity not in gallery");
        double s_true = cosine(probe.row(p), gallery.row(true_g));
        std::size_t rank = 1;
        for (std::size_t g = 0; g < gallery.rows(); ++g) {
            if (g == true_g) continue;
            double s = cosine(probe.row(p), gallery.row(g));
            if (s > s_true || (s == s_true && g < true_g)) ++rank;
        }
        return rank;
    };

    std::vector<std::size_t> rank_hits(gallery.rows(), 0);
    std::size_t nthreads = std::min(metric_threads(), probe.rows());
    if (nthreads <= 1) {
        for (std::size_t p = 0; p < probe.rows(); ++p) ++rank_hits[probe_rank(p) - 1];
    } else {
        // Per-thread partial counts, merged in thread order; integer sums
        // keep the result identical to the sequential loop.
        std::vector<std::vector<std::size_t>> partial(nthreads,
                                                      std::vector<std::size_t>(gallery.rows(), 0));
        std::vector<std::thread> workers;
        std::exception_ptr error;
        std::mutex error_mutex;
        for (std::size_t t = 0; t < nthreads; ++t)
            workers.emplace_back([&, t] {
                try {
                    for (std::size_t p = t; p < probe.rows(); p += nthreads)
                        ++partial[t][probe_rank(p) - 1];
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            });
        for (auto& w : workers) w.join();
        if (error) std::rethrow_exception(error);
        for (std::size_t t = 0; t < nthreads; ++t)
            for (std::size_t r = 0; r < gallery.rows(); ++r) rank_hits[r] += partial[t][r];
    }
    std::vector<double> rates(max_k);
    std::size_t cum = 0;
    for (std::size_t k = 0; k < max_k; ++k) {
        cum += rank_hits[k];
        rates[k] = static_cast<double>(cum) / static_cast<double>(probe.rows());
    }
    return rates;
}

double fisher_criterion(const std::vector<double>& pos_scores,
                        const std::vector<double>& neg_scores) {
    if (pos_scores.size() < 2 || neg_scores.size() < 2)
        throw std::invalid_argument("fisher_criterion: each group needs >= 2 values");
    auto mean_var = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - m) * (x - m);
        var /= static_cast<double>(v.size());
        return std::pair{m, var};
    };
    auto [mp, vp] = mean_var(pos_scores);
    auto [mn, vn] = mean_var(neg_scores);
    if (vp + vn == 0.0) throw std::invalid_argument("fisher_criterion: degenerate scatter");
    return (mp - mn) * (mp - mn) / (vp + vn);
}

AngleStats angle_statistics(const Matrix& features, const std::vector<std::size_t>& labels,
                            const Matrix& head_W) {
    const std::size_t n = head_W.rows();
    if (n < 2) throw std::invalid_argument("angle_statistics: need >= 2 classes");
    if (labels.size() != features.rows())
        throw std::invalid_argument("angle_statistics: label count mismatch");
    for (std::size_t j = 0; j < n; ++j)
        if (row_norm(head_W.row(j)) == 0.0)
            throw std::invalid_argument("angle_statistics: zero weight row");

    Matrix unit = normalize_rows(features).matrix;
    Matrix centers(n, features.cols());
    std::vector<std::size_t> counts(n, 0);
    for (std::size_t i = 0; i < unit.rows(); ++i) {
        std::size_t y = labels[i];
        if (y >= n) throw std::invalid_argument("angle_statistics: label out of range");
        ++counts[y];
        for (std::size_t a = 0; a < unit.cols(); ++a) centers(y, a) += unit(i, a);
    }
    for (std::size_t j = 0; j < n; ++j)
        if (counts[j] == 0)
            throw std::invalid_argument("angle_statistics: empty class " + std::to_string(j));
    centers = normalize_rows(centers).matrix;

    AngleStats st;
    for (std::size_t i = 0; i < unit.rows(); ++i)
        st.intra += degrees(cosine(unit.row(i), centers.row(labels[i])));
    st.intra /= static_cast<double>(unit.rows());

    for (std::size_t j = 0; j < n; ++j) {
        double min_cc = 180.0, min_ww = 180.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (k == j) continue;
            min_cc = std::min(min_cc, degrees(cosine(centers.row(j), centers.row(k))));
            min_ww = std::min(min_ww, degrees(cosine(head_W.row(j), head_W.row(k))));
        }
        st.inter += min_cc;
        st.ww += min_ww;
        st.wc += degrees(cosine(head_W.row(j), centers.row(j)));
    }
    st.inter /= static_cast<double>(n);
    st.ww /= static_cast<double>(n);
    st.wc /= static_cast<double>(n);
    return st;
}

}  // namespace rpcl
