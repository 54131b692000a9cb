// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion is self-contained and uses only public headers;
// reference values are recomputed by independent brute-force code here.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rpcl/center_loss.hpp"
#include "rpcl/cluster.hpp"
#include "rpcl/datagen.hpp"
#include "rpcl/eval.hpp"
#include "rpcl/margin_loss.hpp"
#include "rpcl/net.hpp"
#include "rpcl/numeric.hpp"
#include "rpcl/rng.hpp"

#include "fd_oracle.hpp"

namespace fs = std::filesystem;
using namespace rpcl;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Instance {
    Matrix features;
    ClassifierHead head;
    std::vector<std::size_t> labels;
};

Instance random_instance(Rng& rng, std::size_t n_samples, std::size_t n_classes,
                         std::size_t dim) {
    Instance inst;
    inst.features = Matrix(n_samples, dim);
    for (;;) {
        for (double& v : inst.features.data()) v = rng.uniform(-1.0, 1.0);
        bool ok = true;
        for (std::size_t i = 0; i < n_samples; ++i)
            ok &= row_norm(inst.features.row(i)) > 0.1;
        if (ok) break;
    }
    Matrix w(n_classes, dim);
    for (;;) {
        for (double& v : w.data()) v = rng.uniform(-1.0, 1.0);
        bool ok = true;
        for (std::size_t j = 0; j < n_classes; ++j) ok &= row_norm(w.row(j)) > 0.1;
        if (ok) break;
    }
    inst.head = ClassifierHead(normalize_rows(w).matrix);
    inst.labels.resize(n_samples);
    for (auto& l : inst.labels) l = rng.below(n_classes);
    return inst;
}

double rel_err(double a, double b) {
    return std::abs(a - b) / (std::abs(b) + 1e-300);
}

// --- criterion 1: margin degeneracies -------------------------------------

bool criterion_reductions() {
    auto t0 = std::chrono::steady_clock::now();
    Rng rng(101);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t n = 2 + rng.below(5);
        std::size_t c = 3 + rng.below(4);
        std::size_t d = 3 + rng.below(6);
        Instance inst = random_instance(rng, n, c, d);
        double s = rng.uniform(5.0, 40.0);
        double m = rng.uniform(0.1, 0.6);

        auto loss = [&](Variant v, double mm, double gg) {
            MarginConfig cfg{.variant = v, .s = s, .m = mm, .gamma = gg};
            return loss_and_grads(inst.features, inst.labels, inst.head, cfg).loss;
        };

        worst = std::max(worst, rel_err(loss(Variant::rpcl_cos, m, 0.0),
                                        loss(Variant::cos, m, 0.0)));
        worst = std::max(worst, rel_err(loss(Variant::rpcl_arc, m, 0.0),
                                        loss(Variant::arc, m, 0.0)));
        worst = std::max(worst, rel_err(loss(Variant::cos, 0.0, 0.0),
                                        loss(Variant::softmax, 0.0, 0.0)));
        worst = std::max(worst, rel_err(loss(Variant::arc, 0.0, 0.0),
                                        loss(Variant::softmax, 0.0, 0.0)));
    }
    double elapsed = seconds_since(t0);
    std::printf("%s criterion 1: margin reductions (1000 instances, max rel err %.2e, %.1fs)\n",
                worst <= 1e-10 && elapsed < 10.0 ? "PASS" : "FAIL", worst, elapsed);
    return worst <= 1e-10 && elapsed < 10.0;
}

// --- criterion 2: two-class rival margin folds into m + gamma -------------

bool criterion_two_class() {
    auto t0 = std::chrono::steady_clock::now();
    Rng rng(202);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t n = 2 + rng.below(6);
        std::size_t d = 2 + rng.below(6);
        Instance inst = random_instance(rng, n, 2, d);
        double s = rng.uniform(5.0, 40.0);
        double m = rng.uniform(0.1, 0.5);
        double g = rng.uniform(0.0, m / 2.0);
        MarginConfig a{.variant = Variant::rpcl_cos, .s = s, .m = m, .gamma = g};
        MarginConfig b{.variant = Variant::cos, .s = s, .m = m + g, .gamma = 0.0};
        double la = loss_and_grads(inst.features, inst.labels, inst.head, a).loss;
        double lb = loss_and_grads(inst.features, inst.labels, inst.head, b).loss;
        worst = std::max(worst, rel_err(la, lb));
    }
    double elapsed = seconds_since(t0);
    std::printf("%s criterion 2: two-class m+gamma equivalence (1000 instances, max rel err %.2e, %.1fs)\n",
                worst <= 1e-10 && elapsed < 5.0 ? "PASS" : "FAIL", worst, elapsed);
    return worst <= 1e-10 && elapsed < 5.0;
}

// --- criterion 3: analytic gradients vs central finite differences --------

bool criterion_gradients() {
    auto t0 = std::chrono::steady_clock::now();
    Rng rng(303);
    double worst = 0.0;
    const Variant variants[] = {Variant::softmax, Variant::cos, Variant::arc,
                                Variant::rpcl_cos, Variant::rpcl_arc};
    for (Variant v : variants) {
        int checked = 0;
        while (checked < 100) {
            std::size_t n = 2 + rng.below(3);
            std::size_t c = 3 + rng.below(3);
            std::size_t d = 3 + rng.below(4);
            Instance inst = random_instance(rng, n, c, d);
            MarginConfig cfg{.variant = v, .s = rng.uniform(5.0, 30.0),
                             .m = rng.uniform(0.15, 0.5), .gamma = rng.uniform(0.01, 0.06)};
            if (testing::near_nondifferentiable(inst.features, inst.labels, inst.head, cfg))
                continue;
            LossOutput lo = loss_and_grads(inst.features, inst.labels, inst.head, cfg);
            testing::FdGrads fd =
                testing::finite_difference(inst.features, inst.labels, inst.head, cfg);
            worst = std::max(worst, testing::max_relative_error(lo.grad_features, fd.features));
            worst = std::max(worst, testing::max_relative_error(lo.grad_W, fd.W));
            ++checked;
        }
    }
    double elapsed = seconds_since(t0);
    std::printf("%s criterion 3: gradient exactness (5 variants x 100, max rel err %.2e, %.1fs)\n",
                worst <= 1e-5 && elapsed < 60.0 ? "PASS" : "FAIL", worst, elapsed);
    return worst <= 1e-5 && elapsed < 60.0;
}

// --- criterion 4: clustering model selection ------------------------------

bool criterion_cluster_selection() {
    auto t0 = std::chrono::steady_clock::now();
    const std::size_t d = 2;
    const double sigma = 0.1;
    const double tol = 0.2 * sigma * std::sqrt(static_cast<double>(d));
    const Matrix true_means = Matrix::from_rows({{0.0, 0.0}, {3.0, 0.0}, {0.0, 3.0}});

    int good = 0;
    bool control_keeps_surplus = false;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng data_rng(400 + seed);
        Matrix data(600, d);
        for (std::size_t i = 0; i < 600; ++i) {
            std::size_t c = i % 3;
            for (std::size_t a = 0; a < d; ++a)
                data(i, a) = true_means(c, a) + sigma * data_rng.normal();
        }

        RpclParams params;
        params.eta = 0.1;
        params.gamma = 0.1;
        params.epochs = 200;
        params.expel_radius_factor = 1.0;
        params.anneal = true;
        Rng fit_rng(500 + seed);
        CenterSet cs = fit_rpcl(data, 5, params, fit_rng);

        if (cs.active_count() == 3) {
            std::vector<std::size_t> act;
            for (std::size_t k = 0; k < cs.active.size(); ++k)
                if (cs.active[k]) act.push_back(k);
            std::vector<bool> used(3, false);
            bool all_matched = true;
            for (std::size_t k : act) {
                double best = 1e300;
                std::size_t best_m = 0;
                for (std::size_t mi = 0; mi < 3; ++mi) {
                    if (used[mi]) continue;
                    double dist =
                        std::sqrt(squared_distance(cs.centers.row(k), true_means.row(mi)));
                    if (dist < best) {
                        best = dist;
                        best_m = mi;
                    }
                }
                used[best_m] = true;
                all_matched &= best <= tol;
            }
            good += all_matched;
        }

        RpclParams control = params;
        control.gamma = 0.0;
        Rng ctrl_rng(500 + seed);
        CenterSet ctrl = fit_rpcl(data, 5, control, ctrl_rng);
        control_keeps_surplus |= ctrl.active_count() > 3;
    }
    double elapsed = seconds_since(t0);
    bool ok = good >= 9 && control_keeps_surplus && elapsed < 30.0;
    std::printf("%s criterion 4: cluster model selection (%d/10 seeds exact, control surplus %s, %.1fs)\n",
                ok ? "PASS" : "FAIL", good, control_keeps_surplus ? "yes" : "no", elapsed);
    return ok;
}

// --- criterion 5: rival margins tighten classes on degraded data ----------

struct TrialMetrics {
    double intra = 0.0;
    double fisher = 0.0;
};

TrialMetrics run_variant_trial(const LabeledSet& train, const LabeledSet& eval_set,
                               const PairProtocol& protocol, Variant v, double m,
                               double gamma, std::uint64_t seed) {
    Model model = init_model({train.features.cols(), 16, 2}, train.class_count,
                             Activation::relu, seed);
    MarginConfig lcfg{.variant = v, .s = 30.0, .m = m, .gamma = gamma};
    TrainConfig tcfg{.epochs = 100, .batch_size = 32, .lr0 = 1e-3,
                     .decay_every = 50, .decay_factor = 10.0, .seed = seed};
    train_embedding(train, model, tcfg, lcfg);

    Matrix emb = forward(model, eval_set.features);
    TrialMetrics out;
    out.intra = angle_statistics(emb, eval_set.labels, model.head.W).intra;
    VerificationResult vr = verification_accuracy(emb, protocol);
    out.fisher = fisher_criterion(vr.pos_scores, vr.neg_scores);
    return out;
}

bool criterion_directional() {
    auto t0 = std::chrono::steady_clock::now();
    int cos_wins = 0, arc_wins = 0;
    const int n_seeds = 3;
    for (std::uint64_t seed = 0; seed < n_seeds; ++seed) {
        Rng gen_rng(600 + seed);
        LabeledSet hr = generate_clusters({.n_classes = 8, .per_class = 100, .dim = 8,
                                           .spread = 0.05, .min_angle = 0.35}, gen_rng);
        Rng noise_rng(700 + seed);
        LabeledSet lr = degrade_lr(hr, 0.3, noise_rng);

        // class-major layout: split each class half into train, half held out
        LabeledSet train, eval_set;
        train.class_count = eval_set.class_count = 8;
        std::vector<std::size_t> train_rows, eval_rows;
        for (std::size_t i = 0; i < lr.features.rows(); ++i)
            ((i % 100) < 50 ? train_rows : eval_rows).push_back(i);
        auto take = [&](const std::vector<std::size_t>& rows) {
            LabeledSet s;
            s.class_count = 8;
            s.features = Matrix(rows.size(), lr.features.cols());
            for (std::size_t r = 0; r < rows.size(); ++r) {
                auto src = lr.features.row(rows[r]);
                std::copy(src.begin(), src.end(), s.features.row(r).begin());
                s.labels.push_back(lr.labels[rows[r]]);
            }
            return s;
        };
        train = take(train_rows);
        eval_set = take(eval_rows);
        Rng pair_rng(800 + seed);
        PairProtocol protocol = make_pairs(eval_set, 2000, 2000, pair_rng);

        TrialMetrics base_cos =
            run_variant_trial(train, eval_set, protocol, Variant::cos, 0.35, 0.0, 900 + seed);
        TrialMetrics rpcl_cos_m = run_variant_trial(train, eval_set, protocol,
                                                    Variant::rpcl_cos, 0.35, 0.05, 900 + seed);
        TrialMetrics base_arc =
            run_variant_trial(train, eval_set, protocol, Variant::arc, 0.5, 0.0, 900 + seed);
        TrialMetrics rpcl_arc_m = run_variant_trial(train, eval_set, protocol,
                                                    Variant::rpcl_arc, 0.5, 0.05, 900 + seed);

        cos_wins += rpcl_cos_m.intra < base_cos.intra && rpcl_cos_m.fisher > base_cos.fisher;
        arc_wins += rpcl_arc_m.intra < base_arc.intra && rpcl_arc_m.fisher > base_arc.fisher;
    }
    double elapsed = seconds_since(t0);
    bool ok = cos_wins >= 2 && arc_wins >= 2 && elapsed < 300.0;
    std::printf("%s criterion 5: directional gains on degraded data (cos %d/3, arc %d/3, %.1fs)\n",
                ok ? "PASS" : "FAIL", cos_wins, arc_wins, elapsed);
    return ok;
}

// --- criterion 6: metric oracles ------------------------------------------

double cosine_of(std::span<const double> a, std::span<const double> b) {
    double num = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return num / std::sqrt(na * nb);
}

bool criterion_metric_oracles() {
    auto t0 = std::chrono::steady_clock::now();
    bool ok = true;

    Rng rng(606);
    const std::size_t n_id = 20, d = 6;
    Matrix gallery(n_id, d);
    for (double& v : gallery.data()) v = rng.uniform(-1.0, 1.0);
    std::vector<std::size_t> gallery_ids(n_id);
    std::iota(gallery_ids.begin(), gallery_ids.end(), 0);

    const std::size_t n_probe = 100;
    Matrix probe(n_probe, d);
    std::vector<std::size_t> probe_ids(n_probe);
    for (std::size_t i = 0; i < n_probe; ++i) {
        probe_ids[i] = rng.below(n_id);
        for (std::size_t a = 0; a < d; ++a)
            probe(i, a) = gallery(probe_ids[i], a) + 0.6 * rng.normal();
    }

    // CMC against a double-loop reference with the same low-index tie rule
    std::vector<double> cmc = cmc_curve(gallery, gallery_ids, probe, probe_ids, n_id);
    std::vector<double> ref(n_id, 0.0);
    for (std::size_t p = 0; p < n_probe; ++p) {
        std::vector<std::pair<double, std::size_t>> scored;
        for (std::size_t g = 0; g < n_id; ++g)
            scored.emplace_back(cosine_of(probe.row(p), gallery.row(g)), g);
        std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        std::size_t rank = 0;
        while (scored[rank].second != probe_ids[p]) ++rank;
        for (std::size_t k = rank; k < n_id; ++k) ref[k] += 1.0;
    }
    for (double& v : ref) v /= static_cast<double>(n_probe);
    for (std::size_t k = 0; k < n_id; ++k) ok &= std::abs(cmc[k] - ref[k]) <= 1e-9;
    ok &= cmc.back() == 1.0;

    // verification + ROC against an exhaustive threshold sweep
    Matrix emb(60, d);
    std::vector<std::size_t> labels(60);
    for (std::size_t i = 0; i < 60; ++i) {
        labels[i] = i % 6;
        for (std::size_t a = 0; a < d; ++a)
            emb(i, a) = gallery(labels[i], a) + 0.5 * rng.normal();
    }
    LabeledSet as_set{emb, labels, 6, false};
    Rng prng(7);
    PairProtocol protocol = make_pairs(as_set, 150, 150, prng);
    VerificationResult vr = verification_accuracy(emb, protocol);

    std::vector<double> pos, neg;
    for (const Pair& p : protocol.pairs)
        (p.same ? pos : neg).push_back(cosine_of(emb.row(p.a), emb.row(p.b)));
    std::vector<double> all = pos;
    all.insert(all.end(), neg.begin(), neg.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    std::vector<double> cands{all.front() - 1.0, all.back() + 1.0};
    for (std::size_t i = 0; i + 1 < all.size(); ++i)
        cands.push_back(0.5 * (all[i] + all[i + 1]));
    double best_acc = -1.0;
    for (double t : cands) {
        double correct = 0.0;
        for (double s : pos) correct += s > t;
        for (double s : neg) correct += s <= t;
        best_acc = std::max(best_acc, correct / static_cast<double>(pos.size() + neg.size()));
    }
    ok &= std::abs(vr.accuracy - best_acc) <= 1e-9;

    Curve roc = roc_curve(vr.pos_scores, vr.neg_scores);
    std::vector<double> thresholds(all.rbegin(), all.rend());
    std::vector<std::pair<double, double>> ref_roc{{0.0, 0.0}};
    for (double t : thresholds) {
        double tp = 0.0, fp = 0.0;
        for (double s : pos) tp += s >= t;
        for (double s : neg) fp += s >= t;
        std::pair<double, double> pt{fp / neg.size(), tp / pos.size()};
        if (pt != ref_roc.back()) ref_roc.push_back(pt);
    }
    if (ref_roc.back() != std::make_pair(1.0, 1.0)) ref_roc.emplace_back(1.0, 1.0);
    ok &= roc.points.size() == ref_roc.size();
    if (ok)
        for (std::size_t i = 0; i < ref_roc.size(); ++i) {
            ok &= std::abs(roc.points[i].first - ref_roc[i].first) <= 1e-9;
            ok &= std::abs(roc.points[i].second - ref_roc[i].second) <= 1e-9;
        }

    // angle statistics against direct double loops
    Matrix head_W(6, d);
    for (std::size_t j = 0; j < 6; ++j) {
        auto src = gallery.row(j);
        std::copy(src.begin(), src.end(), head_W.row(j).begin());
    }
    head_W = normalize_rows(head_W).matrix;
    AngleStats st = angle_statistics(emb, labels, head_W);

    const double rad2deg = 180.0 / 3.14159265358979323846;
    auto angle_deg = [&](std::span<const double> a, std::span<const double> b) {
        return std::acos(std::clamp(cosine_of(a, b), -1.0, 1.0)) * rad2deg;
    };
    Matrix centers(6, d);
    std::vector<double> counts(6, 0.0);
    Matrix unit = normalize_rows(emb).matrix;
    for (std::size_t i = 0; i < unit.rows(); ++i) {
        counts[labels[i]] += 1.0;
        for (std::size_t a = 0; a < d; ++a) centers(labels[i], a) += unit(i, a);
    }
    centers = normalize_rows(centers).matrix;
    double intra = 0.0;
    for (std::size_t i = 0; i < unit.rows(); ++i)
        intra += angle_deg(unit.row(i), centers.row(labels[i]));
    intra /= static_cast<double>(unit.rows());
    double inter = 0.0, ww = 0.0, wc = 0.0;
    for (std::size_t j = 0; j < 6; ++j) {
        double min_c = 1e300, min_w = 1e300;
        for (std::size_t k = 0; k < 6; ++k) {
            if (k == j) continue;
            min_c = std::min(min_c, angle_deg(centers.row(j), centers.row(k)));
            min_w = std::min(min_w, angle_deg(head_W.row(j), head_W.row(k)));
        }
        inter += min_c / 6.0;
        ww += min_w / 6.0;
        wc += angle_deg(head_W.row(j), centers.row(j)) / 6.0;
    }
    ok &= std::abs(st.intra - intra) <= 1e-9;
    ok &= std::abs(st.inter - inter) <= 1e-9;
    ok &= std::abs(st.ww - ww) <= 1e-9;
    ok &= std::abs(st.wc - wc) <= 1e-9;

    // Fisher hand case
    ok &= std::abs(fisher_criterion({0.9, 0.8}, {0.1, 0.2}) - 98.0) <= 1e-9;

    double elapsed = seconds_since(t0);
    ok &= elapsed < 5.0;
    std::printf("%s criterion 6: metric oracles vs brute force (%.1fs)\n",
                ok ? "PASS" : "FAIL", elapsed);
    return ok;
}

// --- criterion 7: center-loss rival de-learning direction -----------------

bool criterion_center_rival() {
    auto t0 = std::chrono::steady_clock::now();
    Rng rng(707);
    bool ok = true;
    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t c = 3 + rng.below(5);
        std::size_t d = 2 + rng.below(6);
        CenterLossState st;
        st.class_centers = Matrix(c, d);
        for (double& v : st.class_centers.data()) v = rng.uniform(-1.0, 1.0);
        st.initialized = true;
        Matrix x(1, d);
        for (double& v : x.data()) v = rng.uniform(-1.0, 1.0);
        std::size_t y = rng.below(c);

        CenterLossOutput out = center_rpcl_loss(x, {y}, st, 0.0);
        std::size_t r = out.rival_centers[0];
        if (squared_distance(x.row(0), st.class_centers.row(r)) < 1e-12) continue;

        // descent step of the rival term alone vs the direction toward c_r
        double ip = 0.0;
        for (std::size_t a = 0; a < d; ++a) {
            double rival_grad = out.grad_features(0, a) -
                                2.0 * st.beta_c * (x(0, a) - st.class_centers(y, a));
            ip += -rival_grad * (st.class_centers(r, a) - x(0, a));
        }
        ok &= ip < 0.0;
    }
    double elapsed = seconds_since(t0);
    ok &= elapsed < 5.0;
    std::printf("%s criterion 7: center-loss rival de-learning direction (1000 instances, %.1fs)\n",
                ok ? "PASS" : "FAIL", elapsed);
    return ok;
}

// --- criterion 8: byte-identical pipeline reruns --------------------------

int run_cli(const std::string& args) {
    std::string cmd = std::string(RPCL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    return std::system(cmd.c_str());
}

std::string file_bytes(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

bool criterion_reproducibility() {
    auto t0 = std::chrono::steady_clock::now();
    fs::path dir = fs::temp_directory_path() / "rpcl_acceptance_repro";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::string out = (dir / "out").string();
    std::string hr = out + "/hr.ds";

    auto pipeline = [&]() {
        int rc = 0;
        rc |= run_cli("gen --seed 42 --out " + out +
                      " --set classes=5 --set per_class=40 --set dim=3");
        rc |= run_cli("train --seed 42 --out " + out + " --set data=" + hr +
                      " --set epochs=3 --set layers=3,8,2 --set variant=rpcl_arc");
        rc |= run_cli("eval --seed 42 --out " + out + " --set data=" + out + "/lr.ds" +
                      " --set pairs_pos=100 --set pairs_neg=100");
        return rc == 0;
    };

    bool ok = pipeline();
    const char* files[] = {"metrics.json", "roc.csv", "config.echo", "history.csv",
                           "model.ckpt"};
    std::vector<std::string> first;
    for (const char* f : files) first.push_back(file_bytes(fs::path(out) / f));
    ok &= pipeline();
    for (std::size_t i = 0; i < first.size(); ++i)
        ok &= file_bytes(fs::path(out) / files[i]) == first[i] && !first[i].empty();
    fs::remove_all(dir);

    double elapsed = seconds_since(t0);
    std::printf("%s criterion 8: train+eval rerun byte-identical reports (%.1fs)\n",
                ok ? "PASS" : "FAIL", elapsed);
    return ok;
}

}  // namespace

int main() {
    bool all = true;
    all &= criterion_reductions();
    all &= criterion_two_class();
    all &= criterion_gradients();
    all &= criterion_cluster_selection();
    all &= criterion_directional();
    all &= criterion_metric_oracles();
    all &= criterion_center_rival();
    all &= criterion_reproducibility();
    std::printf("%s\n", all ? "acceptance: all criteria passed"
                            : "acceptance: FAILURES present");
    return all ? 0 : 1;
}
