#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rpcl/cluster.hpp"
#include "rpcl/config.hpp"
#include "rpcl/datagen.hpp"
#include "rpcl/eval.hpp"
#include "rpcl/net.hpp"
#include "rpcl/report.hpp"

namespace fs = std::filesystem;
using namespace rpcl;

namespace {

// Stage ids for deriving per-stage rng streams from the single run seed.
enum Stage : std::uint64_t { kGenHr = 1, kGenLr, kTrainInit, kTrainLoop, kEvalPairs, kCluster };

Rng stage_rng(std::uint64_t seed, Stage stage) { return Rng(seed).split(stage); }

std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void cmd_gen(const RunConfig& cfg) {
    fs::create_directories(cfg.out);
    Rng rng = stage_rng(cfg.seed, kGenHr);
    LabeledSet hr = generate_clusters(cfg.gen.cluster, rng);
    save_set(hr, cfg.out + "/" + cfg.gen.hr_path);
    std::cout << "wrote " << cfg.out << "/" << cfg.gen.hr_path << " (" << hr.features.rows()
              << " rows)\n";
    if (cfg.gen.lr_sigma > 0.0) {
        Rng lr_rng = stage_rng(cfg.seed, kGenLr);
        LabeledSet lr = degrade_lr(hr, cfg.gen.lr_sigma, lr_rng);
        save_set(lr, cfg.out + "/" + cfg.gen.lr_path);
        std::cout << "wrote " << cfg.out << "/" << cfg.gen.lr_path << "\n";
    }
}

Model train_model(const RunConfig& cfg, const LabeledSet& data, const MarginConfig& margin,
                  TrainResult* history_out) {
    if (cfg.train.layers.front() != data.features.cols())
        throw std::runtime_error("train: first layer width " +
                                 std::to_string(cfg.train.layers.front()) +
                                 " does not match dataset dimension " +
                                 std::to_string(data.features.cols()));
    std::uint64_t init_seed = stage_rng(cfg.seed, kTrainInit).next_u64();
    Model model = init_model(cfg.train.layers, data.class_count, cfg.train.activation, init_seed);
    TrainConfig tcfg = cfg.train.tcfg;
    tcfg.seed = stage_rng(cfg.seed, kTrainLoop).next_u64();

    CenterLossState centers;
    CenterLossState* centers_ptr = nullptr;
    if (cfg.train.center_loss) {
        centers.class_centers = Matrix(data.class_count, model.embed_dim);
        centers.beta_c = cfg.train.beta_c;
        centers.gamma_c = cfg.train.gamma_c;
        centers.alpha = cfg.train.alpha;
        centers.initialized = true;
        centers_ptr = &centers;
    }
    TrainResult result = train_embedding(data, model, tcfg, margin, centers_ptr);
    if (history_out) *history_out = result;
    return model;
}

void cmd_train(const RunConfig& cfg) {
    if (cfg.train.data.empty()) throw std::runtime_error("train: no dataset path configured");
    fs::create_directories(cfg.out);
    LabeledSet data = load_set(cfg.train.data);
    TrainResult history;
    Model model = train_model(cfg, data, cfg.train.margin, &history);
    save_checkpoint(model, cfg.train.tcfg, cfg.train.margin, cfg.out + "/" + cfg.train.checkpoint);
    std::ofstream h(cfg.out + "/" + cfg.train.history);
    if (!h) throw std::runtime_error("train: cannot open history file");
    h << "epoch,loss\n";
    for (std::size_t e = 0; e < history.epoch_loss.size(); ++e)
        h << e << ',' << fmt_real(history.epoch_loss[e]) << '\n';
    std::cout << "wrote " << cfg.out << "/" << cfg.train.checkpoint << "\n";
}

EvalReport evaluate_model(const RunConfig& cfg, const Model& model, const MarginConfig& margin) {
    LabeledSet data = load_set(cfg.eval.data);
    if (data.features.cols() != model.layers.front().W.cols())
        throw std::runtime_error("eval: dataset dimension " +
                                 std::to_string(data.features.cols()) +
                                 " does not match checkpoint input width " +
                                 std::to_string(model.layers.front().W.cols()));
    Matrix embeddings = forward(model, data.features);

    Rng pair_rng = stage_rng(cfg.seed, kEvalPairs);
    PairProtocol protocol = make_pairs(data, cfg.eval.pairs_pos, cfg.eval.pairs_neg, pair_rng);

    EvalReport report;
    VerificationResult ver = verification_accuracy(embeddings, protocol);
    report.scalars["verification_accuracy"] = ver.accuracy;
    report.scalars["verification_threshold"] = ver.threshold;
    report.scalars["fisher"] = fisher_criterion(ver.pos_scores, ver.neg_scores);
    report.curves["roc"] = roc_curve(ver.pos_scores, ver.neg_scores);

    AngleStats st = angle_statistics(embeddings, data.labels, model.head.W);
    report.scalars["angle_intra"] = st.intra;
    report.scalars["angle_inter"] = st.inter;
    report.scalars["angle_ww"] = st.ww;
    report.scalars["angle_wc"] = st.wc;
    report.scalars["loss_variant_s"] = margin.s;

    if (!cfg.eval.gallery.empty() && !cfg.eval.probe.empty()) {
        LabeledSet hr = load_set(cfg.eval.gallery);
        LabeledSet lr = load_set(cfg.eval.probe);
        GalleryProbe gp = make_gallery_probe(hr, lr);
        Matrix ghr = forward(model, hr.features);
        Matrix glr = forward(model, lr.features);
        Matrix gal(gp.gallery_indices.size(), ghr.cols());
        for (std::size_t i = 0; i < gp.gallery_indices.size(); ++i) {
            auto src = ghr.row(gp.gallery_indices[i]);
            std::copy(src.begin(), src.end(), gal.row(i).begin());
        }
        Matrix prb(gp.probe_indices.size(), glr.cols());
        for (std::size_t i = 0; i < gp.probe_indices.size(); ++i) {
            auto src = glr.row(gp.probe_indices[i]);
            std::copy(src.begin(), src.end(), prb.row(i).begin());
        }
        auto rates = cmc_curve(gal, gp.gallery_ids, prb, gp.probe_ids, cfg.eval.max_k);
        Curve cmc;
        for (std::size_t k = 0; k < rates.size(); ++k)
            cmc.points.push_back({static_cast<double>(k + 1), rates[k]});
        report.curves["cmc"] = cmc;
        report.scalars["rank1"] = rates.empty() ? 0.0 : rates.front();
    }
    return report;
}

void cmd_eval(const RunConfig& cfg) {
    if (cfg.eval.data.empty()) throw std::runtime_error("eval: no dataset path configured");
    std::string ckpt = cfg.eval.checkpoint;
    if (!fs::exists(ckpt) && fs::exists(cfg.out + "/" + ckpt)) ckpt = cfg.out + "/" + ckpt;
    Checkpoint cp = load_checkpoint(ckpt);
    EvalReport report = evaluate_model(cfg, cp.model, cp.lcfg);
    write_report(report, cfg.echo_lines(), cfg.out);
    std::cout << "wrote " << cfg.out << "/metrics.json\n";
}

void cmd_cluster(const RunConfig& cfg) {
    if (cfg.cluster.data.empty()) throw std::runtime_error("cluster: no dataset path configured");
    fs::create_directories(cfg.out);
    LabeledSet data = load_set(cfg.cluster.data);
    Rng rng = stage_rng(cfg.seed, kCluster);
    CenterSet cs = fit_rpcl(data.features, cfg.cluster.k, cfg.cluster.params, rng);

    std::ofstream f(cfg.out + "/centers.txt");
    if (!f) throw std::runtime_error("cluster: cannot open centers file");
    f << "k " << cs.centers.rows() << " dim " << cs.centers.cols() << " active "
      << cs.active_count() << '\n';
    for (std::size_t k = 0; k < cs.centers.rows(); ++k) {
        f << (cs.active[k] ? 1 : 0) << ' ' << cs.wins[k];
        for (std::size_t a = 0; a < cs.centers.cols(); ++a)
            f << ' ' << fmt_real(cs.centers(k, a));
        f << '\n';
    }
    std::cout << "active centers: " << cs.active_count() << "\n";
}

void cmd_compare(const RunConfig& cfg) {
    if (cfg.train.data.empty()) throw std::runtime_error("compare: no dataset path configured");
    if (cfg.eval.data.empty()) throw std::runtime_error("compare: no eval dataset configured");
    fs::create_directories(cfg.out);
    LabeledSet data = load_set(cfg.train.data);

    struct Side {
        std::string name;
        EvalReport report;
    };
    std::vector<Side> sides;
    for (Variant v : {cfg.compare.variant_a, cfg.compare.variant_b}) {
        MarginConfig margin = cfg.train.margin;
        margin.variant = v;
        Model model = train_model(cfg, data, margin, nullptr);
        sides.push_back({to_string(v), evaluate_model(cfg, model, margin)});
    }

    std::ofstream f(cfg.out + "/compare.txt");
    if (!f) throw std::runtime_error("compare: cannot open compare.txt");
    f << "metric," << sides[0].name << ',' << sides[1].name << '\n';
    for (const auto& [name, value] : sides[0].report.scalars) {
        auto it = sides[1].report.scalars.find(name);
        if (it == sides[1].report.scalars.end()) continue;
        f << name << ',' << fmt_real(value) << ',' << fmt_real(it->second) << '\n';
    }
    std::cout << "wrote " << cfg.out << "/compare.txt\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rival-penalized competitive learning: clustering, margin losses, "
                 "toy embedding training and evaluation"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_given = false, out_given = false;
    std::vector<std::string> sets;
    app.add_option("--config", config_path, "Config file (key = value with [sections])");
    app.add_option("--seed", seed, "Top-level seed; all stage randomness derives from it")
        ->each([&](const std::string&) { seed_given = true; });
    app.add_option("--out", out_dir, "Output directory")
        ->each([&](const std::string&) { out_given = true; });
    app.add_option("--set", sets, "Override config entries, key=value or section.key=value");

    auto* gen = app.add_subcommand("gen", "Generate synthetic HR/LR datasets");
    auto* train = app.add_subcommand("train", "Train the embedding network");
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint and write a report");
    auto* cluster = app.add_subcommand("cluster", "Run RPCL clustering on a dataset");
    auto* compare = app.add_subcommand("compare", "Train+eval two variants on identical seeds");
    for (auto* sub : {gen, train, eval, cluster, compare}) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    std::string section = app.get_subcommands().front()->get_name();
    try {
        RunConfig cfg = config_path.empty() ? parse_overrides(sets, section)
                                            : parse_config(config_path, sets, section);
        if (seed_given) cfg.seed = seed;
        if (out_given) cfg.out = out_dir;

        if (gen->parsed()) cmd_gen(cfg);
        else if (train->parsed()) cmd_train(cfg);
        else if (eval->parsed()) cmd_eval(cfg);
        else if (cluster->parsed()) cmd_cluster(cfg);
        else if (compare->parsed()) cmd_compare(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
