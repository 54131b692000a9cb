#include "rpcl/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "rpcl/numeric.hpp"

namespace rpcl {

Activation activation_from_string(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    if (name == "none") return Activation::none;
    throw std::invalid_argument("unknown activation: " + name);
}

std::string to_string(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::none: return "none";
    }
    return "?";
}

Optimizer optimizer_from_string(const std::string& name) {
    if (name == "sgd_momentum") return Optimizer::sgd_momentum;
    if (name == "adam") return Optimizer::adam;
    throw std::invalid_argument("unknown optimizer: " + name);
}

std::string to_string(Optimizer o) {
    return o == Optimizer::adam ? "adam" : "sgd_momentum";
}

Model init_model(const std::vector<std::size_t>& layer_sizes, std::size_t n_classes,
                 Activation act, std::uint64_t seed) {
    if (layer_sizes.size() < 2)
        throw std::invalid_argument("init_model: need at least input and output widths");
    for (std::size_t s : layer_sizes)
        if (s == 0) throw std::invalid_argument("init_model: zero layer width");
    if (n_classes < 2) throw std::invalid_argument("init_model: need >= 2 classes");

    Rng rng(seed);
    Model model;
    model.embed_dim = layer_sizes.back();
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        Layer layer;
        std::size_t in = layer_sizes[l], out = layer_sizes[l + 1];
        double scale = 1.0 / std::sqrt(static_cast<double>(in));
        layer.W = Matrix(out, in);
        for (double& w : layer.W.data()) w = rng.uniform(-scale, scale);
        layer.b.assign(out, 0.0);
        // final layer emits the embedding linearly
        layer.act = (l + 2 == layer_sizes.size()) ? Activation::none : act;
        model.layers.push_back(std::move(layer));
    }
    Matrix W(n_classes, model.embed_dim);
    for (double& w : W.data()) w = rng.normal();
    model.head = ClassifierHead(normalize_rows(W).matrix);
    return model;
}

namespace {

double activate(Activation a, double z) {
    switch (a) {
        case Activation::relu: return z > 0.0 ? z : 0.0;
        case Activation::tanh: return std::tanh(z);
        case Activation::none: return z;
    }
    return z;
}

double activate_grad(Activation a, double z) {
    switch (a) {
        case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::tanh: {
            double t = std::tanh(z);
            return 1.0 - t * t;
        }
        case Activation::none: return 1.0;
    }
    return 1.0;
}

}  // namespace

Matrix forward(const Model& model, const Matrix& inputs, ForwardCache* cache) {
    if (model.layers.empty()) throw std::invalid_argument("forward: empty model");
    if (inputs.cols() != model.layers.front().W.cols())
        throw std::invalid_argument("forward: input width mismatch");
    if (cache) {
        *cache = {};
        cache->input = inputs;
    }
    Matrix a = inputs;
    for (const Layer& layer : model.layers) {
        std::size_t out = layer.W.rows();
        Matrix z(a.rows(), out);
        for (std::size_t i = 0; i < a.rows(); ++i)
            for (std::size_t o = 0; o < out; ++o)
                z(i, o) = dot(a.row(i), layer.W.row(o)) + layer.b[o];
        Matrix post(z.rows(), z.cols());
        for (std::size_t i = 0; i < z.rows(); ++i)
            for (std::size_t o = 0; o < out; ++o) post(i, o) = activate(layer.act, z(i, o));
        if (cache) {
            cache->pre_activations.push_back(z);
            cache->post_activations.push_back(post);
        }
        a = std::move(post);
    }
    return a;
}

LayerGrads backward(const Model& model, const ForwardCache& cache, const Matrix& grad_features) {
    const std::size_t L = model.layers.size();
    LayerGrads grads;
    grads.dW.resize(L);
    grads.db.resize(L);
    Matrix g = grad_features;  // dLoss/d(post-activation of current layer)
    for (std::size_t l = L; l-- > 0;) {
        const Layer& layer = model.layers[l];
        const Matrix& z = cache.pre_activations[l];
        const Matrix& prev =
            l == 0 ? cache.input : cache.post_activations[l - 1];
        Matrix gz(g.rows(), g.cols());
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t o = 0; o < g.cols(); ++o)
                gz(i, o) = g(i, o) * activate_grad(layer.act, z(i, o));

        grads.dW[l] = Matrix(layer.W.rows(), layer.W.cols());
        grads.db[l].assign(layer.b.size(), 0.0);
        for (std::size_t i = 0; i < gz.rows(); ++i)
            for (std::size_t o = 0; o < gz.cols(); ++o) {
                double v = gz(i, o);
                if (v == 0.0) continue;
                grads.db[l][o] += v;
                for (std::size_t a = 0; a < layer.W.cols(); ++a)
                    grads.dW[l](o, a) += v * prev(i, a);
            }
        if (l > 0) {
            Matrix gprev(g.rows(), layer.W.cols());
            for (std::size_t i = 0; i < gz.rows(); ++i)
                for (std::size_t o = 0; o < gz.cols(); ++o) {
                    double v = gz(i, o);
                    if (v == 0.0) continue;
                    for (std::size_t a = 0; a < layer.W.cols(); ++a)
                        gprev(i, a) += v * layer.W(o, a);
                }
            g = std::move(gprev);
        }
    }
    return grads;
}

namespace {

void apply_update(OptState& opt, std::size_t slot, std::span<double> param,
                  std::span<const double> grad, double lr) {
    if (opt.slot_m.size() <= slot) opt.slot_m.resize(slot + 1);
    if (opt.slot_m[slot].empty()) opt.slot_m[slot].assign(param.size(), 0.0);
    auto& m = opt.slot_m[slot];
    if (opt.kind == Optimizer::sgd_momentum) {
        for (std::size_t i = 0; i < param.size(); ++i) {
            m[i] = opt.momentum * m[i] + grad[i];
            param[i] -= lr * m[i];
        }
        return;
    }
    if (opt.slot_v.size() <= slot) opt.slot_v.resize(slot + 1);
    if (opt.slot_v[slot].empty()) opt.slot_v[slot].assign(param.size(), 0.0);
    auto& v = opt.slot_v[slot];
    double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step_count));
    double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step_count));
    for (std::size_t i = 0; i < param.size(); ++i) {
        m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * grad[i];
        v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * grad[i] * grad[i];
        double mhat = m[i] / bc1;
        double vhat = v[i] / bc2;
        param[i] -= lr * mhat / (std::sqrt(vhat) + opt.eps);
    }
}

}  // namespace

StepResult train_step(Model& model, const Matrix& batch_x,
                      const std::vector<std::size_t>& batch_y, const MarginConfig& cfg,
                      OptState& opt, double lr, CenterLossState* centers) {
    if (batch_x.rows() == 0) throw std::invalid_argument("train_step: empty batch");
    ForwardCache cache;
    Matrix features = forward(model, batch_x, &cache);

    LossOutput lo = loss_and_grads(features, batch_y, model.head, cfg);
    double loss = lo.loss;
    Matrix grad_features = lo.grad_features;
    if (centers) {
        CenterLossOutput co = center_rpcl_loss(features, batch_y, *centers, lo.loss);
        loss = co.loss;
        for (std::size_t i = 0; i < grad_features.rows(); ++i)
            for (std::size_t a = 0; a < grad_features.cols(); ++a)
                grad_features(i, a) += co.grad_features(i, a);
    }
    if (!std::isfinite(loss)) {
        double mg = 0.0;
        for (double v : grad_features.data()) mg = std::max(mg, std::abs(v));
        throw std::runtime_error("train_step: non-finite loss (max |grad| = " +
                                 std::to_string(mg) + ")");
    }

    LayerGrads grads = backward(model, cache, grad_features);

    ++opt.step_count;
    std::size_t slot = 0;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        apply_update(opt, slot++, model.layers[l].W.data(), grads.dW[l].data(), lr);
        apply_update(opt, slot++, model.layers[l].b, grads.db[l], lr);
    }
    apply_update(opt, slot++, model.head.W.data(), lo.grad_W.data(), lr);
    model.head.W = normalize_rows(model.head.W).matrix;

    if (centers) update_centers(*centers, features, batch_y);
    return {loss};
}

TrainResult train_embedding(const LabeledSet& data, Model& model, const TrainConfig& tcfg,
                            const MarginConfig& lcfg, CenterLossState* centers) {
    if (data.features.rows() == 0) throw std::invalid_argument("train_embedding: empty data");
    if (tcfg.lr0 <= 0.0) throw std::invalid_argument("train_embedding: lr0 must be > 0");
    if (tcfg.decay_factor <= 1.0)
        throw std::invalid_argument("train_embedding: decay_factor must be > 1");
    if (tcfg.batch_size == 0) throw std::invalid_argument("train_embedding: zero batch size");

    OptState opt;
    opt.kind = tcfg.optimizer;
    Rng rng = Rng(tcfg.seed).split(1);
    std::vector<std::size_t> order(data.features.rows());
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    for (std::size_t epoch = 0; epoch < tcfg.epochs; ++epoch) {
        double lr = tcfg.lr0 /
                    std::pow(tcfg.decay_factor,
                             static_cast<double>(epoch / std::max<std::size_t>(1, tcfg.decay_every)));
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += tcfg.batch_size) {
            std::size_t count = std::min(tcfg.batch_size, order.size() - start);
            Matrix bx(count, data.features.cols());
            std::vector<std::size_t> by(count);
            for (std::size_t i = 0; i < count; ++i) {
                auto src = data.features.row(order[start + i]);
                std::copy(src.begin(), src.end(), bx.row(i).begin());
                by[i] = data.labels[order[start + i]];
            }
            StepResult sr = train_step(model, bx, by, lcfg, opt, lr, centers);
            epoch_loss += sr.loss;
            ++batches;
        }
        result.epoch_loss.push_back(epoch_loss / static_cast<double>(batches));
    }
    return result;
}

namespace {

void write_matrix(std::ofstream& f, const Matrix& m) {
    char buf[40];
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), j == 0 ? "%.17g" : " %.17g", m(i, j));
            f << buf;
        }
        f << '\n';
    }
}

Matrix read_matrix(std::ifstream& f, std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            if (!(f >> m(i, j))) throw std::runtime_error("checkpoint: truncated matrix");
    return m;
}

constexpr const char* kCheckpointMagic = "rpcl-checkpoint";
constexpr int kCheckpointVersion = 1;

}  // namespace

void save_checkpoint(const Model& model, const TrainConfig& tcfg, const MarginConfig& lcfg,
                     const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
    f << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
    f << "layers " << model.layers.size() << '\n';
    char buf[40];
    for (const Layer& layer : model.layers) {
        f << "layer " << layer.W.rows() << ' ' << layer.W.cols() << ' ' << to_string(layer.act)
          << '\n';
        write_matrix(f, layer.W);
        for (std::size_t o = 0; o < layer.b.size(); ++o) {
            std::snprintf(buf, sizeof(buf), o == 0 ? "%.17g" : " %.17g", layer.b[o]);
            f << buf;
        }
        f << '\n';
    }
    f << "head " << model.head.W.rows() << ' ' << model.head.W.cols() << '\n';
    write_matrix(f, model.head.W);
    f << "train " << tcfg.epochs << ' ' << tcfg.batch_size << ' ';
    std::snprintf(buf, sizeof(buf), "%.17g", tcfg.lr0);
    f << buf << ' ' << tcfg.decay_every << ' ';
    std::snprintf(buf, sizeof(buf), "%.17g", tcfg.decay_factor);
    f << buf << ' ' << to_string(tcfg.optimizer) << ' ' << tcfg.seed << '\n';
    f << "loss " << to_string(lcfg.variant) << ' ';
    std::snprintf(buf, sizeof(buf), "%.17g", lcfg.s);
    f << buf << ' ';
    std::snprintf(buf, sizeof(buf), "%.17g", lcfg.m);
    f << buf << ' ';
    std::snprintf(buf, sizeof(buf), "%.17g", lcfg.gamma);
    f << buf << '\n';
    if (!f) throw std::runtime_error("save_checkpoint: write failure on " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);
    std::string tag;
    int version;
    if (!(f >> tag >> version) || tag != kCheckpointMagic)
        throw std::runtime_error("load_checkpoint: not a checkpoint file: " + path);
    if (version != kCheckpointVersion)
        throw std::runtime_error("load_checkpoint: unsupported version " +
                                 std::to_string(version));
    Checkpoint cp;
    std::size_t layer_count;
    if (!(f >> tag >> layer_count) || tag != "layers")
        throw std::runtime_error("load_checkpoint: malformed layer count");
    for (std::size_t l = 0; l < layer_count; ++l) {
        std::size_t out, in;
        std::string act;
        if (!(f >> tag >> out >> in >> act) || tag != "layer")
            throw std::runtime_error("load_checkpoint: malformed layer header");
        Layer layer;
        layer.act = activation_from_string(act);
        layer.W = read_matrix(f, out, in);
        layer.b.resize(out);
        for (auto& b : layer.b)
            if (!(f >> b)) throw std::runtime_error("load_checkpoint: truncated bias");
        cp.model.layers.push_back(std::move(layer));
    }
    cp.model.embed_dim = cp.model.layers.back().W.rows();
    std::size_t n, d;
    if (!(f >> tag >> n >> d) || tag != "head")
        throw std::runtime_error("load_checkpoint: malformed head header");
    cp.model.head = ClassifierHead(read_matrix(f, n, d));
    std::string opt;
    if (!(f >> tag >> cp.tcfg.epochs >> cp.tcfg.batch_size >> cp.tcfg.lr0 >>
          cp.tcfg.decay_every >> cp.tcfg.decay_factor >> opt >> cp.tcfg.seed) ||
        tag != "train")
        throw std::runtime_error("load_checkpoint: malformed train config");
    cp.tcfg.optimizer = optimizer_from_string(opt);
    std::string variant;
    if (!(f >> tag >> variant >> cp.lcfg.s >> cp.lcfg.m >> cp.lcfg.gamma) || tag != "loss")
        throw std::runtime_error("load_checkpoint: malformed loss config");
    cp.lcfg.variant = variant_from_string(variant);
    return cp;
}

}  // namespace rpcl
