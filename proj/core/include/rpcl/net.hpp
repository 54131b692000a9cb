#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rpcl/center_loss.hpp"
#include "rpcl/datagen.hpp"
#include "rpcl/margin_loss.hpp"
#include "rpcl/matrix.hpp"
#include "rpcl/rng.hpp"

namespace rpcl {

enum class Activation { relu, tanh, none };

Activation activation_from_string(const std::string& name);
std::string to_string(Activation a);

struct Layer {
    Matrix W;               // out x in
    std::vector<double> b;  // out
    Activation act = Activation::relu;
};

// Fully-connected embedding network plus the normalized classifier head.
struct Model {
    std::vector<Layer> layers;
    std::size_t embed_dim = 0;
    ClassifierHead head;
};

enum class Optimizer { sgd_momentum, adam };

Optimizer optimizer_from_string(const std::string& name);
std::string to_string(Optimizer o);

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 128;
    double lr0 = 0.1;          // the reference schedule's initial rate; large for Adam,
                               // toy presets use 1e-3
    std::size_t decay_every = 10;
    double decay_factor = 10.0;  // applied as division every decay_every epochs
    Optimizer optimizer = Optimizer::adam;
    std::uint64_t seed = 0;
};

struct ForwardCache {
    Matrix input;
    std::vector<Matrix> pre_activations;   // per layer
    std::vector<Matrix> post_activations;  // per layer; back() is the features
};

// Seeded scaled-uniform init: weights in +-1/sqrt(fan_in), biases zero.
// layer_sizes includes the input width; n_classes sizes the head.
Model init_model(const std::vector<std::size_t>& layer_sizes, std::size_t n_classes,
                 Activation act, std::uint64_t seed);

Matrix forward(const Model& model, const Matrix& inputs, ForwardCache* cache = nullptr);

// Per-tensor optimizer slots (momentum buffer, or Adam first/second moments).
struct OptState {
    Optimizer kind = Optimizer::adam;
    double momentum = 0.9;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::size_t step_count = 0;
    std::vector<std::vector<double>> slot_m;  // one per parameter tensor
    std::vector<std::vector<double>> slot_v;  // adam only
};

// Full backward pass: chains grad_features through the cached
// activations; returns per-layer weight/bias gradients (input-first order).
struct LayerGrads {
    std::vector<Matrix> dW;
    std::vector<std::vector<double>> db;
};
LayerGrads backward(const Model& model, const ForwardCache& cache, const Matrix& grad_features);

struct StepResult {
    double loss = 0.0;
};

// One optimizer step on a batch. Re-normalizes head.W rows afterwards.
// A supplied CenterLossState switches on the rival center-loss term and
// updates the centers from the batch.
StepResult train_step(Model& model, const Matrix& batch_x,
                      const std::vector<std::size_t>& batch_y, const MarginConfig& cfg,
                      OptState& opt, double lr, CenterLossState* centers = nullptr);

struct TrainResult {
    std::vector<double> epoch_loss;  // mean batch loss per epoch
};

TrainResult train_embedding(const LabeledSet& data, Model& model, const TrainConfig& tcfg,
                            const MarginConfig& lcfg, CenterLossState* centers = nullptr);

// Versioned text checkpoint: layer shapes, activation tags, every weight
// matrix, head.W and the training config.
void save_checkpoint(const Model& model, const TrainConfig& tcfg, const MarginConfig& lcfg,
                     const std::string& path);
struct Checkpoint {
    Model model;
    TrainConfig tcfg;
    MarginConfig lcfg;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace rpcl
