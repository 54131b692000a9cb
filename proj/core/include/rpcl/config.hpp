#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rpcl/cluster.hpp"
#include "rpcl/datagen.hpp"
#include "rpcl/margin_loss.hpp"
#include "rpcl/net.hpp"

namespace rpcl {

struct GenSettings {
    ClusterGenConfig cluster;
    double lr_sigma = 0.3;  // 0 disables the LR twin
    std::string hr_path = "hr.ds";
    std::string lr_path = "lr.ds";
};

struct TrainSettings {
    std::string data;
    MarginConfig margin;
    std::vector<std::size_t> layers{2, 32, 2};  // input width first
    // tanh default: relu embeddings can collapse to an all-zero row, which
    // the normalized losses reject
    Activation activation = Activation::tanh;
    TrainConfig tcfg{.epochs = 50, .batch_size = 128, .lr0 = 1e-3};
    bool center_loss = false;
    double beta_c = 0.008;
    double gamma_c = 0.002;
    double alpha = 0.5;
    std::string checkpoint = "model.ckpt";
    std::string history = "history.csv";
};

struct EvalSettings {
    std::string data;
    std::string checkpoint = "model.ckpt";
    std::size_t pairs_pos = 1000;
    std::size_t pairs_neg = 1000;
    std::string gallery;  // optional HR set for CMC
    std::string probe;    // optional LR set for CMC
    std::size_t max_k = 10;
};

struct ClusterSettings {
    std::string data;
    std::size_t k = 5;
    RpclParams params;
};

struct CompareSettings {
    Variant variant_a = Variant::cos;
    Variant variant_b = Variant::rpcl_cos;
};

// Flat key=value config with one [section] per subcommand. Command-line
// --set overrides beat file values; unknown keys are rejected with a
// nearest-key suggestion.
struct RunConfig {
    std::uint64_t seed = 0;
    std::string out = "out";
    GenSettings gen;
    TrainSettings train;
    EvalSettings eval;
    ClusterSettings cluster;
    CompareSettings compare;

    // Assignments actually applied, in application order, for provenance.
    std::vector<std::string> applied;

    void set(const std::string& section, const std::string& key, const std::string& value);

    // Effective full configuration, one "section.key = value" per line,
    // stable ordering. Written to config.echo.
    std::vector<std::string> echo_lines() const;
};

RunConfig parse_config(const std::string& path, const std::vector<std::string>& overrides,
                       const std::string& active_section);
RunConfig parse_overrides(const std::vector<std::string>& overrides,
                          const std::string& active_section);

}  // namespace rpcl
