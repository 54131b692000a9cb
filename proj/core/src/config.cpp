#include "rpcl/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace rpcl {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_real(const std::string& key, const std::string& v) {
    try {
        std::size_t pos;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
    } catch (...) {
        throw std::invalid_argument("config key '" + key + "': expected a real number, got '" +
                                    v + "'");
    }
}

std::size_t parse_count(const std::string& key, const std::string& v) {
    try {
        std::size_t pos;
        long long x = std::stoll(v, &pos);
        if (pos != v.size() || x < 0) throw std::invalid_argument("");
        return static_cast<std::size_t>(x);
    } catch (...) {
        throw std::invalid_argument("config key '" + key + "': expected a non-negative integer, got '" +
                                    v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("config key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<std::size_t> parse_sizes(const std::string& key, const std::string& v) {
    std::vector<std::size_t> out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(parse_count(key, trim(tok)));
    if (out.empty()) throw std::invalid_argument("config key '" + key + "': empty size list");
    return out;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1,
                               prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

// Registry of every accepted section.key with its parse/validate action.
const std::map<std::string, Setter>& registry() {
    static const std::map<std::string, Setter> reg = {
        {"common.seed", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.seed = parse_count(k, v);
         }},
        {"common.out", [](RunConfig& c, const std::string&, const std::string& v) { c.out = v; }},

        {"gen.classes", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.gen.cluster.n_classes = parse_count(k, v);
             if (c.gen.cluster.n_classes < 2)
                 throw std::invalid_argument("config key 'gen.classes': need >= 2 classes");
         }},
        {"gen.per_class", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.gen.cluster.per_class = parse_count(k, v);
             if (c.gen.cluster.per_class < 1)
                 throw std::invalid_argument("config key 'gen.per_class': need >= 1");
         }},
        {"gen.dim", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.gen.cluster.dim = parse_count(k, v);
             if (c.gen.cluster.dim == 0)
                 throw std::invalid_argument("config key 'gen.dim': need >= 1");
         }},
        {"gen.spread", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.gen.cluster.spread = parse_real(k, v);
             if (c.gen.cluster.spread <= 0.0)
                 throw std::invalid_argument("config key 'gen.spread': must be > 0");
         }},
        {"gen.min_angle", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.gen.cluster.min_angle = parse_real(k, v);
             if (c.gen.cluster.min_angle < 0.0)
                 throw std::invalid_argument("config key 'gen.min_angle': must be >= 0");
         }},
        {"gen.normalize", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.gen.cluster.normalize = parse_bool(k, v);
         }},
        {"gen.lr_sigma", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.gen.lr_sigma = parse_real(k, v);
             if (c.gen.lr_sigma < 0.0)
                 throw std::invalid_argument("config key 'gen.lr_sigma': must be >= 0");
         }},
        {"gen.hr_path", [](RunConfig& c, const std::string&, const std::string& v) {
             c.gen.hr_path = v;
         }},
        {"gen.lr_path", [](RunConfig& c, const std::string&, const std::string& v) {
             c.gen.lr_path = v;
         }},

        {"train.data", [](RunConfig& c, const std::string&, const std::string& v) {
             c.train.data = v;
         }},
        {"train.variant", [](RunConfig& c, const std::string&, const std::string& v) {
             c.train.margin.variant = variant_from_string(v);
             c.train.margin.m = MarginConfig::default_margin(c.train.margin.variant);
         }},
        {"train.s", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.train.margin.s = parse_real(k, v);
             if (c.train.margin.s <= 0.0)
                 throw std::invalid_argument("config key 'train.s': must be > 0");
         }},
        {"train.m", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.train.margin.m = parse_real(k, v);
             if (c.train.margin.m < 0.0)
                 throw std::invalid_argument("config key 'train.m': must be >= 0");
         }},
        {"train.margin", [](RunConfig& c, const std::string&, const std::string& v) {
             // long-form alias for train.m
             c.set("train", "m", v);
         }},
        {"train.gamma", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.train.margin.gamma = parse_real(k, v);
             if (c.train.margin.gamma < 0.0)
                 throw std::invalid_argument("config key 'train.gamma': must be >= 0");
         }},
        {"train.layers", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.train.layers = parse_sizes(k, v);
             if (c.train.layers.size() < 2)
                 throw std::invalid_argument("config key 'train.layers': need input and output widths");
         }},
        {"train.activation", [](RunConfig& c, const std::string&, const std::string& v) {
             c.train.activation = activation_from_string(v);
         }},
        {"train.epochs", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.train.tcfg.epochs = parse_count(k, v);
         }},
        {"train.batch_size", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.train.tcfg.batch_size = parse_count(k, v);
             if (c.train.tcfg.batch_size == 0)
                 throw std::invalid_argument("config key 'train.batch_size': must be > 0");
         }},
        {"train.lr0", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.train.tcfg.lr0 = parse_real(k, v);
             if (c.train.tcfg.lr0 <= 0.0)
                 throw std::invalid_argument("config key 'train.lr0': must be > 0");
         }},
        {"train.decay_every", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.train.tcfg.decay_every = parse_count(k, v);
             if (c.train.tcfg.decay_every == 0)
                 throw std::invalid_argument("config key 'train.decay_every': must be > 0");
         }},
        {"train.decay_factor", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.train.tcfg.decay_factor = parse_real(k, v);
             if (c.train.tcfg.decay_factor <= 1.0)
                 throw std::invalid_argument("config key 'train.decay_factor': must be > 1");
         }},
        {"train.optimizer", [](RunConfig& c, const std::string&, const std::string& v) {
             c.train.tcfg.optimizer = optimizer_from_string(v);
         }},
        {"train.center_loss", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.train.center_loss = parse_bool(k, v);
         }},
        {"train.beta_c", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.train.beta_c = parse_real(k, v);
             if (c.train.beta_c <= 0.0)
                 throw std::invalid_argument("config key 'train.beta_c': must be > 0");
         }},
        {"train.gamma_c", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.train.gamma_c = parse_real(k, v);
             if (c.train.gamma_c < 0.0)
                 throw std::invalid_argument("config key 'train.gamma_c': must be >= 0");
         }},
        {"train.alpha", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.train.alpha = parse_real(k, v);
             if (c.train.alpha <= 0.0 || c.train.alpha > 1.0)
                 throw std::invalid_argument("config key 'train.alpha': need 0 < alpha <= 1");
         }},
        {"train.checkpoint", [](RunConfig& c, const std::string&, const std::string& v) {
             c.train.checkpoint = v;
         }},
        {"train.history", [](RunConfig& c, const std::string&, const std::string& v) {
             c.train.history = v;
         }},

        {"eval.data", [](RunConfig& c, const std::string&, const std::string& v) {
             c.eval.data = v;
         }},
        {"eval.checkpoint", [](RunConfig& c, const std::string&, const std::string& v) {
             c.eval.checkpoint = v;
         }},
        {"eval.pairs_pos", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.eval.pairs_pos = parse_count(k, v);
         }},
        {"eval.pairs_neg", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.eval.pairs_neg = parse_count(k, v);
         }},
        {"eval.gallery", [](RunConfig& c, const std::string&, const std::string& v) {
             c.eval.gallery = v;
         }},
        {"eval.probe", [](RunConfig& c, const std::string&, const std::string& v) {
             c.eval.probe = v;
         }},
        {"eval.max_k", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.eval.max_k = parse_count(k, v);
             if (c.eval.max_k == 0)
                 throw std::invalid_argument("config key 'eval.max_k': must be > 0");
         }},

        {"cluster.data", [](RunConfig& c, const std::string&, const std::string& v) {
             c.cluster.data = v;
         }},
        {"cluster.k", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.cluster.k = parse_count(k, v);
             if (c.cluster.k < 2)
                 throw std::invalid_argument("config key 'cluster.k': need >= 2");
         }},
        {"cluster.eta", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.cluster.params.eta = parse_real(k, v);
             if (c.cluster.params.eta <= 0.0 || c.cluster.params.eta >= 1.0)
                 throw std::invalid_argument("config key 'cluster.eta': need 0 < eta < 1");
         }},
        {"cluster.gamma", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.cluster.params.gamma = parse_real(k, v);
             if (c.cluster.params.gamma < 0.0)
                 throw std::invalid_argument("config key 'cluster.gamma': must be >= 0");
         }},
        {"cluster.epochs", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.cluster.params.epochs = parse_count(k, v);
         }},
        {"cluster.tol", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.cluster.params.tol = parse_real(k, v);
             if (c.cluster.params.tol <= 0.0)
                 throw std::invalid_argument("config key 'cluster.tol': must be > 0");
         }},
        {"cluster.expel_factor", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.cluster.params.expel_radius_factor = parse_real(k, v);
             if (c.cluster.params.expel_radius_factor <= 0.0)
                 throw std::invalid_argument("config key 'cluster.expel_factor': must be > 0");
         }},
        {"cluster.anneal", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.cluster.params.anneal = parse_bool(k, v);
         }},

        {"compare.variant_a", [](RunConfig& c, const std::string&, const std::string& v) {
             c.compare.variant_a = variant_from_string(v);
         }},
        {"compare.variant_b", [](RunConfig& c, const std::string&, const std::string& v) {
             c.compare.variant_b = variant_from_string(v);
         }},
    };
    return reg;
}

[[noreturn]] void unknown_key(const std::string& full) {
    std::string best;
    std::size_t best_d = 1000;
    for (const auto& [k, _] : registry()) {
        std::size_t d = edit_distance(full, k);
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    std::string msg = "unknown config key '" + full + "'";
    if (best_d <= 3) msg += "; did you mean '" + best + "'?";
    throw std::invalid_argument(msg);
}

}  // namespace

void RunConfig::set(const std::string& section, const std::string& key,
                    const std::string& value) {
    std::string full = section + "." + key;
    auto it = registry().find(full);
    if (it == registry().end()) unknown_key(full);
    it->second(*this, full, value);
    applied.push_back(full + " = " + value);
}

std::vector<std::string> RunConfig::echo_lines() const {
    std::vector<std::string> lines;
    auto add = [&](const std::string& k, const std::string& v) { lines.push_back(k + " = " + v); };
    add("common.seed", std::to_string(seed));
    add("common.out", out);
    add("gen.classes", std::to_string(gen.cluster.n_classes));
    add("gen.per_class", std::to_string(gen.cluster.per_class));
    add("gen.dim", std::to_string(gen.cluster.dim));
    add("gen.spread", fmt_real(gen.cluster.spread));
    add("gen.min_angle", fmt_real(gen.cluster.min_angle));
    add("gen.normalize", gen.cluster.normalize ? "true" : "false");
    add("gen.lr_sigma", fmt_real(gen.lr_sigma));
    add("gen.hr_path", gen.hr_path);
    add("gen.lr_path", gen.lr_path);
    add("train.data", train.data);
    add("train.variant", to_string(train.margin.variant));
    add("train.s", fmt_real(train.margin.s));
    add("train.m", fmt_real(train.margin.m));
    add("train.gamma", fmt_real(train.margin.gamma));
    {
        std::string sizes;
        for (std::size_t i = 0; i < train.layers.size(); ++i)
            sizes += (i ? "," : "") + std::to_string(train.layers[i]);
        add("train.layers", sizes);
    }
    add("train.activation", to_string(train.activation));
    add("train.epochs", std::to_string(train.tcfg.epochs));
    add("train.batch_size", std::to_string(train.tcfg.batch_size));
    add("train.lr0", fmt_real(train.tcfg.lr0));
    add("train.decay_every", std::to_string(train.tcfg.decay_every));
    add("train.decay_factor", fmt_real(train.tcfg.decay_factor));
    add("train.optimizer", to_string(train.tcfg.optimizer));
    add("train.center_loss", train.center_loss ? "true" : "false");
    add("train.beta_c", fmt_real(train.beta_c));
    add("train.gamma_c", fmt_real(train.gamma_c));
    add("train.alpha", fmt_real(train.alpha));
    add("train.checkpoint", train.checkpoint);
    add("train.history", train.history);
    add("eval.data", eval.data);
    add("eval.checkpoint", eval.checkpoint);
    add("eval.pairs_pos", std::to_string(eval.pairs_pos));
    add("eval.pairs_neg", std::to_string(eval.pairs_neg));
    add("eval.gallery", eval.gallery);
    add("eval.probe", eval.probe);
    add("eval.max_k", std::to_string(eval.max_k));
    add("cluster.data", cluster.data);
    add("cluster.k", std::to_string(cluster.k));
    add("cluster.eta", fmt_real(cluster.params.eta));
    add("cluster.gamma", fmt_real(cluster.params.gamma));
    add("cluster.epochs", std::to_string(cluster.params.epochs));
    add("cluster.tol", fmt_real(cluster.params.tol));
    add("cluster.expel_factor", fmt_real(cluster.params.expel_radius_factor));
    add("cluster.anneal", cluster.params.anneal ? "true" : "false");
    add("compare.variant_a", to_string(compare.variant_a));
    add("compare.variant_b", to_string(compare.variant_b));
    return lines;
}

namespace {

void apply_line(RunConfig& cfg, std::string& section, const std::string& raw,
                const std::string& where) {
    std::string line = trim(raw);
    if (auto hash = line.find('#'); hash != std::string::npos) line = trim(line.substr(0, hash));
    if (line.empty()) return;
    if (line.front() == '[') {
        if (line.back() != ']')
            throw std::invalid_argument(where + ": malformed section header '" + line + "'");
        section = trim(line.substr(1, line.size() - 2));
        return;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument(where + ": expected 'key = value', got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    try {
        cfg.set(section, key, value);
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(where + ": " + e.what());
    }
}

void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides,
                     const std::string& active_section) {
    for (const std::string& ov : overrides) {
        auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--set expects key=value, got '" + ov + "'");
        std::string key = trim(ov.substr(0, eq));
        std::string value = trim(ov.substr(eq + 1));
        std::string section = active_section;
        if (auto dot = key.find('.'); dot != std::string::npos) {
            section = key.substr(0, dot);
            key = key.substr(dot + 1);
        }
        cfg.set(section, key, value);
    }
}

void final_checks(const RunConfig& cfg) {
    // gamma << m is a cross-key constraint, revalidated after all
    // assignments so ordering in the file does not matter.
    if (cfg.train.margin.uses_rival()) {
        std::string warning = cfg.train.margin.validate();
        if (!warning.empty()) std::fprintf(stderr, "%s\n", warning.c_str());
    }
    if (cfg.train.center_loss && cfg.train.gamma_c >= cfg.train.beta_c)
        throw std::invalid_argument("config: center-loss gamma_c must be < beta_c");
}

}  // namespace

RunConfig parse_config(const std::string& path, const std::vector<std::string>& overrides,
                       const std::string& active_section) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("parse_config: cannot open " + path);
    RunConfig cfg;
    std::string section = "common";
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        apply_line(cfg, section, line, path + ":" + std::to_string(lineno));
    }
    apply_overrides(cfg, overrides, active_section);
    final_checks(cfg);
    return cfg;
}

RunConfig parse_overrides(const std::vector<std::string>& overrides,
                          const std::string& active_section) {
    RunConfig cfg;
    apply_overrides(cfg, overrides, active_section);
    final_checks(cfg);
    return cfg;
}

}  // namespace rpcl
