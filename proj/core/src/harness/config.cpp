// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "reneg/harness/config.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "reneg/common/hashing.hpp"
#include "reneg/common/rng.hpp"
#include "reneg/error.hpp"

namespace reneg::harness {
namespace {

std::string format(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}
std::string format(bool v) { return v ? "true" : "false"; }
template <class Int>
    requires std::is_integral_v<Int>
std::string format(Int v) {
    return std::to_string(v);
}
std::string format(const std::string& v) { return v; }
std::string format(const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}
std::string format(sampling::Solver s) { return sampling::solver_name(s); }
std::string format(RewardChoice r) { return r == RewardChoice::analytic ? "analytic" : "discriminator"; }

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

template <class T>
void parse_number(const std::string& key, const std::string& text, T& out) {
    const std::string t = trim(text);
    const auto r = std::from_chars(t.data(), t.data() + t.size(), out);
    if (r.ec != std::errc{} || r.ptr != t.data() + t.size()) {
        throw ConfigError(key, "cannot parse '" + text + "' as a number");
    }
}

void parse(const std::string& key, const std::string& text, double& out) {
    parse_number(key, text, out);
    if (!std::isfinite(out)) throw ConfigError(key, "must be finite");
}
template <class Int>
    requires std::is_integral_v<Int>
void parse(const std::string& key, const std::string& text, Int& out) {
    if (std::is_unsigned_v<Int> && trim(text).starts_with("-")) throw ConfigError(key, "must be non-negative");
    parse_number(key, text, out);
}
void parse(const std::string& key, const std::string& text, bool& out) {
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes") {
        out = true;
    } else if (t == "false" || t == "0" || t == "no") {
        out = false;
    } else {
        throw ConfigError(key, "expected true or false, got '" + text + "'");
    }
}
void parse(const std::string&, const std::string& text, std::string& out) { out = trim(text); }
void parse(const std::string& key, const std::string& text, std::vector<std::size_t>& out) {
    out.clear();
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t v = 0;
        parse(key, item, v);
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError(key, "expected a comma-separated list");
}
void parse(const std::string& key, const std::string& text, sampling::Solver& out) {
    try {
        out = sampling::parse_solver(trim(text));
    } catch (const InvalidArgument& e) {
        throw ConfigError(key, e.what());
    }
}
void parse(const std::string& key, const std::string& text, RewardChoice& out) {
    const std::string t = trim(text);
    if (t == "analytic") {
        out = RewardChoice::analytic;
    } else if (t == "discriminator") {
        out = RewardChoice::discriminator;
    } else {
        throw ConfigError(key, "expected analytic or discriminator, got '" + text + "'");
    }
}

// Binds a key to a member reached through `access`.
template <class Access>
ConfigField field(std::string key, std::string doc, Access access) {
    return ConfigField{
        key, std::move(doc), [access](const ExperimentConfig& c) { return format(access(const_cast<ExperimentConfig&>(c))); },
        [access, key](ExperimentConfig& c, const std::string& text) { parse(key, text, access(c)); }};
}

#define RENEG_FIELD(key, member, doc) field(key, doc, [](ExperimentConfig& c) -> auto& { return c.member; })

std::vector<ConfigField> build_schema() {
    return {
        RENEG_FIELD("experiment.master_seed", master_seed, "Root of every derived seed."),
        RENEG_FIELD("world.classes", world.classes, "Number of prompt classes."),
        RENEG_FIELD("world.data_dim", world.data_dim, "Data dimension d_x (>= 2)."),
        RENEG_FIELD("world.cond_dim", world.cond_dim, "Condition embedding dimension d_e."),
        RENEG_FIELD("world.components", world.components, "Gaussian components per class."),
        RENEG_FIELD("world.radius", world.radius, "Radius of the circle of class centres."),
        RENEG_FIELD("world.component_offset", world.component_offset, "Distance of component means from the class centre."),
        RENEG_FIELD("world.std_min", world.std_min, "Smallest per-axis component standard deviation."),
        RENEG_FIELD("world.std_max", world.std_max, "Largest per-axis component standard deviation."),
        RENEG_FIELD("world.corruption_fraction", world.corruption_fraction, "Fraction of training samples corrupted."),
        RENEG_FIELD("world.corruption_sigma", world.corruption_sigma, "Standard deviation of the corrupting noise."),
        RENEG_FIELD("world.degraded_class", world.degraded_class, "Fully corrupted class used as the handcrafted negative (-1: none)."),
        RENEG_FIELD("world.samples_per_class", world.samples_per_class, "Training samples per class."),
        RENEG_FIELD("diffusion.train_steps", diffusion.train_steps, "Training horizon T_train."),
        RENEG_FIELD("diffusion.beta_min", diffusion.beta_min, "First beta of the linear schedule."),
        RENEG_FIELD("diffusion.beta_max", diffusion.beta_max, "Last beta of the linear schedule."),
        RENEG_FIELD("diffusion.width", diffusion.width, "Hidden width of model A."),
        RENEG_FIELD("diffusion.time_features", diffusion.time_features, "Sinusoidal time features."),
        RENEG_FIELD("pretrain.steps", pretrain.steps, "Pretraining steps."),
        RENEG_FIELD("pretrain.learning_rate", pretrain.learning_rate, "Pretraining Adam learning rate."),
        RENEG_FIELD("pretrain.batch_size", pretrain.batch_size, "Pretraining batch size."),
        RENEG_FIELD("pretrain.p_drop", pretrain.p_drop, "Condition dropout probability."),
        RENEG_FIELD("reward.kind", reward, "analytic or discriminator."),
        RENEG_FIELD("reward.hidden", discriminator.hidden, "Discriminator hidden width."),
        RENEG_FIELD("reward.steps", discriminator.steps, "Discriminator training steps."),
        RENEG_FIELD("reward.learning_rate", discriminator.learning_rate, "Discriminator learning rate."),
        RENEG_FIELD("reward.batch_size", discriminator.batch_size, "Discriminator batch size."),
        RENEG_FIELD("reward.holdout", discriminator.holdout, "Held-out fraction for the accuracy report."),
        RENEG_FIELD("global.total_steps", global.total_steps, "Global training steps."),
        RENEG_FIELD("global.learning_rate", global.learning_rate, "Peak learning rate (cosine decay to 0)."),
        RENEG_FIELD("global.batch_size", global.batch_size, "Prompts per step."),
        RENEG_FIELD("global.inference_steps", global.inference_steps, "Sampler steps during training."),
        RENEG_FIELD("global.t_window_min", global.t_window_min, "Smallest prediction point t_stop."),
        RENEG_FIELD("global.t_window_max", global.t_window_max, "Largest prediction point t_stop."),
        RENEG_FIELD("global.gamma", global.gamma, "Guidance scale during training."),
        RENEG_FIELD("global.beta1", global.beta1, "AdamW first-moment decay."),
        RENEG_FIELD("global.beta2", global.beta2, "AdamW second-moment decay."),
        RENEG_FIELD("global.weight_decay", global.weight_decay, "AdamW decoupled weight decay."),
        RENEG_FIELD("global.learn_gamma", global.learn_gamma, "Train the guidance scale jointly with n."),
        RENEG_FIELD("per_sample.max_steps", per_sample.max_steps, "Iteration cap N."),
        RENEG_FIELD("per_sample.patience", per_sample.patience, "Non-improving iterations tolerated P."),
        RENEG_FIELD("per_sample.learning_rate", per_sample.learning_rate, "Per-sample Adam learning rate."),
        RENEG_FIELD("per_sample.fixed_noise", per_sample.fixed_noise, "Reuse one x_T for every iteration."),
        RENEG_FIELD("per_sample.compat_paper", per_sample.compat_paper, "Verbatim listing semantics (J_best = 0, final n, resampled noise)."),
        RENEG_FIELD("per_sample.t_stop", per_sample.t_stop, "Prediction point of the tuning objective."),
        RENEG_FIELD("eval.n_seeds", eval.n_seeds, "Evaluation seeds per prompt."),
        RENEG_FIELD("eval.gamma", eval.gamma, "Guidance scale at evaluation."),
        RENEG_FIELD("eval.steps", eval.steps, "Sampler steps at evaluation."),
        RENEG_FIELD("eval.solver", eval.solver, "ddim or ddpm."),
        RENEG_FIELD("transfer.width_b", transfer.width_b, "Hidden width of model B."),
        RENEG_FIELD("transfer.model_b", transfer.model_b, "Existing checkpoint to use as model B (empty: pretrain one)."),
        RENEG_FIELD("probe.prompts", probe.prompts, "Prompts N in the Jacobian probe."),
        RENEG_FIELD("probe.ranks", probe.ranks, "Adapter ranks, comma separated."),
        RENEG_FIELD("probe.adapter_inits", probe.adapter_inits, "Adapter initialisations averaged per rank."),
        RENEG_FIELD("probe.fd_checks", probe.fd_checks, "Finite-difference spot checks per group."),
        RENEG_FIELD("probe.fd_step", probe.fd_step, "Finite-difference step."),
        RENEG_FIELD("x0_similarity.seeds", x0_similarity.seeds, "Seeds per (t, solver) row."),
    };
}

#undef RENEG_FIELD

void apply_ptree(ExperimentConfig& c, const boost::property_tree::ptree& tree) {
    std::map<std::string, const ConfigField*> by_key;
    for (const auto& f : config_schema()) by_key[f.key] = &f;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) throw ConfigError(section, "key outside of a section");
        for (const auto& [name, value] : body) {
            const std::string key = section + "." + name;
            const auto it = by_key.find(key);
            if (it == by_key.end()) throw ConfigError(key, "unknown key");
            it->second->set(c, value.data());
        }
    }
    c.derive_seeds();
    c.validate();
}

}  // namespace

void ExperimentConfig::derive_seeds() {
    world.seed = derive_seed(master_seed, 1);
    pretrain.seed = derive_seed(master_seed, 2);
    discriminator.seed = derive_seed(master_seed, 3);
    global.seed = derive_seed(master_seed, 5);
    per_sample.seed = derive_seed(master_seed, 6);
    eval.seed = derive_seed(master_seed, 7);
    per_sample.gamma = global.gamma;
    per_sample.inference_steps = global.inference_steps;
}

std::uint64_t model_a_init_seed(const ExperimentConfig& c) { return derive_seed(c.master_seed, 10); }
std::uint64_t model_b_init_seed(const ExperimentConfig& c) { return derive_seed(c.master_seed, 11); }
std::uint64_t model_b_pretrain_seed(const ExperimentConfig& c) { return derive_seed(c.master_seed, 12); }

void ExperimentConfig::validate() const {
    world.validate();
    const auto& d = diffusion;
    if (d.train_steps < 1) throw ConfigError("diffusion.train_steps", "must be >= 1");
    if (!(d.beta_min > 0.0 && d.beta_min < 1.0)) throw ConfigError("diffusion.beta_min", "must lie in (0, 1)");
    if (!(d.beta_max >= d.beta_min && d.beta_max < 1.0)) {
        throw ConfigError("diffusion.beta_max", "must lie in [beta_min, 1)");
    }
    if (d.width < 1) throw ConfigError("diffusion.width", "must be >= 1");
    if (d.time_features < 2 || d.time_features % 2) throw ConfigError("diffusion.time_features", "must be even and >= 2");
    if (pretrain.steps < 1) throw ConfigError("pretrain.steps", "must be >= 1");
    if (!(pretrain.learning_rate > 0.0)) throw ConfigError("pretrain.learning_rate", "must be > 0");
    if (pretrain.batch_size < 1) throw ConfigError("pretrain.batch_size", "must be >= 1");
    if (!(pretrain.p_drop >= 0.0 && pretrain.p_drop <= 1.0)) throw ConfigError("pretrain.p_drop", "must lie in [0, 1]");
    if (discriminator.hidden < 1) throw ConfigError("reward.hidden", "must be >= 1");
    if (discriminator.steps < 1) throw ConfigError("reward.steps", "must be >= 1");
    if (!(discriminator.learning_rate > 0.0)) throw ConfigError("reward.learning_rate", "must be > 0");
    if (discriminator.batch_size < 1) throw ConfigError("reward.batch_size", "must be >= 1");
    if (!(discriminator.holdout >= 0.0 && discriminator.holdout < 1.0)) {
        throw ConfigError("reward.holdout", "must lie in [0, 1)");
    }
    const auto& g = global;
    if (g.total_steps < 1) throw ConfigError("global.total_steps", "must be >= 1");
    if (!(g.learning_rate >= 0.0)) throw ConfigError("global.learning_rate", "must be >= 0");
    if (g.batch_size < 1) throw ConfigError("global.batch_size", "must be >= 1");
    if (g.inference_steps < 1 || g.inference_steps > d.train_steps) {
        throw ConfigError("global.inference_steps", "must lie in [1, diffusion.train_steps]");
    }
    if (g.t_window_min < 0) throw ConfigError("global.t_window_min", "must be >= 0");
    if (g.t_window_max < g.t_window_min || g.t_window_max >= g.inference_steps) {
        throw ConfigError("global.t_window_max", "must lie in [t_window_min, inference_steps)");
    }
    if (!(g.gamma >= 0.0)) throw ConfigError("global.gamma", "must be >= 0");
    if (!(g.beta1 >= 0.0 && g.beta1 < 1.0)) throw ConfigError("global.beta1", "must lie in [0, 1)");
    if (!(g.beta2 >= 0.0 && g.beta2 < 1.0)) throw ConfigError("global.beta2", "must lie in [0, 1)");
    if (!(g.weight_decay >= 0.0)) throw ConfigError("global.weight_decay", "must be >= 0");
    const auto& p = per_sample;
    if (p.max_steps < 1) throw ConfigError("per_sample.max_steps", "must be >= 1");
    if (p.patience < 1) throw ConfigError("per_sample.patience", "must be >= 1");
    if (!(p.learning_rate >= 0.0)) throw ConfigError("per_sample.learning_rate", "must be >= 0");
    if (p.t_stop < 0 || p.t_stop >= g.inference_steps) {
        throw ConfigError("per_sample.t_stop", "must lie in [0, global.inference_steps)");
    }
    if (eval.n_seeds < 1) throw ConfigError("eval.n_seeds", "must be >= 1");
    if (!(eval.gamma >= 0.0)) throw ConfigError("eval.gamma", "must be >= 0");
    if (eval.steps < 1 || eval.steps > d.train_steps) throw ConfigError("eval.steps", "must lie in [1, diffusion.train_steps]");
    if (transfer.width_b < 1) throw ConfigError("transfer.width_b", "must be >= 1");
    if (probe.prompts < 1) throw ConfigError("probe.prompts", "must be >= 1");
    for (auto r : probe.ranks) {
        if (r < 1 || r > d.width) throw ConfigError("probe.ranks", "ranks must lie in [1, width]");
    }
    if (probe.adapter_inits < 1) throw ConfigError("probe.adapter_inits", "must be >= 1");
    if (!(probe.fd_step > 0.0)) throw ConfigError("probe.fd_step", "must be > 0");
    if (x0_similarity.seeds < 1) throw ConfigError("x0_similarity.seeds", "must be >= 1");
    if (world.degraded_class >= 0 && world.classes < 2) throw ConfigError("world.classes", "need a non-degraded class");
}

ExperimentConfig reference_config() {
    ExperimentConfig c;
    c.derive_seeds();
    c.validate();
    return c;
}

const std::vector<ConfigField>& config_schema() {
    static const std::vector<ConfigField> schema = build_schema();
    return schema;
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig c;
    boost::property_tree::ptree tree;
    std::istringstream in(text);
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError("config", "line " + std::to_string(e.line()) + ": " + e.message());
    }
    apply_ptree(c, tree);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    if (!std::filesystem::is_regular_file(path)) throw ConfigError("config", "cannot read '" + path + "'");
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string canonical_config(const ExperimentConfig& c) {
    std::string out, section;
    for (const auto& f : config_schema()) {
        const auto dot = f.key.find('.');
        const std::string s = f.key.substr(0, dot);
        if (s != section) {
            out += (section.empty() ? "[" : "\n[") + s + "]\n";
            section = s;
        }
        out += f.key.substr(dot + 1) + " = " + f.get(c) + "\n";
    }
    return out;
}

std::string config_hash(const ExperimentConfig& c) { return sha256_hex(canonical_config(c)); }

std::string schema_markdown() {
    const ExperimentConfig defaults = reference_config();
    std::string out = "| key | default | meaning |\n|---|---|---|\n";
    for (const auto& f : config_schema()) out += "| `" + f.key + "` | `" + f.get(defaults) + "` | " + f.doc + " |\n";
    return out;
}

}  // namespace reneg::harness
