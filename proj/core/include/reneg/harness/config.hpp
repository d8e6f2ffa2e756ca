// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "reneg/diffusion/pretrain.hpp"
#include "reneg/harness/world.hpp"
#include "reneg/reward/reward.hpp"
#include "reneg/trainer/trainer.hpp"

namespace reneg::harness {

struct DiffusionSpec {
    int train_steps = 100;
    double beta_min = 1e-3;
    double beta_max = 0.2;
    std::size_t width = 128;
    std::size_t time_features = 16;
};

struct TransferSpec {
    /// Width of the independently pretrained second model.
    std::size_t width_b = 96;
    /// Optional path of an existing checkpoint to use as model B.
    std::string model_b;
};

struct ProbeSpec {
    std::size_t prompts = 8;
    std::vector<std::size_t> ranks = {2, 4};
    std::size_t adapter_inits = 8;
    std::size_t fd_checks = 20;
    double fd_step = 1e-4;
};

struct X0SimilaritySpec {
    std::size_t seeds = 64;
};

enum class RewardChoice { analytic, discriminator };

/// Everything a run depends on. Nested seeds are derived from master_seed.
struct ExperimentConfig {
    std::uint64_t master_seed = 1;
    WorldSpec world;
    DiffusionSpec diffusion;
    diffusion::PretrainConfig pretrain;
    RewardChoice reward = RewardChoice::analytic;
    reward::DiscriminatorConfig discriminator;
    trainer::GlobalTrainConfig global;
    trainer::PerSampleConfig per_sample;
    trainer::EvalConfig eval;
    TransferSpec transfer;
    ProbeSpec probe;
    X0SimilaritySpec x0_similarity;

    /// Fills every nested seed from master_seed.
    void derive_seeds();
    /// Throws ConfigError naming the first invalid field.
    void validate() const;
};

/// Seeds used for the network initialisations.
std::uint64_t model_a_init_seed(const ExperimentConfig& c);
std::uint64_t model_b_init_seed(const ExperimentConfig& c);
std::uint64_t model_b_pretrain_seed(const ExperimentConfig& c);

/// Defaults with seeds derived: the reference configuration.
ExperimentConfig reference_config();

/// One documented key of the configuration file.
struct ConfigField {
    std::string key;  // "section.name"
    std::string doc;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};

const std::vector<ConfigField>& config_schema();

/// Reads an INI file over the defaults. Unknown keys, unparsable values and
/// invalid settings throw ConfigError naming the field; a missing file
/// throws ConfigError for "config".
ExperimentConfig load_config(const std::string& path);

/// Parses INI text over the defaults.
ExperimentConfig parse_config(const std::string& text);

/// Canonical INI rendering: every key in schema order with shortest
/// round-trip numbers. Equal configs render identically.
std::string canonical_config(const ExperimentConfig& c);

/// SHA-256 of canonical_config.
std::string config_hash(const ExperimentConfig& c);

/// Markdown table of the schema with default values.
std::string schema_markdown();

}  // namespace reneg::harness
