// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "reneg/diffusion/encoder.hpp"
#include "reneg/diffusion/pretrain.hpp"
#include "reneg/reward/mixture.hpp"
#include "reneg/reward/reward.hpp"

namespace reneg::harness {

struct WorldSpec {
    std::size_t classes = 8;
    std::size_t data_dim = 2;
    std::size_t cond_dim = 16;
    std::size_t components = 2;
    /// Class centres sit on a circle of this radius in the first two axes.
    double radius = 2.5;
    /// Distance of each component mean from its class centre.
    double component_offset = 0.45;
    double std_min = 0.2;
    double std_max = 0.35;
    double corruption_fraction = 0.25;
    double corruption_sigma = 0.75;
    /// Class whose samples are all corrupted; its embedding is the
    /// handcrafted negative and it is left out of prompt sets. -1 for none.
    int degraded_class = 7;
    std::size_t samples_per_class = 2000;
    std::uint64_t seed = 0;

    void validate() const;
};

struct World {
    WorldSpec spec;
    std::vector<reward::GaussianMixture> mixtures;
    diffusion::ConditionEncoder encoder;
    /// Everything pretraining sees, in generation order.
    diffusion::Dataset training;
    /// Per-row flag of `training`: true when the row was corrupted.
    std::vector<bool> corrupted;
    /// Classes usable as prompts (all but the degraded class).
    std::vector<int> prompt_set;

    diffusion::Dataset clean_subset() const;
    diffusion::Dataset corrupted_subset() const;
};

/// Class mixtures and encoder from the spec's seed.
std::vector<reward::GaussianMixture> make_mixtures(const WorldSpec& spec);

/// Deterministic world: mixtures, frozen encoder, labelled samples with the
/// configured corruption.
World generate_world(const WorldSpec& spec);

std::vector<std::string> class_names(std::size_t classes);

}  // namespace reneg::harness
