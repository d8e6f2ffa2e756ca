// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "reneg/diffusion/pretrain.hpp"
#include "reneg/harness/world.hpp"
#include "reneg/reward/reward.hpp"
#include "reneg/sampling/sampling.hpp"

namespace reneg::testing {

/// Small world and a briefly pretrained model shared by the tests of one
/// process. Quality is poor but sufficient for shape and property checks.
struct SmallSetup {
    harness::World world;
    sampling::DiffusionModel model;
    reward::MixtureReward reward;
};

inline const SmallSetup& small_setup() {
    static const SmallSetup setup = [] {
        harness::WorldSpec spec;
        spec.samples_per_class = 250;
        spec.seed = 11;
        auto world = harness::generate_world(spec);
        const auto schedule = diffusion::build_schedule(100, 1e-3, 0.2);
        diffusion::PretrainConfig pc;
        pc.steps = 300;
        pc.batch_size = 128;
        pc.seed = 12;
        const diffusion::NetworkShape shape{spec.data_dim, spec.cond_dim, 16, 32};
        auto net = diffusion::pretrain(diffusion::ScoreNetwork::create(shape, 13), world.encoder, schedule,
                                       world.training, pc)
                       .network;
        sampling::DiffusionModel model{net, world.encoder, schedule};
        reward::MixtureReward reward(world.mixtures);
        return SmallSetup{std::move(world), std::move(model), std::move(reward)};
    }();
    return setup;
}

}  // namespace reneg::testing
