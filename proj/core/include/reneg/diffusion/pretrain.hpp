// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "reneg/autodiff/tensor.hpp"
#include "reneg/diffusion/encoder.hpp"
#include "reneg/diffusion/schedule.hpp"
#include "reneg/diffusion/score_network.hpp"

namespace reneg::diffusion {

/// Labelled training samples: prompts[i] is the class of row i of x0.
struct Dataset {
    std::vector<int> prompts;
    ad::Tensor x0;  // [n, d_x]

    std::size_t size() const noexcept { return prompts.size(); }
};

struct PretrainConfig {
    std::size_t steps = 4000;
    double learning_rate = 1e-3;
    std::size_t batch_size = 256;
    /// Probability that a sample's condition is replaced by the null embedding.
    double p_drop = 0.1;
    std::uint64_t seed = 0;
};

struct PretrainResult {
    ScoreNetwork network;
    std::vector<double> loss_curve;
};

/// Minimises the noise reconstruction loss mean ||eps_theta(x_t, E(c), t) - eps||^2
/// with Adam and uniform t in [1, T]. Each sample's condition is dropped to
/// the null embedding with probability p_drop. Deterministic given the seed.
PretrainResult pretrain(const ScoreNetwork& init, const ConditionEncoder& encoder, const NoiseSchedule& schedule,
                        const Dataset& dataset, const PretrainConfig& config);

}  // namespace reneg::diffusion
