// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "reneg/autodiff/tensor.hpp"

namespace reneg {

struct AdamWConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    /// Decoupled decay, applied as p -= lr * weight_decay * p.
    double weight_decay = 0.0;
};

/// Adam with decoupled weight decay over a fixed list of tensors. Minimises:
/// step() moves parameters against the supplied gradients.
class AdamW {
public:
    AdamW(AdamWConfig config, const std::vector<ad::Tensor>& params);

    void step(std::vector<ad::Tensor>& params, const std::vector<ad::Tensor>& grads, double learning_rate);

    std::size_t steps_taken() const noexcept { return t_; }

private:
    AdamWConfig config_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    std::size_t t_ = 0;
};

/// Cosine decay from base_lr at step 0 to 0 at total_steps.
double cosine_learning_rate(double base_lr, std::size_t step, std::size_t total_steps);

}  // namespace reneg
