// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "reneg/common/optimizer.hpp"

#include <cmath>
#include <numbers>

#include "reneg/error.hpp"

namespace reneg {

AdamW::AdamW(AdamWConfig config, const std::vector<ad::Tensor>& params) : config_(config) {
    for (const auto& p : params) {
        m_.emplace_back(p.numel(), 0.0);
        v_.emplace_back(p.numel(), 0.0);
    }
}

void AdamW::step(std::vector<ad::Tensor>& params, const std::vector<ad::Tensor>& grads, double learning_rate) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
        throw InvalidArgument("AdamW: parameter/gradient count mismatch");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (grads[k].numel() != params[k].numel()) throw InvalidArgument("AdamW: gradient shape mismatch");
        std::vector<double> p = params[k].values();
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double g = grads[k][i];
            m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
            v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
            const double update = (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.eps);
            p[i] -= learning_rate * (update + config_.weight_decay * p[i]);
        }
        params[k] = ad::Tensor(params[k].shape(), std::move(p));
    }
}

double cosine_learning_rate(double base_lr, std::size_t step, std::size_t total_steps) {
    if (total_steps == 0) return base_lr;
    const double progress = static_cast<double>(step) / static_cast<double>(total_steps);
    return 0.5 * base_lr * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace reneg
