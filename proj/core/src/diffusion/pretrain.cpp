// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "reneg/diffusion/pretrain.hpp"

#include <cmath>

#include "reneg/autodiff/ops.hpp"
#include "reneg/common/optimizer.hpp"
#include "reneg/common/rng.hpp"
#include "reneg/error.hpp"

namespace reneg::diffusion {

PretrainResult pretrain(const ScoreNetwork& init, const ConditionEncoder& encoder, const NoiseSchedule& schedule,
                        const Dataset& dataset, const PretrainConfig& config) {
    if (dataset.size() == 0) throw InvalidArgument("pretrain: empty dataset");
    if (dataset.x0.rank() != 2 || dataset.x0.dim(0) != dataset.size()) {
        throw InvalidArgument("pretrain: dataset rows do not match prompt labels");
    }
    if (config.batch_size == 0) throw InvalidArgument("pretrain: batch_size must be positive");
    if (config.p_drop < 0.0 || config.p_drop > 1.0) throw InvalidArgument("pretrain: p_drop outside [0, 1]");

    const std::size_t d = dataset.x0.dim(1);
    const std::size_t batch = config.batch_size;
    const int T = schedule.steps();

    std::vector<ad::Tensor> params = init.parameters();
    AdamW optimizer(AdamWConfig{}, params);
    Rng rng(config.seed);
    PretrainResult result{init, {}};
    result.loss_curve.reserve(config.steps);

    std::vector<int> conds(batch);
    std::vector<double> times(batch), xt(batch * d), eps(batch * d);
    for (std::size_t step = 0; step < config.steps; ++step) {
        for (std::size_t r = 0; r < batch; ++r) {
            const auto i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(dataset.size()) - 1));
            const int t = static_cast<int>(rng.uniform_int(1, T));
            const bool drop = rng.uniform() < config.p_drop;
            conds[r] = drop ? kNullPrompt : dataset.prompts[i];
            times[r] = schedule.time(t);
            const double ab = schedule.alpha_bar(t);
            for (std::size_t j = 0; j < d; ++j) {
                eps[r * d + j] = rng.normal();
                xt[r * d + j] = std::sqrt(ab) * dataset.x0.at(i, j) + std::sqrt(1.0 - ab) * eps[r * d + j];
            }
        }
        ad::Tape tape;
        std::vector<ad::Tensor> bound;
        bound.reserve(params.size());
        for (const auto& p : params) bound.push_back(tape.leaf(p));
        const ad::Tensor x = ad::Tensor::matrix(batch, d, xt);
        const ad::Tensor target = ad::Tensor::matrix(batch, d, eps);
        const ad::Tensor pred = result.network.predict(x, encoder.encode_batch(conds), times, bound);
        const ad::Tensor loss = ad::mean(ad::square(ad::sub(pred, target)));
        const auto grads = tape.backward(loss);

        std::vector<ad::Tensor> g;
        g.reserve(bound.size());
        for (const auto& b : bound) g.push_back(grads.at(*b.node_id()));
        optimizer.step(params, g, config.learning_rate);
        result.network = result.network.with_parameters(params);
        result.loss_curve.push_back(loss.item());
    }
    return result;
}

}  // namespace reneg::diffusion
