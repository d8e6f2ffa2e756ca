// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "reneg/trainer/trainer.hpp"

#include <cmath>
#include <functional>
#include <string>

#include "reneg/autodiff/ops.hpp"
#include "reneg/autodiff/tape.hpp"
#include "reneg/common/optimizer.hpp"
#include "reneg/common/parallel.hpp"
#include "reneg/common/rng.hpp"
#include "reneg/error.hpp"

namespace reneg::trainer {
namespace {

void require_prompts(std::span<const int> prompts, const sampling::DiffusionModel& model,
                     const reward::RewardModel& reward) {
    if (prompts.empty()) throw InvalidArgument("prompt set is empty");
    for (int p : prompts) {
        model.encoder.require_prompt(p);
        reward.require_prompt(p);
    }
}

// Gradient of `leaf` in `grads`, or zeros when the root did not depend on it.
ad::Tensor gradient_of(const ad::GradientMap& grads, const ad::Tensor& leaf) {
    const auto it = grads.find(*leaf.node_id());
    return it == grads.end() ? ad::Tensor::zeros(leaf.shape()) : it->second;
}

}  // namespace

void GlobalTrainConfig::validate(int schedule_steps) const {
    if (total_steps == 0) throw InvalidArgument("total_steps must be positive");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw InvalidArgument("learning_rate must be >= 0");
    if (batch_size == 0) throw InvalidArgument("batch_size must be positive");
    if (inference_steps < 1 || inference_steps > schedule_steps) {
        throw InvalidArgument("inference_steps " + std::to_string(inference_steps) + " outside [1, " +
                              std::to_string(schedule_steps) + "]");
    }
    if (t_window_min < 0 || t_window_min > t_window_max || t_window_max >= inference_steps) {
        throw InvalidArgument("t_stop window [" + std::to_string(t_window_min) + ", " + std::to_string(t_window_max) +
                              "] must satisfy 0 <= min <= max < inference_steps");
    }
    if (!std::isfinite(gamma) || gamma < 0.0) throw InvalidArgument("gamma must be finite and >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw InvalidArgument("betas must lie in [0, 1)");
    if (!(weight_decay >= 0.0)) throw InvalidArgument("weight_decay must be >= 0");
    if (max_nonfinite_steps == 0) throw InvalidArgument("max_nonfinite_steps must be positive");
}

int default_window_max(int inference_steps) { return inference_steps / 3; }

GlobalTrainResult train_global(const sampling::DiffusionModel& model, const reward::RewardModel& reward,
                               std::span<const int> prompt_set, const NegativeEmbedding& init,
                               const GlobalTrainConfig& config) {
    config.validate(model.schedule.steps());
    require_compatible(init, model.encoder);
    require_prompts(prompt_set, model, reward);

    std::vector<ad::Tensor> params = {init.vector.detach()};
    if (config.learn_gamma) params.push_back(ad::Tensor::scalar(config.gamma));
    AdamW opt({config.beta1, config.beta2, 1e-8, config.weight_decay}, params);

    GlobalTrainResult result;
    result.reward_curve.reserve(config.total_steps);
    std::size_t consecutive_bad = 0;
    std::vector<int> prompts(config.batch_size);
    std::vector<std::uint64_t> seeds(config.batch_size);
    for (std::size_t step = 0; step < config.total_steps; ++step) {
        const std::uint64_t step_seed = derive_seed(config.seed, step);
        Rng rng(derive_seed(step_seed, 0));
        for (std::size_t b = 0; b < config.batch_size; ++b) {
            prompts[b] = prompt_set[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(prompt_set.size()) - 1))];
            seeds[b] = derive_seed(step_seed, b + 1);
        }
        const int t_stop = static_cast<int>(rng.uniform_int(config.t_window_min, config.t_window_max));

        ad::Tape tape;
        sampling::GuidanceConfig guidance;
        guidance.gamma = config.gamma;
        guidance.negative = tape.leaf(params[0]);
        guidance.solver = sampling::Solver::ddim;
        guidance.steps = config.inference_steps;
        if (config.learn_gamma) guidance.gamma_param = tape.leaf(params[1]);

        const ad::Tensor x0_hat = sampling::sample_to_t_then_x0hat(model, prompts, guidance, t_stop, seeds);
        const reward::BatchReward r = reward::batch_reward(reward, prompts, x0_hat);
        const double mean_reward = r.mean.item();

        std::vector<ad::Tensor> grads;
        bool finite = std::isfinite(mean_reward);
        if (finite) {
            const ad::GradientMap g = tape.backward(ad::neg(r.mean));
            grads.push_back(gradient_of(g, guidance.negative));
            if (config.learn_gamma) grads.push_back(gradient_of(g, *guidance.gamma_param));
            for (const auto& t : grads) finite = finite && t.all_finite();
        }
        if (!finite) {
            result.reward_curve.push_back(std::nan(""));
            result.skipped_steps.push_back(step);
            if (++consecutive_bad >= config.max_nonfinite_steps) {
                throw Error("train_global: " + std::to_string(consecutive_bad) +
                            " consecutive non-finite steps, aborting at step " + std::to_string(step));
            }
            continue;
        }
        consecutive_bad = 0;
        result.reward_curve.push_back(mean_reward);
        opt.step(params, grads, cosine_learning_rate(config.learning_rate, step, config.total_steps));
    }

    result.embedding = {params[0], model.encoder.fingerprint(), Provenance::global_trained, {}, {}};
    result.gamma = config.learn_gamma ? params[1].item() : config.gamma;
    return result;
}

void PerSampleConfig::validate(int schedule_steps) const {
    if (max_steps < 1) throw InvalidArgument("max_steps must be >= 1");
    if (patience < 1) throw InvalidArgument("patience must be >= 1");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw InvalidArgument("learning_rate must be >= 0");
    if (inference_steps < 1 || inference_steps > schedule_steps) {
        throw InvalidArgument("inference_steps " + std::to_string(inference_steps) + " outside [1, " +
                              std::to_string(schedule_steps) + "]");
    }
    if (t_stop < 0 || t_stop >= inference_steps) throw InvalidArgument("t_stop must lie in [0, inference_steps)");
    if (!std::isfinite(gamma) || gamma < 0.0) throw InvalidArgument("gamma must be finite and >= 0");
}

PerSampleResult train_per_sample(const sampling::DiffusionModel& model, const reward::RewardModel& reward, int prompt,
                                 std::uint64_t noise_seed, const NegativeEmbedding& global,
                                 const PerSampleConfig& config) {
    config.validate(model.schedule.steps());
    require_compatible(global, model.encoder);
    const int prompt_list[] = {prompt};
    require_prompts(prompt_list, model, reward);

    PerSampleResult result;
    result.started_from_untrained = global.provenance != Provenance::global_trained;
    TuningState& state = result.state;
    if (config.compat_paper) state.best_reward = 0.0;
    state.best_snapshot = global;
    state.best_snapshot.provenance = Provenance::per_sample;

    const bool fixed = config.fixed_noise && !config.compat_paper;
    std::vector<ad::Tensor> params = {global.vector.detach()};
    AdamW opt({0.9, 0.999, 1e-8, 0.0}, params);
    std::size_t consecutive_bad = 0;

    for (std::size_t it = 1; it <= config.max_steps; ++it) {
        const std::uint64_t seed = fixed || it == 1 ? noise_seed : derive_seed(derive_seed(config.seed, noise_seed), it);
        const std::uint64_t seeds[] = {seed};

        ad::Tape tape;
        sampling::GuidanceConfig guidance;
        guidance.gamma = config.gamma;
        guidance.negative = tape.leaf(params[0]);
        guidance.steps = config.inference_steps;
        const ad::Tensor x0_hat = sampling::sample_to_t_then_x0hat(model, prompt_list, guidance, config.t_stop, seeds);
        const reward::BatchReward r = reward::batch_reward(reward, prompt_list, x0_hat);
        const double J = r.mean.item();
        if (it == 1) result.initial_reward = J;

        TuningStep entry{it, J, state.best_reward, 0, false};
        if (std::isfinite(J) && J > state.best_reward) {
            state.best_reward = J;
            state.patience_counter = 0;
            state.best_snapshot.vector = params[0];
            entry.improved = true;
        } else {
            ++state.patience_counter;
        }
        entry.best_reward = state.best_reward;
        entry.patience_counter = state.patience_counter;
        state.log.push_back(entry);
        if (!entry.improved && state.patience_counter >= config.patience) break;

        if (!std::isfinite(J)) {
            if (++consecutive_bad >= 10) throw Error("train_per_sample: 10 consecutive non-finite rewards");
            continue;
        }
        consecutive_bad = 0;
        const ad::GradientMap g = tape.backward(ad::neg(r.mean));
        const std::vector<ad::Tensor> grads = {gradient_of(g, guidance.negative)};
        if (!grads[0].all_finite()) continue;
        opt.step(params, grads, config.learning_rate);
    }

    result.embedding = state.best_snapshot;
    if (config.compat_paper) result.embedding.vector = params[0];
    return result;
}

std::uint64_t eval_seed(const EvalConfig& config, std::size_t index) { return derive_seed(config.seed, index); }

namespace {

using NegativeFor = std::function<const NegativeEmbedding&(std::size_t prompt_index, std::size_t seed_index)>;

EvalReport evaluate_impl(const sampling::DiffusionModel& model, const reward::RewardModel& reward,
                         const NegativeFor& negative_for, std::span<const int> prompts, const EvalConfig& config) {
    if (config.n_seeds == 0) throw InvalidArgument("evaluate needs n_seeds >= 1");
    require_prompts(prompts, model, reward);
    if (!std::isfinite(config.gamma) || config.gamma < 0.0) throw InvalidArgument("gamma must be finite and >= 0");
    const diffusion::NoiseSchedule schedule = model.schedule.resample(config.steps);
    const sampling::NoisePredictor eps = sampling::network_predictor(model.network, schedule);

    std::vector<std::uint64_t> seeds(config.n_seeds);
    for (std::size_t s = 0; s < seeds.size(); ++s) seeds[s] = eval_seed(config, s);
    // Validate every negative up front so a mismatch fails before any work.
    for (std::size_t p = 0; p < prompts.size(); ++p)
        for (std::size_t s = 0; s < seeds.size(); ++s) require_compatible(negative_for(p, s), model.encoder);

    EvalReport report;
    report.prompts.assign(prompts.begin(), prompts.end());
    report.rewards.resize(prompts.size());
    report.per_prompt_mean.resize(prompts.size());
    parallel_for(prompts.size(), [&](std::size_t p) {
        const std::vector<int> rows(seeds.size(), prompts[p]);
        std::vector<double> neg;
        neg.reserve(seeds.size() * model.encoder.dim());
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            const auto& v = negative_for(p, s).vector.values();
            neg.insert(neg.end(), v.begin(), v.end());
        }
        const ad::Tensor negative = ad::Tensor::matrix(seeds.size(), model.encoder.dim(), std::move(neg));
        const auto result = sampling::sample_chain(eps, schedule, model.encoder.encode_batch(rows), negative,
                                                   config.gamma, config.solver, seeds, model.network.shape().data_dim,
                                                   false);
        report.rewards[p] = reward.score(rows, result.x0).values();
        double sum = 0.0;
        for (double v : report.rewards[p]) sum += v;
        report.per_prompt_mean[p] = sum / static_cast<double>(seeds.size());
    });
    double total = 0.0;
    for (double m : report.per_prompt_mean) total += m;
    report.overall_mean = total / static_cast<double>(prompts.size());
    return report;
}

}  // namespace

EvalReport evaluate(const sampling::DiffusionModel& model, const reward::RewardModel& reward,
                    const NegativeEmbedding& negative, std::span<const int> prompts, const EvalConfig& config) {
    return evaluate_impl(
        model, reward, [&](std::size_t, std::size_t) -> const NegativeEmbedding& { return negative; }, prompts,
        config);
}

EvalReport evaluate_assigned(const sampling::DiffusionModel& model, const reward::RewardModel& reward,
                             const std::vector<std::vector<NegativeEmbedding>>& negatives, std::span<const int> prompts,
                             const EvalConfig& config) {
    if (negatives.size() != prompts.size()) throw InvalidArgument("evaluate_assigned: one row of negatives per prompt");
    for (const auto& row : negatives) {
        if (row.size() != config.n_seeds) throw InvalidArgument("evaluate_assigned: one negative per seed");
    }
    return evaluate_impl(
        model, reward, [&](std::size_t p, std::size_t s) -> const NegativeEmbedding& { return negatives[p][s]; },
        prompts, config);
}

double win_rate(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw InvalidArgument("win_rate: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " entries");
    }
    if (a.empty()) throw InvalidArgument("win_rate: no entries");
    double wins = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) wins += a[i] > b[i] ? 1.0 : (a[i] == b[i] ? 0.5 : 0.0);
    return wins / static_cast<double>(a.size());
}

}  // namespace reneg::trainer
