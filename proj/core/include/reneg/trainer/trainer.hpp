// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "reneg/reward/reward.hpp"
#include "reneg/sampling/sampling.hpp"
#include "reneg/trainer/embedding.hpp"

namespace reneg::trainer {

struct GlobalTrainConfig {
    std::size_t total_steps = 4000;
    double learning_rate = 5e-3;
    std::size_t batch_size = 64;
    int inference_steps = 30;
    /// t_stop is drawn uniformly from [t_window_min, t_window_max].
    int t_window_min = 0;
    int t_window_max = 10;
    double gamma = 7.5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double weight_decay = 0.01;
    /// Trains the guidance scale jointly with n.
    bool learn_gamma = false;
    /// Consecutive non-finite steps tolerated before the run aborts.
    std::size_t max_nonfinite_steps = 10;
    std::uint64_t seed = 0;

    /// Throws InvalidArgument on out-of-range fields.
    void validate(int schedule_steps) const;
};

/// Window upper end for an inference horizon: T / 3 (10 at T = 30).
int default_window_max(int inference_steps);

struct GlobalTrainResult {
    NegativeEmbedding embedding;
    /// Mean batch reward per step; NaN where the step was skipped.
    std::vector<double> reward_curve;
    std::vector<std::size_t> skipped_steps;
    /// Final scale when learn_gamma is set, otherwise the constant.
    double gamma = 0.0;
};

/// Learns a global negative embedding by ascending the mean reward of
/// one-step predictions x_hat_0 (see sampling::sample_to_t_then_x0hat) over
/// random prompts from `prompt_set`. Only n (and gamma with learn_gamma) is a
/// leaf; the model is never modified. Deterministic given config.seed.
GlobalTrainResult train_global(const sampling::DiffusionModel& model, const reward::RewardModel& reward,
                               std::span<const int> prompt_set, const NegativeEmbedding& init,
                               const GlobalTrainConfig& config);

struct PerSampleConfig {
    std::size_t max_steps = 10;
    std::size_t patience = 3;
    double learning_rate = 2e-2;
    /// Reuse one x_T for every iteration; otherwise resample each iteration.
    bool fixed_noise = true;
    /// Verbatim listing semantics: J_best starts at 0, the final n is
    /// returned, and x_T is resampled every iteration.
    bool compat_paper = false;
    /// Prediction point of the tuning objective. 0 makes the objective the
    /// reward of the fully sampled x_0 under DDIM.
    int t_stop = 0;
    int inference_steps = 30;
    double gamma = 7.5;
    std::uint64_t seed = 0;

    void validate(int schedule_steps) const;
};

struct TuningStep {
    std::size_t iteration = 0;  // 1-based
    double reward = 0.0;
    double best_reward = 0.0;
    std::size_t patience_counter = 0;
    bool improved = false;
};

struct TuningState {
    double best_reward = -std::numeric_limits<double>::infinity();
    std::size_t patience_counter = 0;
    NegativeEmbedding best_snapshot;
    std::vector<TuningStep> log;
};

struct PerSampleResult {
    NegativeEmbedding embedding;
    /// Objective of the starting embedding on the first iteration's noise.
    double initial_reward = 0.0;
    TuningState state;
    /// True when the starting embedding was not globally trained.
    bool started_from_untrained = false;
};

/// Per-sample refinement with patience. `noise_seed` fixes x_T (when
/// config.fixed_noise), so the result can be compared with the global
/// embedding on exactly the same starting noise.
PerSampleResult train_per_sample(const sampling::DiffusionModel& model, const reward::RewardModel& reward, int prompt,
                                 std::uint64_t noise_seed, const NegativeEmbedding& global,
                                 const PerSampleConfig& config);

struct EvalConfig {
    std::size_t n_seeds = 256;
    std::uint64_t seed = 0;
    double gamma = 7.5;
    sampling::Solver solver = sampling::Solver::ddim;
    int steps = 30;
};

/// Seed of evaluation row `index`, shared by every prompt and embedding.
std::uint64_t eval_seed(const EvalConfig& config, std::size_t index);

struct EvalReport {
    std::vector<int> prompts;
    std::vector<double> per_prompt_mean;
    /// rewards[p][s] for prompt p and seed s.
    std::vector<std::vector<double>> rewards;
    double overall_mean = 0.0;
};

/// Full guided sampling of every prompt over config.n_seeds shared seeds.
EvalReport evaluate(const sampling::DiffusionModel& model, const reward::RewardModel& reward,
                    const NegativeEmbedding& negative, std::span<const int> prompts, const EvalConfig& config);

/// Same with a separate negative per (prompt, seed): negatives[p][s].
EvalReport evaluate_assigned(const sampling::DiffusionModel& model, const reward::RewardModel& reward,
                             const std::vector<std::vector<NegativeEmbedding>>& negatives, std::span<const int> prompts,
                             const EvalConfig& config);

/// Fraction of entries where a > b, ties counting one half.
double win_rate(std::span<const double> a, std::span<const double> b);

}  // namespace reneg::trainer
