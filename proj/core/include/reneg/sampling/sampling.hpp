// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "reneg/autodiff/tensor.hpp"
#include "reneg/diffusion/encoder.hpp"
#include "reneg/diffusion/schedule.hpp"
#include "reneg/diffusion/score_network.hpp"

namespace reneg::sampling {

enum class Solver { ddpm, ddim };

const char* solver_name(Solver solver);
Solver parse_solver(const std::string& name);

/// A frozen generative world: noise predictor, condition encoder and the
/// training noise schedule. Copies share parameter storage.
struct DiffusionModel {
    diffusion::ScoreNetwork network;
    diffusion::ConditionEncoder encoder;
    diffusion::NoiseSchedule schedule;
};

struct GuidanceConfig {
    double gamma = 7.5;
    /// Embedding used in the negative slot, [d_e]. May be a tape leaf.
    ad::Tensor negative;
    Solver solver = Solver::ddim;
    int steps = 30;
    /// When set, replaces `gamma` in the differentiable part of the chain
    /// (scalar tape leaf for the learnable-scale variant).
    std::optional<ad::Tensor> gamma_param;

    /// Throws InvalidArgument unless gamma is finite and >= 0 and
    /// 1 <= steps <= schedule_steps.
    void validate(int schedule_steps) const;
};

/// Guidance with the null embedding in the negative slot.
GuidanceConfig null_guidance(const diffusion::ConditionEncoder& encoder, double gamma = 7.5,
                             Solver solver = Solver::ddim, int steps = 30);

// Single-step operators. Index arguments refer to `schedule`; t = 0 is
// accepted where alpha_bar(0) == 1 gives a well-defined limit.

/// x_t = sqrt(alpha_bar_t) x_0 + sqrt(1 - alpha_bar_t) eps.
ad::Tensor add_noise(const ad::Tensor& x0, const ad::Tensor& eps, int t, const diffusion::NoiseSchedule& schedule);

/// eps_neg + gamma (eps_cond - eps_neg). Returns eps_cond itself at gamma == 1
/// and eps_neg itself at gamma == 0, so both limits hold bit-exactly.
ad::Tensor cfg_combine(const ad::Tensor& eps_neg, const ad::Tensor& eps_cond, double gamma);
/// Same with a scalar tensor scale (differentiable in gamma).
ad::Tensor cfg_combine(const ad::Tensor& eps_neg, const ad::Tensor& eps_cond, const ad::Tensor& gamma);

/// One-step estimate x_hat_0 = (x_t - sqrt(1 - alpha_bar_t) eps_hat) / sqrt(alpha_bar_t).
ad::Tensor predict_x0(const ad::Tensor& x_t, const ad::Tensor& eps_hat, int t,
                      const diffusion::NoiseSchedule& schedule);

/// Ancestral step t -> t-1: posterior mean from the eps parameterisation plus
/// sigma_t * noise with sigma_t^2 = beta_t (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t).
/// The noise term is dropped at t == 1.
ad::Tensor ddpm_step(const ad::Tensor& x_t, const ad::Tensor& eps_hat, int t, const diffusion::NoiseSchedule& schedule,
                     const ad::Tensor& noise);

/// Deterministic (eta = 0) step t -> t_prev:
/// sqrt(alpha_bar_prev) x_hat_0 + sqrt(1 - alpha_bar_prev) eps_hat.
ad::Tensor ddim_step(const ad::Tensor& x_t, const ad::Tensor& eps_hat, int t, int t_prev,
                     const diffusion::NoiseSchedule& schedule);

/// Noise predictor over an inference schedule: (x [B, d_x], cond [B, d_e], t) -> eps.
using NoisePredictor = std::function<ad::Tensor(const ad::Tensor& x, const ad::Tensor& cond, int t)>;

/// Wraps a score network evaluated on `schedule` (whose time inputs the
/// network sees). An empty `params` uses the network's own parameters.
NoisePredictor network_predictor(const diffusion::ScoreNetwork& network, const diffusion::NoiseSchedule& schedule,
                                 std::vector<ad::Tensor> params = {});

struct TrajectoryPoint {
    int t = 0;
    ad::Tensor x;  // [B, d_x]
};

struct SampleResult {
    ad::Tensor x0;
    std::vector<TrajectoryPoint> trajectory;  // x_T first, x_0 last
};

/// Per-row starting noise x_T ~ N(0, I) from each seed.
ad::Tensor initial_noise(std::span<const std::uint64_t> seeds, std::size_t data_dim);

/// Guided reverse chain over `schedule` from x_T to x_0. Each row has its own
/// seed-derived RNG stream: x_T first, then one DDPM noise draw per step.
/// cond and negative are [B, d_e]. Nothing is detached: if the inputs are on
/// a tape the whole chain is differentiable.
SampleResult sample_chain(const NoisePredictor& eps, const diffusion::NoiseSchedule& schedule, const ad::Tensor& cond,
                          const ad::Tensor& negative, double gamma, Solver solver,
                          std::span<const std::uint64_t> seeds, std::size_t data_dim,
                          bool keep_trajectory = true);

/// Unguided chain: every step uses eps(x, cond, t) alone.
SampleResult sample_chain_unguided(const NoisePredictor& eps, const diffusion::NoiseSchedule& schedule,
                                   const ad::Tensor& cond, Solver solver, std::span<const std::uint64_t> seeds,
                                   std::size_t data_dim, bool keep_trajectory = true);

/// Guided sampling for one prompt per row: eps_c = eps(x, E(c), t) and
/// eps_n = eps(x, n, t) combined by cfg_combine, advanced with the configured
/// solver on the training schedule resampled to guidance.steps.
SampleResult sample(const DiffusionModel& model, std::span<const int> prompts, const GuidanceConfig& guidance,
                    std::span<const std::uint64_t> seeds, bool keep_trajectory = true);

/// Convenience for a single prompt and seed.
SampleResult sample(const DiffusionModel& model, int prompt, const GuidanceConfig& guidance, std::uint64_t seed);

/// Conditional-only sampling (no second branch), for comparison with guided runs.
SampleResult sample_conditional(const DiffusionModel& model, std::span<const int> prompts, Solver solver, int steps,
                                std::span<const std::uint64_t> seeds);

/// Runs the guided chain with gradients severed from x_T down to state index
/// t_stop + 1, then applies one differentiable guided prediction at that
/// state followed by predict_x0. With t_stop == steps - 1 the chain is just
/// the prediction from x_T; with t_stop == 0 and DDIM the result equals the
/// fully sampled x_0. The negative embedding (and gamma_param) only reach the
/// result through that last step.
///
/// `prefix_negative`, when given, is used in place of the negative during the
/// severed steps; it exists so callers can verify that no gradient flows
/// through them.
ad::Tensor sample_to_t_then_x0hat(const DiffusionModel& model, std::span<const int> prompts,
                                  const GuidanceConfig& guidance, int t_stop, std::span<const std::uint64_t> seeds,
                                  const ad::Tensor* prefix_negative = nullptr);

}  // namespace reneg::sampling
