// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "reneg/sampling/sampling.hpp"

#include <cmath>
#include <string>

#include "reneg/autodiff/ops.hpp"
#include "reneg/common/rng.hpp"
#include "reneg/error.hpp"

namespace reneg::sampling {
namespace {

using diffusion::NoiseSchedule;

void require_index(int t, const NoiseSchedule& schedule, const char* op) {
    if (t < 0 || t > schedule.steps()) {
        throw InvalidArgument(std::string(op) + ": timestep " + std::to_string(t) + " outside [0, " +
                              std::to_string(schedule.steps()) + "]");
    }
}

void require_same(const char* op, const ad::Tensor& a, const ad::Tensor& b) {
    if (a.shape() != b.shape()) {
        throw InvalidArgument(std::string(op) + ": shape mismatch " + ad::shape_string(a.shape()) + " vs " +
                              ad::shape_string(b.shape()));
    }
}

class RowStreams {
public:
    RowStreams(std::span<const std::uint64_t> seeds, std::size_t dim) : dim_(dim) {
        rngs_.reserve(seeds.size());
        for (auto s : seeds) rngs_.emplace_back(s);
    }

    ad::Tensor draw() {
        std::vector<double> v(rngs_.size() * dim_);
        for (std::size_t r = 0; r < rngs_.size(); ++r)
            for (std::size_t j = 0; j < dim_; ++j) v[r * dim_ + j] = rngs_[r].normal();
        return ad::Tensor::matrix(rngs_.size(), dim_, std::move(v));
    }

private:
    std::size_t dim_;
    std::vector<Rng> rngs_;
};

ad::Tensor guided_eps(const NoisePredictor& eps, const ad::Tensor& x, const ad::Tensor& cond,
                      const ad::Tensor& negative, double gamma, int t) {
    const ad::Tensor eps_cond = eps(x, cond, t);
    const ad::Tensor eps_neg = eps(x, negative, t);
    return cfg_combine(eps_neg, eps_cond, gamma);
}

ad::Tensor advance(Solver solver, const ad::Tensor& x, const ad::Tensor& e, int t, const NoiseSchedule& schedule,
                   RowStreams& streams) {
    if (solver == Solver::ddim) return ddim_step(x, e, t, t - 1, schedule);
    const ad::Tensor noise = t > 1 ? streams.draw() : ad::Tensor::zeros(x.shape());
    return ddpm_step(x, e, t, schedule, noise);
}

void require_rows(const ad::Tensor& m, std::size_t rows, const char* what) {
    if (m.rank() != 2 || m.dim(0) != rows) {
        throw InvalidArgument(std::string(what) + " must have one row per sample, got " + ad::shape_string(m.shape()));
    }
}

}  // namespace

const char* solver_name(Solver solver) { return solver == Solver::ddim ? "ddim" : "ddpm"; }

Solver parse_solver(const std::string& name) {
    if (name == "ddim") return Solver::ddim;
    if (name == "ddpm") return Solver::ddpm;
    throw InvalidArgument("unknown solver '" + name + "' (expected ddim or ddpm)");
}

void GuidanceConfig::validate(int schedule_steps) const {
    if (!std::isfinite(gamma) || gamma < 0.0) throw InvalidArgument("guidance scale must be finite and >= 0");
    if (steps < 1 || steps > schedule_steps) {
        throw InvalidArgument("guidance steps " + std::to_string(steps) + " outside [1, " +
                              std::to_string(schedule_steps) + "]");
    }
    if (negative.rank() != 1) throw InvalidArgument("negative embedding must be a vector");
}

GuidanceConfig null_guidance(const diffusion::ConditionEncoder& encoder, double gamma, Solver solver, int steps) {
    GuidanceConfig g;
    g.gamma = gamma;
    g.negative = encoder.null_embedding();
    g.solver = solver;
    g.steps = steps;
    return g;
}

ad::Tensor add_noise(const ad::Tensor& x0, const ad::Tensor& eps, int t, const NoiseSchedule& schedule) {
    require_same("add_noise", x0, eps);
    require_index(t, schedule, "add_noise");
    const double ab = schedule.alpha_bar(t);
    return ad::add(ad::scale(x0, std::sqrt(ab)), ad::scale(eps, std::sqrt(1.0 - ab)));
}

ad::Tensor cfg_combine(const ad::Tensor& eps_neg, const ad::Tensor& eps_cond, double gamma) {
    require_same("cfg_combine", eps_neg, eps_cond);
    if (gamma == 1.0) return eps_cond;
    if (gamma == 0.0) return eps_neg;
    return ad::add(eps_neg, ad::scale(ad::sub(eps_cond, eps_neg), gamma));
}

ad::Tensor cfg_combine(const ad::Tensor& eps_neg, const ad::Tensor& eps_cond, const ad::Tensor& gamma) {
    require_same("cfg_combine", eps_neg, eps_cond);
    if (gamma.numel() != 1) throw InvalidArgument("cfg_combine: gamma must be a scalar");
    const ad::Tensor g =
        ad::reshape(ad::broadcast_rows(ad::reshape(gamma, {1}), eps_neg.numel()), eps_neg.shape());
    return ad::add(eps_neg, ad::mul(g, ad::sub(eps_cond, eps_neg)));
}

ad::Tensor predict_x0(const ad::Tensor& x_t, const ad::Tensor& eps_hat, int t, const NoiseSchedule& schedule) {
    require_same("predict_x0", x_t, eps_hat);
    require_index(t, schedule, "predict_x0");
    const double ab = schedule.alpha_bar(t);
    if (!(ab > 0.0)) throw InvalidArgument("predict_x0: alpha_bar is zero");
    return ad::scale(ad::sub(x_t, ad::scale(eps_hat, std::sqrt(1.0 - ab))), 1.0 / std::sqrt(ab));
}

ad::Tensor ddpm_step(const ad::Tensor& x_t, const ad::Tensor& eps_hat, int t, const NoiseSchedule& schedule,
                     const ad::Tensor& noise) {
    require_same("ddpm_step", x_t, eps_hat);
    require_same("ddpm_step", x_t, noise);
    schedule.require_step(t, "ddpm_step");
    const double beta = schedule.beta(t);
    const double ab = schedule.alpha_bar(t);
    const double ab_prev = schedule.alpha_bar(t - 1);
    const double coef = beta / std::sqrt(1.0 - ab);
    const ad::Tensor mean = ad::scale(ad::sub(x_t, ad::scale(eps_hat, coef)), 1.0 / std::sqrt(1.0 - beta));
    if (t == 1) return mean;
    const double sigma = std::sqrt(beta * (1.0 - ab_prev) / (1.0 - ab));
    return ad::add(mean, ad::scale(noise, sigma));
}

ad::Tensor ddim_step(const ad::Tensor& x_t, const ad::Tensor& eps_hat, int t, int t_prev,
                     const NoiseSchedule& schedule) {
    require_same("ddim_step", x_t, eps_hat);
    schedule.require_step(t, "ddim_step");
    if (t_prev < 0 || t_prev >= t) {
        throw InvalidArgument("ddim_step: t_prev " + std::to_string(t_prev) + " must lie in [0, " +
                              std::to_string(t) + ")");
    }
    const double ab_prev = schedule.alpha_bar(t_prev);
    const ad::Tensor x0 = predict_x0(x_t, eps_hat, t, schedule);
    return ad::add(ad::scale(x0, std::sqrt(ab_prev)), ad::scale(eps_hat, std::sqrt(1.0 - ab_prev)));
}

NoisePredictor network_predictor(const diffusion::ScoreNetwork& network, const NoiseSchedule& schedule,
                                 std::vector<ad::Tensor> params) {
    if (params.empty()) params = network.parameters();
    return [network, schedule, params = std::move(params)](const ad::Tensor& x, const ad::Tensor& cond, int t) {
        schedule.require_step(t, "predict_noise");
        const std::vector<double> times(x.dim(0), schedule.time(t));
        return network.predict(x, cond, times, params);
    };
}

ad::Tensor initial_noise(std::span<const std::uint64_t> seeds, std::size_t data_dim) {
    if (seeds.empty()) throw InvalidArgument("initial_noise: no seeds");
    RowStreams streams(seeds, data_dim);
    return streams.draw();
}

namespace {

using StepEps = std::function<ad::Tensor(const ad::Tensor& x, int t)>;

// Runs states from `from` down to `to` (exclusive of further steps), starting
// at x. Appends to trajectory when requested.
ad::Tensor run_steps(const StepEps& step_eps, const NoiseSchedule& schedule, Solver solver, ad::Tensor x, int from,
                     int to, RowStreams& streams, std::vector<TrajectoryPoint>* trajectory) {
    for (int t = from; t > to; --t) {
        const ad::Tensor e = step_eps(x, t);
        x = advance(solver, x, e, t, schedule, streams);
        if (trajectory) trajectory->push_back({t - 1, x});
    }
    return x;
}

SampleResult full_chain(const StepEps& step_eps, const NoiseSchedule& schedule, Solver solver,
                        std::span<const std::uint64_t> seeds, std::size_t data_dim, bool keep_trajectory) {
    if (seeds.empty()) throw InvalidArgument("sampling needs at least one seed");
    RowStreams streams(seeds, data_dim);
    SampleResult result;
    ad::Tensor x = streams.draw();
    const int T = schedule.steps();
    if (keep_trajectory) result.trajectory.push_back({T, x});
    result.x0 = run_steps(step_eps, schedule, solver, x, T, 0, streams, keep_trajectory ? &result.trajectory : nullptr);
    return result;
}

}  // namespace

SampleResult sample_chain(const NoisePredictor& eps, const NoiseSchedule& schedule, const ad::Tensor& cond,
                          const ad::Tensor& negative, double gamma, Solver solver, std::span<const std::uint64_t> seeds,
                          std::size_t data_dim, bool keep_trajectory) {
    require_rows(cond, seeds.size(), "condition");
    require_rows(negative, seeds.size(), "negative");
    if (!std::isfinite(gamma) || gamma < 0.0) throw InvalidArgument("guidance scale must be finite and >= 0");
    const StepEps step = [&](const ad::Tensor& x, int t) { return guided_eps(eps, x, cond, negative, gamma, t); };
    return full_chain(step, schedule, solver, seeds, data_dim, keep_trajectory);
}

SampleResult sample_chain_unguided(const NoisePredictor& eps, const NoiseSchedule& schedule, const ad::Tensor& cond,
                                   Solver solver, std::span<const std::uint64_t> seeds, std::size_t data_dim,
                                   bool keep_trajectory) {
    require_rows(cond, seeds.size(), "condition");
    const StepEps step = [&](const ad::Tensor& x, int t) { return eps(x, cond, t); };
    return full_chain(step, schedule, solver, seeds, data_dim, keep_trajectory);
}

namespace {

void require_batch(std::span<const int> prompts, std::span<const std::uint64_t> seeds) {
    if (prompts.empty()) throw InvalidArgument("sampling needs at least one prompt");
    if (prompts.size() != seeds.size()) {
        throw InvalidArgument("sampling needs one seed per prompt (" + std::to_string(prompts.size()) + " prompts, " +
                              std::to_string(seeds.size()) + " seeds)");
    }
}

}  // namespace

SampleResult sample(const DiffusionModel& model, std::span<const int> prompts, const GuidanceConfig& guidance,
                    std::span<const std::uint64_t> seeds, bool keep_trajectory) {
    require_batch(prompts, seeds);
    guidance.validate(model.schedule.steps());
    const NoiseSchedule schedule = model.schedule.resample(guidance.steps);
    const ad::Tensor cond = model.encoder.encode_batch(prompts);
    const ad::Tensor negative = ad::broadcast_rows(guidance.negative, prompts.size());
    return sample_chain(network_predictor(model.network, schedule), schedule, cond, negative, guidance.gamma,
                        guidance.solver, seeds, model.network.shape().data_dim, keep_trajectory);
}

SampleResult sample(const DiffusionModel& model, int prompt, const GuidanceConfig& guidance, std::uint64_t seed) {
    const int prompts[] = {prompt};
    const std::uint64_t seeds[] = {seed};
    return sample(model, prompts, guidance, seeds, true);
}

SampleResult sample_conditional(const DiffusionModel& model, std::span<const int> prompts, Solver solver, int steps,
                                std::span<const std::uint64_t> seeds) {
    require_batch(prompts, seeds);
    const NoiseSchedule schedule = model.schedule.resample(steps);
    return sample_chain_unguided(network_predictor(model.network, schedule), schedule,
                                 model.encoder.encode_batch(prompts), solver, seeds, model.network.shape().data_dim);
}

ad::Tensor sample_to_t_then_x0hat(const DiffusionModel& model, std::span<const int> prompts,
                                  const GuidanceConfig& guidance, int t_stop, std::span<const std::uint64_t> seeds,
                                  const ad::Tensor* prefix_negative) {
    require_batch(prompts, seeds);
    guidance.validate(model.schedule.steps());
    const NoiseSchedule schedule = model.schedule.resample(guidance.steps);
    const int T = schedule.steps();
    if (t_stop < 0 || t_stop >= T) {
        throw InvalidArgument("t_stop " + std::to_string(t_stop) + " outside [0, " + std::to_string(T - 1) + "]");
    }
    const std::size_t batch = prompts.size();
    const NoisePredictor eps = network_predictor(model.network, schedule);
    const ad::Tensor cond = model.encoder.encode_batch(prompts);

    // Severed prefix: constants only, so nothing here is recorded on a tape.
    const ad::Tensor prefix_neg =
        ad::broadcast_rows((prefix_negative ? *prefix_negative : guidance.negative).detach(), batch);
    const double prefix_gamma = guidance.gamma_param ? guidance.gamma_param->item() : guidance.gamma;
    RowStreams streams(seeds, model.network.shape().data_dim);
    const int predict_at = t_stop + 1;
    const StepEps prefix_step = [&](const ad::Tensor& x, int t) {
        return guided_eps(eps, x, cond, prefix_neg, prefix_gamma, t);
    };
    const ad::Tensor x_t =
        run_steps(prefix_step, schedule, guidance.solver, streams.draw(), T, predict_at, streams, nullptr).detach();

    // Differentiable tail: one guided prediction and the one-step estimate.
    const ad::Tensor negative = ad::broadcast_rows(guidance.negative, batch);
    const ad::Tensor eps_cond = eps(x_t, cond, predict_at);
    const ad::Tensor eps_neg = eps(x_t, negative, predict_at);
    const ad::Tensor combined = guidance.gamma_param ? cfg_combine(eps_neg, eps_cond, *guidance.gamma_param)
                                                     : cfg_combine(eps_neg, eps_cond, guidance.gamma);
    return predict_x0(x_t, combined, predict_at, schedule);
}

}  // namespace reneg::sampling
