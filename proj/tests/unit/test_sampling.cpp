// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "reneg/autodiff/grad_check.hpp"
#include "reneg/autodiff/ops.hpp"
#include "reneg/autodiff/tape.hpp"
#include "reneg/common/rng.hpp"
#include "reneg/error.hpp"

namespace reneg::sampling {
namespace {

using ad::Tensor;

std::vector<std::uint64_t> seeds(std::size_t n, std::uint64_t base = 100) {
    std::vector<std::uint64_t> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = derive_seed(base, i);
    return s;
}

// Exact noise predictor for data x0 ~ N(mu, s^2 I).
NoisePredictor gaussian_oracle(const diffusion::NoiseSchedule& schedule, std::vector<double> mu, double s) {
    return [&schedule, mu = std::move(mu), s](const Tensor& x, const Tensor&, int t) {
        const double ab = schedule.alpha_bar(t);
        const double var = ab * s * s + (1.0 - ab);
        std::vector<double> out(x.numel());
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t j = 0; j < x.cols(); ++j)
                out[i * x.cols() + j] = std::sqrt(1.0 - ab) * (x.at(i, j) - std::sqrt(ab) * mu[j]) / var;
        return Tensor(x.shape(), std::move(out));
    };
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double ks_statistic(std::vector<double> xs, double mu, double s) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = normal_cdf((xs[i] - mu) / s);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

TEST(Operators, AddNoiseThenPredictX0RoundTrips) {
    const auto schedule = diffusion::build_schedule(100, 1e-3, 0.2);
    Rng rng(1);
    const Tensor x0 = rng.normal_tensor({16, 2});
    const Tensor eps = rng.normal_tensor({16, 2});
    for (int t = 1; t <= schedule.steps(); ++t) {
        const Tensor xt = add_noise(x0, eps, t, schedule);
        EXPECT_LT(ad::max_abs_diff(predict_x0(xt, eps, t, schedule), x0), 1e-12) << "t=" << t;
    }
}

TEST(Operators, AddNoiseWorkedExample) {
    const auto schedule = diffusion::NoiseSchedule::from_alpha_bars({0.64}, {1.0});
    const Tensor xt = add_noise(Tensor::matrix(1, 2, {1.0, -2.0}), Tensor::matrix(1, 2, {0.5, 1.0}), 1, schedule);
    EXPECT_NEAR(xt[0], 0.8 * 1.0 + 0.6 * 0.5, 1e-15);
    EXPECT_NEAR(xt[1], 0.8 * -2.0 + 0.6 * 1.0, 1e-15);
}

TEST(Operators, CfgCombineExamplesAndExactLimits) {
    const Tensor en = Tensor::matrix(1, 2, {0.1, 0.2});
    const Tensor ec = Tensor::matrix(1, 2, {0.3, -0.1});
    const Tensor g = cfg_combine(en, ec, 7.5);
    EXPECT_NEAR(g[0], 0.1 + 7.5 * 0.2, 1e-15);
    EXPECT_NEAR(g[1], 0.2 + 7.5 * -0.3, 1e-15);
    EXPECT_TRUE(ad::bit_equal(cfg_combine(en, ec, 1.0), ec));
    EXPECT_TRUE(ad::bit_equal(cfg_combine(en, ec, 0.0), en));
    EXPECT_LT(ad::max_abs_diff(cfg_combine(en, ec, Tensor::scalar(1.0)), ec), 1e-15);
}

TEST(Operators, DdimStepToCleanEndReturnsPrediction) {
    const auto schedule = diffusion::build_schedule(10, 0.01, 0.2);
    Rng rng(2);
    const Tensor x = rng.normal_tensor({3, 2}), eps = rng.normal_tensor({3, 2});
    EXPECT_LT(ad::max_abs_diff(ddim_step(x, eps, 4, 0, schedule), predict_x0(x, eps, 4, schedule)), 1e-15);
}

TEST(Chains, DdimWithExactPredictorRecoversPointMass) {
    const auto schedule = diffusion::build_schedule(100, 1e-3, 0.2).resample(30);
    const std::vector<double> mu = {1.25, -0.5};
    const auto eps = gaussian_oracle(schedule, mu, 0.0);
    const auto s = seeds(32);
    for (auto solver : {Solver::ddim, Solver::ddpm}) {
        const auto r = sample_chain_unguided(eps, schedule, Tensor::zeros({32, 1}), solver, s, 2, false);
        for (std::size_t i = 0; i < 32; ++i) {
            EXPECT_NEAR(r.x0.at(i, 0), mu[0], 1e-10);
            EXPECT_NEAR(r.x0.at(i, 1), mu[1], 1e-10);
        }
    }
}

TEST(Chains, DdimWithExactPredictorConvergesForGaussianData) {
    const auto schedule = diffusion::build_schedule(100, 1e-3, 0.2);
    const double mu = 0.7, sd = 0.5;
    const auto r = sample_chain_unguided(gaussian_oracle(schedule, {mu}, sd), schedule, Tensor::zeros({4000, 1}),
                                         Solver::ddim, seeds(4000), 1, false);
    const auto& v = r.x0.values();
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / 4000.0;
    double var = 0.0;
    for (double x : v) var += (x - m) * (x - m);
    EXPECT_NEAR(m, mu, 4.0 * sd / std::sqrt(4000.0));
    EXPECT_NEAR(std::sqrt(var / 3999.0), sd, 0.05 * sd);
}

TEST(Chains, DdpmWithExactPredictorPassesKolmogorovSmirnov) {
    const auto schedule = diffusion::build_schedule(100, 1e-3, 0.2);
    const double mu = 1.5, sd = 0.5;
    const std::size_t n = 2000;
    const auto r = sample_chain_unguided(gaussian_oracle(schedule, {mu}, sd), schedule, Tensor::zeros({n, 1}),
                                         Solver::ddpm, seeds(n, 7), 1, false);
    // Critical value at alpha = 0.01.
    EXPECT_LT(ks_statistic(r.x0.values(), mu, sd), 1.63 / std::sqrt(static_cast<double>(n)));
    // And the test is sharp enough to reject a shifted target.
    EXPECT_GT(ks_statistic(r.x0.values(), mu + 0.1, sd), 1.63 / std::sqrt(static_cast<double>(n)));
}

TEST(Guided, UnitScaleEqualsConditionalSamplingBitExactly) {
    const auto& m = testing::small_setup().model;
    const std::vector<int> prompts = {0, 3, 5, 6};
    const auto s = seeds(4);
    for (auto solver : {Solver::ddim, Solver::ddpm}) {
        GuidanceConfig g = null_guidance(m.encoder, 1.0, solver, 30);
        EXPECT_TRUE(ad::bit_equal(sample(m, prompts, g, s).x0, sample_conditional(m, prompts, solver, 30, s).x0));
    }
}

TEST(Guided, ZeroScaleEqualsNegativeOnlySampling) {
    const auto& m = testing::small_setup().model;
    const std::vector<int> prompts = {1, 2, 4};
    const auto s = seeds(3);
    const Tensor negative = m.encoder.encode(7);
    const auto inference = m.schedule.resample(30);
    const Tensor neg_rows = ad::broadcast_rows(negative, 3);
    for (auto solver : {Solver::ddim, Solver::ddpm}) {
        GuidanceConfig g{0.0, negative, solver, 30, std::nullopt};
        const auto unguided = sample_chain_unguided(network_predictor(m.network, inference), inference, neg_rows,
                                                    solver, s, 2, false);
        EXPECT_TRUE(ad::bit_equal(sample(m, prompts, g, s).x0, unguided.x0));
    }
}

TEST(Guided, DeterministicPerSeedAndIndependentOfBatchComposition) {
    const auto& m = testing::small_setup().model;
    const auto g = null_guidance(m.encoder, 7.5, Solver::ddpm, 30);
    const std::vector<int> prompts = {0, 1, 2};
    const auto s = seeds(3);
    const auto a = sample(m, prompts, g, s);
    const auto b = sample(m, prompts, g, s);
    EXPECT_TRUE(ad::bit_equal(a.x0, b.x0));
    const auto single = sample(m, 1, g, s[1]);
    EXPECT_EQ(single.x0[0], a.x0.at(1, 0));
    EXPECT_EQ(single.x0[1], a.x0.at(1, 1));
    ASSERT_EQ(a.trajectory.size(), 31u);
    EXPECT_EQ(a.trajectory.front().t, 30);
    EXPECT_EQ(a.trajectory.back().t, 0);
    EXPECT_TRUE(ad::bit_equal(a.trajectory.front().x, initial_noise(s, 2)));
    EXPECT_FALSE(ad::bit_equal(a.x0, sample(m, prompts, g, seeds(3, 5)).x0));
}

TEST(Guided, RejectsInvalidGuidance) {
    const auto& m = testing::small_setup().model;
    const std::vector<int> prompts = {0};
    const auto s = seeds(1);
    EXPECT_THROW(sample(m, prompts, null_guidance(m.encoder, -1.0), s), InvalidArgument);
    EXPECT_THROW(sample(m, prompts, null_guidance(m.encoder, 7.5, Solver::ddim, 101), s), InvalidArgument);
    EXPECT_THROW(sample(m, std::vector<int>{9}, null_guidance(m.encoder), s), InvalidArgument);
    EXPECT_THROW(sample(m, std::vector<int>{0, 1}, null_guidance(m.encoder), s), InvalidArgument);
}

TEST(Truncated, StopAtZeroWithDdimEqualsFullSample) {
    const auto& m = testing::small_setup().model;
    const std::vector<int> prompts = {0, 4};
    const auto s = seeds(2);
    GuidanceConfig g{7.5, m.encoder.encode(5), Solver::ddim, 30, std::nullopt};
    EXPECT_TRUE(ad::bit_equal(sample_to_t_then_x0hat(m, prompts, g, 0, s), sample(m, prompts, g, s).x0));
}

TEST(Truncated, GradientReachesOnlyTheLastStep) {
    const auto& m = testing::small_setup().model;
    const std::vector<int> prompts = {2, 6};
    const auto s = seeds(2);
    const Tensor n0 = m.encoder.null_embedding();
    for (int t_stop : {0, 3, 12}) {
        // Analytic gradient of the truncated chain.
        ad::Tape tape;
        GuidanceConfig g{7.5, tape.leaf(n0), Solver::ddpm, 30, std::nullopt};
        const Tensor y = ad::sum(sample_to_t_then_x0hat(m, prompts, g, t_stop, s));
        const Tensor grad = tape.backward(y).at(*g.negative.node_id());
        // Finite differences with the severed prefix pinned at n0 must agree.
        const auto pinned = [&](std::span<const Tensor> p) {
            GuidanceConfig h{7.5, p[0], Solver::ddpm, 30, std::nullopt};
            return ad::sum(sample_to_t_then_x0hat(m, prompts, h, t_stop, s, &n0));
        };
        const auto check = ad::grad_check(pinned, std::vector<Tensor>{n0});
        EXPECT_LT(check.max_relative_error, 1e-4) << "t_stop=" << t_stop;
        ad::Tape tape2;
        GuidanceConfig h{7.5, tape2.leaf(n0), Solver::ddpm, 30, std::nullopt};
        const Tensor y2 = ad::sum(sample_to_t_then_x0hat(m, prompts, h, t_stop, s, &n0));
        EXPECT_LT(ad::max_abs_diff(grad, tape2.backward(y2).at(*h.negative.node_id())), 1e-12);
        if (t_stop == 12) {
            // Moving the prefix too changes the function, so the check is not vacuous.
            const auto unpinned = [&](std::span<const Tensor> p) {
                GuidanceConfig u{7.5, p[0], Solver::ddpm, 30, std::nullopt};
                return ad::sum(sample_to_t_then_x0hat(m, prompts, u, t_stop, s));
            };
            EXPECT_GT(ad::grad_check(unpinned, std::vector<Tensor>{n0}).max_relative_error, 1e-3);
        }
    }
}

}  // namespace
}  // namespace reneg::sampling
