// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "reneg/autodiff/grad_check.hpp"
#include "reneg/autodiff/ops.hpp"
#include "reneg/common/rng.hpp"
#include "reneg/error.hpp"
#include "reneg/reward/reward.hpp"

namespace reneg::reward {
namespace {

using ad::Tensor;

GaussianMixture two_component(double shift) {
    return {{{0.3, {shift, 0.0}, {0.5, 0.1, 0.1, 0.2}}, {0.7, {-shift, 1.0}, {0.1, 0.0, 0.0, 0.4}}}};
}

// Direct evaluation of a 2-d Gaussian mixture density.
double oracle_log_density(const GaussianMixture& g, double x, double y) {
    double p = 0.0;
    for (const auto& c : g.components) {
        const double a = c.covariance[0], b = c.covariance[1], d = c.covariance[3];
        const double det = a * d - b * b;
        const double dx = x - c.mean[0], dy = y - c.mean[1];
        const double q = (d * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det;
        p += c.weight * std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(det));
    }
    return std::log(p);
}

TEST(LinearAlgebra, CholeskyInverseAndLogDet) {
    const std::vector<double> m = {4.0, 2.0, 2.0, 3.0};
    const auto l = cholesky(m, 2);
    EXPECT_DOUBLE_EQ(l[0], 2.0);
    EXPECT_DOUBLE_EQ(l[2], 1.0);
    EXPECT_NEAR(l[3], std::sqrt(2.0), 1e-15);
    const auto inv = spd_inverse(m, 2);
    EXPECT_NEAR(inv[0], 3.0 / 8.0, 1e-15);
    EXPECT_NEAR(inv[1], -2.0 / 8.0, 1e-15);
    EXPECT_NEAR(spd_log_det(m, 2), std::log(8.0), 1e-15);
    EXPECT_THROW(cholesky(std::vector<double>{1.0, 2.0, 2.0, 1.0}, 2), InvalidArgument);
}

TEST(Mixture, LogDensityMatchesOracleOnRandomPoints) {
    const auto g = two_component(1.0);
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        const double x = 3.0 * rng.normal(), y = 3.0 * rng.normal();
        const double pt[] = {x, y};
        EXPECT_NEAR(g.log_density(pt), oracle_log_density(g, x, y), 1e-10);
    }
}

TEST(Mixture, ValidateRejectsMalformedComponents) {
    auto g = two_component(1.0);
    g.components[0].weight = 0.5;
    EXPECT_THROW(g.validate(), InvalidArgument);
    g = two_component(1.0);
    g.components[1].covariance = {1.0, 2.0, 2.0, 1.0};
    EXPECT_THROW(g.validate(), InvalidArgument);
}

TEST(Mixture, SamplesMatchMean) {
    const auto g = two_component(1.0);
    Rng rng(5);
    const Tensor xs = g.sample(rng, 20000);
    const auto mean = g.mean();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.rows(); ++i) {
        mx += xs.at(i, 0);
        my += xs.at(i, 1);
    }
    EXPECT_NEAR(mx / 20000.0, mean[0], 0.03);
    EXPECT_NEAR(my / 20000.0, mean[1], 0.03);
}

TEST(MixtureReward, ScoreMatchesLogDensityPerPrompt) {
    const MixtureReward r({two_component(1.0), two_component(-2.0)});
    Rng rng(7);
    const Tensor x = rng.normal_tensor({1000, 2}, 2.0);
    std::vector<int> prompts(1000);
    for (std::size_t i = 0; i < prompts.size(); ++i) prompts[i] = static_cast<int>(i % 2);
    const Tensor s = r.score(prompts, x);
    ASSERT_EQ(s.numel(), 1000u);
    for (std::size_t i = 0; i < 1000; ++i) {
        const auto& g = r.mixtures()[static_cast<std::size_t>(prompts[i])];
        EXPECT_NEAR(s[i], oracle_log_density(g, x.at(i, 0), x.at(i, 1)), 1e-10);
    }
}

TEST(MixtureReward, GradientCheck) {
    const MixtureReward r({two_component(1.0), two_component(-2.0)});
    const std::vector<int> prompts = {0, 1, 1};
    Rng rng(8);
    const auto f = [&](std::span<const Tensor> p) { return ad::sum(r.score(prompts, p[0])); };
    EXPECT_LT(ad::grad_check(f, std::vector<Tensor>{rng.normal_tensor({3, 2})}).max_relative_error, 1e-6);
}

TEST(MixtureReward, DecreasesAlongRaysFromASingleMode) {
    const MixtureReward r({GaussianMixture{{{1.0, {0.5, -0.5}, {0.3, 0.05, 0.05, 0.2}}}}});
    Rng rng(9);
    const std::vector<int> prompt = {0};
    for (int k = 0; k < 50; ++k) {
        const double dx = rng.normal(), dy = rng.normal();
        double prev = std::numeric_limits<double>::infinity();
        for (double s = 0.0; s < 5.0; s += 0.25) {
            const double v = r.score(prompt, Tensor::matrix(1, 2, {0.5 + s * dx, -0.5 + s * dy}))[0];
            EXPECT_LT(v, prev);
            prev = v;
        }
    }
}

TEST(MixtureReward, RejectsUnknownPromptAndWrongDimension) {
    const MixtureReward r({two_component(1.0)});
    EXPECT_THROW(r.score(std::vector<int>{1}, Tensor::zeros({1, 2})), InvalidArgument);
    EXPECT_THROW(r.score(std::vector<int>{0}, Tensor::zeros({1, 3})), InvalidArgument);
}

TEST(MixtureReward, JsonRoundTrip) {
    const MixtureReward r({two_component(1.0), two_component(0.5)});
    const auto path = std::filesystem::temp_directory_path() / "reneg_reward_test.json";
    save_reward(r, path.string());
    const auto loaded = load_reward(path.string());
    std::filesystem::remove(path);
    const Tensor x = Tensor::matrix(2, 2, {0.1, 0.2, -1.0, 3.0});
    const std::vector<int> prompts = {0, 1};
    EXPECT_EQ(loaded->kind(), RewardKind::analytic_logdensity);
    EXPECT_TRUE(ad::bit_equal(loaded->score(prompts, x), r.score(prompts, x)));
}

TEST(BatchReward, MeanAndPerSample) {
    const MixtureReward r({two_component(1.0)});
    const Tensor x = Tensor::matrix(2, 2, {0.0, 0.0, 1.0, 0.0});
    const auto b = batch_reward(r, std::vector<int>{0, 0}, x);
    ASSERT_EQ(b.per_sample.size(), 2u);
    EXPECT_NEAR(b.mean.item(), 0.5 * (b.per_sample[0] + b.per_sample[1]), 1e-15);
    EXPECT_NEAR(reward(r, 0, Tensor::matrix(1, 2, {1.0, 0.0})).item(), b.per_sample[1], 1e-15);
}

diffusion::Dataset cluster(double cx, double cy, double sd, std::size_t n, int classes, std::uint64_t seed) {
    Rng rng(seed);
    diffusion::Dataset d;
    std::vector<double> xs;
    for (std::size_t i = 0; i < n; ++i) {
        d.prompts.push_back(static_cast<int>(i % static_cast<std::size_t>(classes)));
        xs.push_back(cx + sd * rng.normal());
        xs.push_back(cy + sd * rng.normal());
    }
    d.x0 = Tensor({n, 2}, xs);
    return d;
}

TEST(Discriminator, SeparatesWellSeparatedData) {
    DiscriminatorConfig cfg;
    cfg.steps = 600;
    cfg.seed = 4;
    const auto t = train_discriminator(cluster(1.0, 1.0, 0.3, 1200, 3, 1), cluster(-1.5, -1.0, 0.3, 1200, 3, 2), 3, cfg);
    EXPECT_GT(t.heldout_accuracy, 0.95);
    const std::vector<int> prompts = {0, 0};
    const Tensor s = t.model->score(prompts, Tensor::matrix(2, 2, {1.0, 1.0, -1.5, -1.0}));
    EXPECT_GT(s[0], s[1]);
}

TEST(Discriminator, SwappedLabelsInvertTheDecision) {
    DiscriminatorConfig cfg;
    cfg.steps = 600;
    cfg.seed = 4;
    const auto a = cluster(1.0, 1.0, 0.3, 1200, 2, 1), b = cluster(-1.5, -1.0, 0.3, 1200, 2, 2);
    const auto swapped = train_discriminator(b, a, 2, cfg);
    EXPECT_GT(swapped.heldout_accuracy, 0.95);
    const Tensor s = swapped.model->score(std::vector<int>{1, 1}, Tensor::matrix(2, 2, {1.0, 1.0, -1.5, -1.0}));
    EXPECT_LT(s[0], s[1]);
}

TEST(Discriminator, GradientCheckAndJsonRoundTrip) {
    DiscriminatorConfig cfg;
    cfg.steps = 50;
    cfg.seed = 5;
    const auto t = train_discriminator(cluster(1.0, 1.0, 0.3, 200, 2, 1), cluster(-1.0, -1.0, 0.3, 200, 2, 2), 2, cfg);
    const std::vector<int> prompts = {0, 1};
    const auto f = [&](std::span<const Tensor> p) { return ad::sum(t.model->score(prompts, p[0])); };
    EXPECT_LT(ad::grad_check(f, std::vector<Tensor>{Tensor::matrix(2, 2, {0.2, -0.1, 0.4, 0.3})}).max_relative_error,
              1e-6);
    const auto loaded = reward_from_json(t.model->to_json());
    const Tensor x = Tensor::matrix(2, 2, {0.3, 0.1, -0.2, 0.5});
    EXPECT_TRUE(ad::bit_equal(loaded->score(prompts, x), t.model->score(prompts, x)));
}

}  // namespace
}  // namespace reneg::reward
