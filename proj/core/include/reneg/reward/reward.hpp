// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reneg/autodiff/tensor.hpp"
#include "reneg/diffusion/pretrain.hpp"
#include "reneg/reward/mixture.hpp"

namespace reneg::reward {

enum class RewardKind { analytic_logdensity, trained_discriminator };

const char* kind_name(RewardKind kind);

/// Scores (prompt, sample) pairs. Implementations are immutable and safe to
/// share across threads.
class RewardModel {
public:
    virtual ~RewardModel() = default;

    virtual RewardKind kind() const = 0;
    virtual std::size_t classes() const = 0;
    virtual std::size_t data_dim() const = 0;

    /// One reward per row of x [B, d_x], differentiable w.r.t. x -> [B].
    /// Unknown prompts are rejected.
    virtual ad::Tensor score(std::span<const int> prompts, const ad::Tensor& x) const = 0;

    virtual nlohmann::json to_json() const = 0;

    void require_prompt(int prompt) const;
};

/// Analytic reward: log density of the prompt's clean mixture.
class MixtureReward final : public RewardModel {
public:
    explicit MixtureReward(std::vector<GaussianMixture> mixtures);

    RewardKind kind() const override { return RewardKind::analytic_logdensity; }
    std::size_t classes() const override { return mixtures_.size(); }
    std::size_t data_dim() const override { return dim_; }
    ad::Tensor score(std::span<const int> prompts, const ad::Tensor& x) const override;
    nlohmann::json to_json() const override;

    const std::vector<GaussianMixture>& mixtures() const noexcept { return mixtures_; }

private:
    struct Term {
        std::vector<double> mean;
        std::vector<double> precision;
        double log_constant = 0.0;  // log w - (d log 2pi + log det Sigma) / 2
    };
    std::vector<GaussianMixture> mixtures_;
    std::vector<std::vector<Term>> terms_;
    std::size_t dim_ = 0;
    std::size_t components_ = 0;
};

/// Discriminator reward: logit of "clean" from a small MLP over
/// concat(x, one-hot(prompt)).
class DiscriminatorReward final : public RewardModel {
public:
    /// Weights in order W0 [d+C, h], b0 [h], W1 [h, h], b1 [h], W2 [h, 1], b2 [1].
    DiscriminatorReward(std::size_t data_dim, std::size_t classes, std::vector<ad::Tensor> weights);

    RewardKind kind() const override { return RewardKind::trained_discriminator; }
    std::size_t classes() const override { return classes_; }
    std::size_t data_dim() const override { return dim_; }
    ad::Tensor score(std::span<const int> prompts, const ad::Tensor& x) const override;
    nlohmann::json to_json() const override;

    const std::vector<ad::Tensor>& weights() const noexcept { return weights_; }
    /// Logits with an explicit weight list (possibly tape leaves).
    ad::Tensor logits(std::span<const int> prompts, const ad::Tensor& x, std::span<const ad::Tensor> weights) const;

private:
    std::size_t dim_;
    std::size_t classes_;
    std::vector<ad::Tensor> weights_;
};

/// Reward of a single sample x ([d_x] or [1, d_x]) -> scalar.
ad::Tensor reward(const RewardModel& model, int prompt, const ad::Tensor& x);

struct BatchReward {
    ad::Tensor mean;  // scalar, differentiable
    std::vector<double> per_sample;
};

/// Rewards for prompts[i] with row i of xs. Rejects length mismatch and empty batches.
BatchReward batch_reward(const RewardModel& model, std::span<const int> prompts, const ad::Tensor& xs);

struct DiscriminatorConfig {
    std::size_t hidden = 32;
    std::size_t steps = 1500;
    double learning_rate = 1e-2;
    std::size_t batch_size = 128;
    /// Fraction of each set held out for the accuracy report.
    double holdout = 0.2;
    std::uint64_t seed = 0;
};

struct DiscriminatorTraining {
    std::shared_ptr<DiscriminatorReward> model;
    double heldout_accuracy = 0.0;
    std::vector<double> loss_curve;
};

/// Logistic-loss training of a DiscriminatorReward with clean samples as the
/// positive class. Deterministic given config.seed. Rejects empty sets.
DiscriminatorTraining train_discriminator(const diffusion::Dataset& clean, const diffusion::Dataset& corrupted,
                                          std::size_t classes, const DiscriminatorConfig& config);

std::shared_ptr<RewardModel> reward_from_json(const nlohmann::json& j);
void save_reward(const RewardModel& model, const std::string& path);
std::shared_ptr<RewardModel> load_reward(const std::string& path);

}  // namespace reneg::reward
