// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "fixtures.hpp"
#include "reneg/autodiff/ops.hpp"
#include "reneg/error.hpp"
#include "reneg/trainer/trainer.hpp"

namespace reneg::trainer {
namespace {

using ad::Tensor;

// Reward that ignores the sample: constant value, zero gradient.
class ConstantReward final : public reward::RewardModel {
public:
    explicit ConstantReward(double value) : value_(value) {}
    reward::RewardKind kind() const override { return reward::RewardKind::analytic_logdensity; }
    std::size_t classes() const override { return 8; }
    std::size_t data_dim() const override { return 2; }
    Tensor score(std::span<const int>, const Tensor& x) const override {
        return ad::add_scalar(ad::scale(ad::sum_rows(x), 0.0), value_);
    }
    nlohmann::json to_json() const override { return {}; }

private:
    double value_;
};

GlobalTrainConfig quick_global(std::size_t steps = 6) {
    GlobalTrainConfig c;
    c.total_steps = steps;
    c.batch_size = 4;
    c.seed = 21;
    return c;
}

PerSampleConfig quick_per_sample() {
    PerSampleConfig c;
    c.seed = 22;
    return c;
}

const auto& setup() { return testing::small_setup(); }

TEST(GlobalTraining, ZeroLearningRateLeavesNullUnchanged) {
    auto cfg = quick_global();
    cfg.learning_rate = 0.0;
    const auto null = null_negative(setup().model.encoder);
    const auto r = train_global(setup().model, setup().reward, setup().world.prompt_set, null, cfg);
    EXPECT_TRUE(ad::bit_equal(r.embedding.vector, null.vector));
    EXPECT_EQ(r.embedding.provenance, Provenance::global_trained);
    EXPECT_EQ(r.reward_curve.size(), cfg.total_steps);
}

TEST(GlobalTraining, ConstantRewardWithoutDecayLeavesNullUnchanged) {
    auto cfg = quick_global();
    cfg.weight_decay = 0.0;
    const auto null = null_negative(setup().model.encoder);
    const ConstantReward flat(-2.0);
    const auto r = train_global(setup().model, flat, setup().world.prompt_set, null, cfg);
    EXPECT_TRUE(ad::bit_equal(r.embedding.vector, null.vector));
    for (double v : r.reward_curve) EXPECT_DOUBLE_EQ(v, -2.0);
}

TEST(GlobalTraining, ChangesTheEmbeddingAndLeavesTheModelFrozen) {
    const auto& m = setup().model;
    const auto net_fp = m.network.fingerprint();
    const auto enc_fp = m.encoder.fingerprint();
    const auto r = train_global(m, setup().reward, setup().world.prompt_set, null_negative(m.encoder), quick_global());
    EXPECT_FALSE(ad::bit_equal(r.embedding.vector, m.encoder.null_embedding()));
    EXPECT_TRUE(r.embedding.vector.all_finite());
    EXPECT_EQ(m.network.fingerprint(), net_fp);
    EXPECT_EQ(m.encoder.fingerprint(), enc_fp);
    EXPECT_EQ(r.embedding.encoder_fingerprint, enc_fp);
}

TEST(GlobalTraining, DeterministicForAFixedSeed) {
    const auto& m = setup().model;
    const auto a = train_global(m, setup().reward, setup().world.prompt_set, null_negative(m.encoder), quick_global());
    const auto b = train_global(m, setup().reward, setup().world.prompt_set, null_negative(m.encoder), quick_global());
    EXPECT_TRUE(ad::bit_equal(a.embedding.vector, b.embedding.vector));
    EXPECT_EQ(a.reward_curve, b.reward_curve);
}

TEST(GlobalTraining, SinglePromptAndLearnedScale) {
    const auto& m = setup().model;
    auto cfg = quick_global();
    cfg.learn_gamma = true;
    const std::vector<int> one = {3};
    const auto r = train_global(m, setup().reward, one, null_negative(m.encoder), cfg);
    EXPECT_TRUE(std::isfinite(r.gamma));
    EXPECT_NE(r.gamma, cfg.gamma);
}

TEST(GlobalTraining, AbortsAfterConsecutiveNonFiniteRewards) {
    const auto& m = setup().model;
    const ConstantReward broken(std::nan(""));
    auto cfg = quick_global(20);
    cfg.max_nonfinite_steps = 4;
    EXPECT_THROW(train_global(m, broken, setup().world.prompt_set, null_negative(m.encoder), cfg), Error);
}

TEST(GlobalTraining, RejectsInvalidConfiguration) {
    const auto& m = setup().model;
    const auto null = null_negative(m.encoder);
    auto cfg = quick_global();
    cfg.t_window_max = 30;
    EXPECT_THROW(train_global(m, setup().reward, setup().world.prompt_set, null, cfg), InvalidArgument);
    cfg = quick_global();
    cfg.batch_size = 0;
    EXPECT_THROW(train_global(m, setup().reward, setup().world.prompt_set, null, cfg), InvalidArgument);
    EXPECT_THROW(train_global(m, setup().reward, std::vector<int>{}, null, quick_global()), InvalidArgument);
    EXPECT_THROW(train_global(m, setup().reward, std::vector<int>{8}, null, quick_global()), InvalidArgument);
    EXPECT_EQ(default_window_max(30), 10);
}

TEST(PerSample, NeverReturnsWorseThanItsStartWithFixedNoise) {
    const auto& m = setup().model;
    auto global = null_negative(m.encoder);
    global.provenance = Provenance::global_trained;
    for (int prompt : {0, 2, 5}) {
        const auto r = train_per_sample(m, setup().reward, prompt, 77, global, quick_per_sample());
        EXPECT_GE(r.state.best_reward, r.initial_reward);
        EXPECT_FALSE(r.started_from_untrained);
        EXPECT_LE(r.state.log.size(), 10u);
        // The returned snapshot reproduces the best reward on the same noise.
        sampling::GuidanceConfig g{7.5, r.embedding.vector, sampling::Solver::ddim, 30, std::nullopt};
        const std::vector<int> p = {prompt};
        const std::vector<std::uint64_t> s = {77};
        const double again = setup().reward.score(p, sampling::sample(m, p, g, s).x0)[0];
        EXPECT_DOUBLE_EQ(again, r.state.best_reward);
    }
}

TEST(PerSample, PatienceStopsAFlatRun) {
    const auto& m = setup().model;
    const ConstantReward flat(1.0);
    auto cfg = quick_per_sample();
    cfg.patience = 3;
    const auto r = train_per_sample(m, flat, 1, 5, null_negative(m.encoder), cfg);
    ASSERT_EQ(r.state.log.size(), 4u);
    EXPECT_TRUE(r.state.log[0].improved);
    EXPECT_EQ(r.state.log.back().patience_counter, 3u);
    EXPECT_TRUE(r.started_from_untrained);
}

TEST(PerSample, CompatModeStartsFromZeroBest) {
    const auto& m = setup().model;
    auto cfg = quick_per_sample();
    cfg.compat_paper = true;
    const auto below = train_per_sample(m, ConstantReward(-1.0), 1, 5, null_negative(m.encoder), cfg);
    EXPECT_FALSE(below.state.log[0].improved);
    EXPECT_EQ(below.state.best_reward, 0.0);
    const auto above = train_per_sample(m, ConstantReward(1.0), 1, 5, null_negative(m.encoder), cfg);
    EXPECT_TRUE(above.state.log[0].improved);
    // The default starts from minus infinity, so the first iteration always counts.
    const auto standard = train_per_sample(m, ConstantReward(-1.0), 1, 5, null_negative(m.encoder), quick_per_sample());
    EXPECT_TRUE(standard.state.log[0].improved);
}

TEST(Evaluation, ShapesAndAssignedEqualsShared) {
    const auto& m = setup().model;
    EvalConfig cfg;
    cfg.n_seeds = 5;
    cfg.seed = 3;
    const std::vector<int> prompts = {0, 4};
    const auto neg = handcrafted_negative(m.encoder, 7);
    const auto r = evaluate(m, setup().reward, neg, prompts, cfg);
    ASSERT_EQ(r.rewards.size(), 2u);
    ASSERT_EQ(r.rewards[0].size(), 5u);
    EXPECT_NEAR(r.overall_mean, 0.5 * (r.per_prompt_mean[0] + r.per_prompt_mean[1]), 1e-12);
    const std::vector<std::vector<NegativeEmbedding>> assigned(2, std::vector<NegativeEmbedding>(5, neg));
    const auto same = evaluate_assigned(m, setup().reward, assigned, prompts, cfg);
    EXPECT_EQ(same.rewards, r.rewards);
    EXPECT_NE(eval_seed(cfg, 0), eval_seed(cfg, 1));
}

TEST(WinRate, WorkedExamples) {
    EXPECT_DOUBLE_EQ(win_rate(std::vector<double>{3, 2, 1}, std::vector<double>{1, 2, 3}), 0.5);
    EXPECT_DOUBLE_EQ(win_rate(std::vector<double>{2, 2}, std::vector<double>{1, 1}), 1.0);
    EXPECT_DOUBLE_EQ(win_rate(std::vector<double>{0, 5, 1, 1}, std::vector<double>{1, 1, 1, 1}), 0.5);
    EXPECT_THROW(win_rate(std::vector<double>{1}, std::vector<double>{1, 2}), InvalidArgument);
    EXPECT_THROW(win_rate(std::vector<double>{}, std::vector<double>{}), InvalidArgument);
}

TEST(Embedding, JsonRoundTripAndCompatibility) {
    const auto& enc = setup().model.encoder;
    NegativeEmbedding n = handcrafted_negative(enc, 7);
    n.config_hash = "h";
    n.reward_curve_path = "curves/x.csv";
    const auto path = std::filesystem::temp_directory_path() / "reneg_embedding_test.json";
    save_embedding(n, path.string());
    const auto loaded = load_embedding(path.string());
    std::filesystem::remove(path);
    EXPECT_TRUE(ad::bit_equal(loaded.vector, n.vector));
    EXPECT_EQ(loaded.provenance, Provenance::handcrafted);
    EXPECT_EQ(loaded.config_hash, "h");
    EXPECT_EQ(loaded.reward_curve_path, "curves/x.csv");
    EXPECT_NO_THROW(require_compatible(loaded, enc));
    const auto other = diffusion::ConditionEncoder::random(enc.names(), enc.dim(), 999);
    EXPECT_THROW(require_compatible(loaded, other), InvalidArgument);
    auto j = embedding_to_json(n);
    j["d_e"] = 3;
    EXPECT_THROW(embedding_from_json(j), Error);
}

}  // namespace
}  // namespace reneg::trainer
