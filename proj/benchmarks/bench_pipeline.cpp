// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "reneg/autodiff/ops.hpp"
#include "reneg/autodiff/tape.hpp"
#include "reneg/common/rng.hpp"
#include "reneg/harness/world.hpp"
#include "reneg/probe/efficiency.hpp"
#include "reneg/reward/reward.hpp"
#include "reneg/sampling/sampling.hpp"
#include "reneg/trainer/trainer.hpp"

namespace {

using namespace reneg;

// Untrained reference-sized model; timings do not depend on the weights.
struct Bench {
    harness::World world;
    sampling::DiffusionModel model;
    reward::MixtureReward reward;
};

const Bench& bench() {
    static const Bench b = [] {
        harness::WorldSpec spec;
        spec.samples_per_class = 10;
        spec.seed = 1;
        auto world = harness::generate_world(spec);
        auto net = diffusion::ScoreNetwork::create({2, 16, 16, 128}, 2);
        sampling::DiffusionModel model{net, world.encoder, diffusion::build_schedule(100, 1e-3, 0.2)};
        reward::MixtureReward reward(world.mixtures);
        return Bench{std::move(world), std::move(model), std::move(reward)};
    }();
    return b;
}

std::vector<int> prompts(std::size_t n) {
    std::vector<int> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<int>(i % 7);
    return p;
}

std::vector<std::uint64_t> seeds(std::size_t n) {
    std::vector<std::uint64_t> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = derive_seed(3, i);
    return s;
}

void BM_GuidedSample(benchmark::State& state) {
    const auto& b = bench();
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto p = prompts(n);
    const auto s = seeds(n);
    const auto g = sampling::null_guidance(b.model.encoder, 7.5, static_cast<sampling::Solver>(state.range(1)), 30);
    for (auto _ : state) benchmark::DoNotOptimize(sampling::sample(b.model, p, g, s, false).x0);
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GuidedSample)->ArgsProduct({{1, 64, 256}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_TruncatedObjectiveWithBackward(benchmark::State& state) {
    const auto& b = bench();
    const auto p = prompts(64);
    const auto s = seeds(64);
    const int t_stop = static_cast<int>(state.range(0));
    for (auto _ : state) {
        ad::Tape tape;
        sampling::GuidanceConfig g{7.5, tape.leaf(b.model.encoder.null_embedding()), sampling::Solver::ddim, 30,
                                   std::nullopt};
        const auto x0 = sampling::sample_to_t_then_x0hat(b.model, p, g, t_stop, s);
        benchmark::DoNotOptimize(tape.backward(reward::batch_reward(b.reward, p, x0).mean));
    }
}
BENCHMARK(BM_TruncatedObjectiveWithBackward)->Arg(0)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_GlobalTrainingStep(benchmark::State& state) {
    const auto& b = bench();
    trainer::GlobalTrainConfig cfg;
    cfg.total_steps = 1;
    cfg.seed = 4;
    const auto init = trainer::null_negative(b.model.encoder);
    for (auto _ : state) {
        benchmark::DoNotOptimize(trainer::train_global(b.model, b.reward, b.world.prompt_set, init, cfg));
    }
}
BENCHMARK(BM_GlobalTrainingStep)->Unit(benchmark::kMillisecond);

void BM_RewardScore(benchmark::State& state) {
    const auto& b = bench();
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto p = prompts(n);
    Rng rng(5);
    const auto x = rng.normal_tensor({n, 2});
    for (auto _ : state) benchmark::DoNotOptimize(b.reward.score(p, x));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RewardScore)->Arg(64)->Arg(1024);

void BM_SamplingJacobian(benchmark::State& state) {
    const auto& b = bench();
    const auto p = prompts(8);
    probe::ProbeConfig cfg;
    cfg.seed = 6;
    const auto group = state.range(0) == 0 ? probe::ProbeGroup::negative() : probe::ProbeGroup::theta();
    for (auto _ : state) benchmark::DoNotOptimize(probe::sampling_jacobian(b.model, p, group, cfg));
}
BENCHMARK(BM_SamplingJacobian)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
