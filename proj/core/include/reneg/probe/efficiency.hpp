// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "reneg/sampling/sampling.hpp"

namespace reneg::probe {

struct ProbeGroup {
    enum class Kind { full_theta, neg_embedding, adapter };
    Kind kind = Kind::neg_embedding;
    /// Adapter rank and the dense layer it is attached to.
    std::size_t rank = 0;
    std::size_t layer = 1;

    static ProbeGroup theta() { return {Kind::full_theta, 0, 1}; }
    static ProbeGroup negative() { return {Kind::neg_embedding, 0, 1}; }
    static ProbeGroup adapter(std::size_t rank, std::size_t layer = 1) { return {Kind::adapter, rank, layer}; }

    /// "full_theta", "neg_embedding" or "adapter_r<rank>".
    std::string name() const;
};

struct ProbeConfig {
    double gamma = 7.5;
    int steps = 30;
    std::uint64_t seed = 0;
    /// Negative used by the sampler; empty means the null embedding.
    ad::Tensor negative;
    /// Which seeded adapter initialisation sampling_jacobian uses.
    std::size_t adapter_init = 0;
    /// compare_groups averages adapter reports over this many initialisations.
    std::size_t adapter_inits = 8;
};

/// Jacobian of the sampled outputs with respect to one parameter group.
struct Jacobian {
    std::string group;
    std::size_t d_theta = 0;
    std::size_t prompts = 0;  // N
    std::size_t output_dim = 0;  // D
    /// Row-major [d_theta, N * D]; column i * D + j is coordinate j of sample i.
    std::vector<double> values;

    double at(std::size_t param, std::size_t column) const { return values[param * prompts * output_dim + column]; }
    double frobenius() const;
};

/// Differentiates the full deterministic guided DDIM chain (nothing severed)
/// for one seeded sample per prompt, with one reverse pass per output
/// coordinate. Adapter groups attach a fresh adapter seeded from config.seed.
Jacobian sampling_jacobian(const sampling::DiffusionModel& model, std::span<const int> prompts,
                           const ProbeGroup& group, const ProbeConfig& config);

/// ||J||_F / (N * D * d_theta). Rejects zero dimensions.
double parameter_efficiency(double frobenius, std::size_t prompts, std::size_t output_dim, std::size_t d_theta);
double parameter_efficiency(const Jacobian& j);

struct SpotCheck {
    std::size_t param = 0;
    std::size_t column = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double relative_error = 0.0;
};

/// Central finite differences of `count` random Jacobian entries.
std::vector<SpotCheck> finite_difference_spot_checks(const sampling::DiffusionModel& model,
                                                     std::span<const int> prompts, const ProbeGroup& group,
                                                     const ProbeConfig& config, const Jacobian& jacobian,
                                                     std::size_t count, double step, std::uint64_t seed);

struct EfficiencyReport {
    std::string group;
    std::size_t d_theta = 0;
    std::size_t prompts = 0;
    std::size_t output_dim = 0;
    double frobenius = 0.0;
    double efficiency = 0.0;
};

struct OrderingVerdict {
    double negative_over_theta = 0.0;
    double small_rank_over_large_rank = 0.0;
    bool negative_beats_theta = false;
    bool small_rank_beats_large_rank = false;
};

struct GroupComparison {
    std::vector<EfficiencyReport> reports;  // neg_embedding, full_theta, then one per rank in input order
    OrderingVerdict verdict;
};

/// Reports for the negative embedding, the full network and an adapter per
/// rank. Adapter norms and efficiencies are means over
/// config.adapter_inits initialisations, since a fresh adapter's Jacobian
/// depends strongly on its random down-projection. The verdict compares the
/// smallest and the largest rank.
GroupComparison compare_groups(const sampling::DiffusionModel& model, std::span<const int> prompts,
                               std::span<const std::size_t> ranks, const ProbeConfig& config);

}  // namespace reneg::probe
