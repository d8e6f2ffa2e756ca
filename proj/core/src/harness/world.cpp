// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "reneg/harness/world.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "reneg/common/rng.hpp"
#include "reneg/error.hpp"

namespace reneg::harness {

void WorldSpec::validate() const {
    if (classes < 1) throw ConfigError("world.classes", "must be >= 1");
    if (data_dim < 2) throw ConfigError("world.data_dim", "must be >= 2");
    if (cond_dim < 1) throw ConfigError("world.cond_dim", "must be >= 1");
    if (components < 1) throw ConfigError("world.components", "must be >= 1");
    if (!(radius >= 0.0) || !std::isfinite(radius)) throw ConfigError("world.radius", "must be finite and >= 0");
    if (!(component_offset >= 0.0) || !std::isfinite(component_offset)) {
        throw ConfigError("world.component_offset", "must be finite and >= 0");
    }
    if (!(std_min > 0.0) || !(std_max >= std_min) || !std::isfinite(std_max)) {
        throw ConfigError("world.std_min", "need 0 < std_min <= std_max");
    }
    if (!(corruption_fraction >= 0.0 && corruption_fraction <= 1.0)) {
        throw ConfigError("world.corruption_fraction", "must lie in [0, 1]");
    }
    if (!(corruption_sigma >= 0.0) || !std::isfinite(corruption_sigma)) {
        throw ConfigError("world.corruption_sigma", "must be finite and >= 0");
    }
    if (degraded_class < -1 || degraded_class >= static_cast<int>(classes)) {
        throw ConfigError("world.degraded_class", "must be -1 or a class index");
    }
    if (degraded_class >= 0 && classes < 2) throw ConfigError("world.degraded_class", "needs at least two classes");
    if (samples_per_class < 1) throw ConfigError("world.samples_per_class", "must be >= 1");
}

std::vector<std::string> class_names(std::size_t classes) {
    std::vector<std::string> names;
    for (std::size_t c = 0; c < classes; ++c) names.push_back("class_" + std::to_string(c));
    return names;
}

std::vector<reward::GaussianMixture> make_mixtures(const WorldSpec& spec) {
    spec.validate();
    const std::size_t d = spec.data_dim;
    Rng rng(derive_seed(spec.seed, 1));
    std::vector<reward::GaussianMixture> mixtures;
    for (std::size_t c = 0; c < spec.classes; ++c) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(spec.classes);
        std::vector<double> centre(d, 0.0);
        centre[0] = spec.radius * std::cos(angle);
        centre[1] = spec.radius * std::sin(angle);
        const double axis = rng.uniform() * std::numbers::pi;
        reward::GaussianMixture m;
        for (std::size_t k = 0; k < spec.components; ++k) {
            reward::GaussianComponent comp;
            comp.weight = 1.0 / static_cast<double>(spec.components);
            comp.mean = centre;
            const double phase = axis + 2.0 * std::numbers::pi * static_cast<double>(k) /
                                            static_cast<double>(spec.components);
            if (spec.components > 1) {
                comp.mean[0] += spec.component_offset * std::cos(phase);
                comp.mean[1] += spec.component_offset * std::sin(phase);
            }
            // Diagonal covariance rotated in the first two axes.
            std::vector<double> sd(d);
            for (auto& s : sd) s = spec.std_min + (spec.std_max - spec.std_min) * rng.uniform();
            const double rot = rng.uniform() * std::numbers::pi;
            const double cr = std::cos(rot), sr = std::sin(rot);
            comp.covariance.assign(d * d, 0.0);
            const double a = sd[0] * sd[0], b = sd[1] * sd[1];
            comp.covariance[0] = cr * cr * a + sr * sr * b;
            comp.covariance[1] = comp.covariance[d] = cr * sr * (a - b);
            comp.covariance[d + 1] = sr * sr * a + cr * cr * b;
            for (std::size_t i = 2; i < d; ++i) comp.covariance[i * d + i] = sd[i] * sd[i];
            m.components.push_back(std::move(comp));
        }
        m.validate();
        mixtures.push_back(std::move(m));
    }
    return mixtures;
}

World generate_world(const WorldSpec& spec) {
    spec.validate();
    auto mixtures = make_mixtures(spec);
    auto encoder = diffusion::ConditionEncoder::random(class_names(spec.classes), spec.cond_dim, derive_seed(spec.seed, 2));
    const std::size_t d = spec.data_dim, n = spec.samples_per_class;

    std::vector<int> prompts;
    std::vector<double> x;
    std::vector<bool> corrupted;
    for (std::size_t c = 0; c < spec.classes; ++c) {
        Rng rng(derive_seed(derive_seed(spec.seed, 3), c));
        const ad::Tensor clean = mixtures[c].sample(rng, n);
        const bool degraded = static_cast<int>(c) == spec.degraded_class;
        for (std::size_t r = 0; r < n; ++r) {
            const bool bad = degraded || rng.uniform() < spec.corruption_fraction;
            for (std::size_t j = 0; j < d; ++j) {
                double v = clean.at(r, j);
                if (bad) v += spec.corruption_sigma * rng.normal();
                x.push_back(v);
            }
            prompts.push_back(static_cast<int>(c));
            corrupted.push_back(bad);
        }
    }
    std::vector<int> prompt_set;
    for (std::size_t c = 0; c < spec.classes; ++c) {
        if (static_cast<int>(c) != spec.degraded_class) prompt_set.push_back(static_cast<int>(c));
    }
    const std::size_t rows = prompts.size();
    return World{spec,
                 std::move(mixtures),
                 std::move(encoder),
                 diffusion::Dataset{std::move(prompts), ad::Tensor::matrix(rows, d, std::move(x))},
                 std::move(corrupted),
                 std::move(prompt_set)};
}

namespace {

diffusion::Dataset subset(const World& w, bool want_corrupted) {
    diffusion::Dataset out;
    std::vector<double> x;
    const std::size_t d = w.training.x0.dim(1);
    for (std::size_t i = 0; i < w.training.size(); ++i) {
        if (w.corrupted[i] != want_corrupted) continue;
        out.prompts.push_back(w.training.prompts[i]);
        for (std::size_t j = 0; j < d; ++j) x.push_back(w.training.x0.at(i, j));
    }
    if (!out.prompts.empty()) out.x0 = ad::Tensor::matrix(out.prompts.size(), d, std::move(x));
    return out;
}

}  // namespace

diffusion::Dataset World::clean_subset() const { return subset(*this, false); }
diffusion::Dataset World::corrupted_subset() const { return subset(*this, true); }

}  // namespace reneg::harness
