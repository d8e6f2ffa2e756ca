// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "reneg/common/rng.hpp"
#include "reneg/error.hpp"
#include "reneg/harness/world.hpp"

namespace reneg::harness {
namespace {

WorldSpec spec_with_seed(std::uint64_t seed) {
    WorldSpec s;
    s.seed = seed;
    return s;
}

TEST(World, DeterministicForASeed) {
    const auto a = generate_world(spec_with_seed(5));
    const auto b = generate_world(spec_with_seed(5));
    EXPECT_TRUE(ad::bit_equal(a.training.x0, b.training.x0));
    EXPECT_EQ(a.corrupted, b.corrupted);
    EXPECT_EQ(a.encoder.fingerprint(), b.encoder.fingerprint());
    EXPECT_FALSE(ad::bit_equal(a.training.x0, generate_world(spec_with_seed(6)).training.x0));
}

TEST(World, PromptSetExcludesTheDegradedClass) {
    const auto w = generate_world(spec_with_seed(1));
    EXPECT_EQ(w.prompt_set, (std::vector<int>{0, 1, 2, 3, 4, 5, 6}));
    EXPECT_EQ(w.training.size(), 8u * 2000u);
    EXPECT_EQ(w.clean_subset().size() + w.corrupted_subset().size(), w.training.size());
}

TEST(World, ClassMeansMatchTheirMixtures) {
    const auto w = generate_world(spec_with_seed(2));
    const std::size_t n = w.spec.samples_per_class;
    for (std::size_t c = 0; c < w.spec.classes; ++c) {
        const auto mean = w.mixtures[c].mean();
        for (std::size_t j = 0; j < 2; ++j) {
            double m = 0.0, sq = 0.0;
            for (std::size_t r = 0; r < n; ++r) m += w.training.x0.at(c * n + r, j);
            m /= static_cast<double>(n);
            for (std::size_t r = 0; r < n; ++r) sq += std::pow(w.training.x0.at(c * n + r, j) - m, 2);
            const double se = std::sqrt(sq / static_cast<double>(n - 1) / static_cast<double>(n));
            EXPECT_NEAR(m, mean[j], 4.0 * se) << "class " << c << " dim " << j;
        }
    }
}

TEST(World, CorruptionRateAndExcessVariance) {
    const auto w = generate_world(spec_with_seed(3));
    const std::size_t n = w.spec.samples_per_class;
    std::size_t bad = 0, total = 0;
    for (std::size_t i = 0; i < w.training.size(); ++i) {
        if (w.training.prompts[i] == w.spec.degraded_class) {
            EXPECT_TRUE(w.corrupted[i]);
            continue;
        }
        bad += w.corrupted[i] ? 1 : 0;
        ++total;
    }
    const double p = 0.25;
    EXPECT_NEAR(static_cast<double>(bad) / static_cast<double>(total), p,
                4.0 * std::sqrt(p * (1 - p) / static_cast<double>(total)));

    // The degraded class is its mixture plus isotropic noise of variance sigma^2.
    const std::size_t c = static_cast<std::size_t>(w.spec.degraded_class);
    Rng rng(4);
    const auto clean = w.mixtures[c].sample(rng, 20000);
    for (std::size_t j = 0; j < 2; ++j) {
        double m1 = 0, m2 = 0, s1 = 0, s2 = 0;
        for (std::size_t r = 0; r < n; ++r) m1 += w.training.x0.at(c * n + r, j) / static_cast<double>(n);
        for (std::size_t r = 0; r < clean.rows(); ++r) m2 += clean.at(r, j) / static_cast<double>(clean.rows());
        for (std::size_t r = 0; r < n; ++r) s1 += std::pow(w.training.x0.at(c * n + r, j) - m1, 2) / (n - 1.0);
        for (std::size_t r = 0; r < clean.rows(); ++r) s2 += std::pow(clean.at(r, j) - m2, 2) / (clean.rows() - 1.0);
        const double sigma2 = w.spec.corruption_sigma * w.spec.corruption_sigma;
        EXPECT_NEAR(s1 - s2, sigma2, 0.15 * sigma2 + 0.1 * s2);
    }
}

TEST(World, ValidationNamesTheField) {
    WorldSpec s;
    s.data_dim = 1;
    try {
        s.validate();
        FAIL() << "expected a ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field(), "world.data_dim");
    }
    s = WorldSpec{};
    s.degraded_class = 8;
    EXPECT_THROW(s.validate(), ConfigError);
    s = WorldSpec{};
    s.corruption_fraction = 1.5;
    EXPECT_THROW(s.validate(), ConfigError);
}

}  // namespace
}  // namespace reneg::harness
