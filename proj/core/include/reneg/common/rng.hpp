// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "reneg/autodiff/tensor.hpp"

namespace reneg {

/// Derives an independent child seed from (parent, index) with splitmix64
/// finalization, so nested streams never depend on consumption order.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

/// Seeded random stream; one per logical consumer.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    /// Uniform integer in [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
    }
    std::vector<double> normals(std::size_t n);
    ad::Tensor normal_tensor(ad::Shape shape, double stddev = 1.0);

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace reneg
