// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "reneg/common/rng.hpp"

namespace reneg {

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
    std::uint64_t z = parent + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<double> Rng::normals(std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = normal();
    return v;
}

ad::Tensor Rng::normal_tensor(ad::Shape shape, double stddev) {
    std::vector<double> v(ad::shape_numel(shape));
    for (auto& x : v) x = stddev * normal();
    return ad::Tensor(std::move(shape), std::move(v));
}

}  // namespace reneg
