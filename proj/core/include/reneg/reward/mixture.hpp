// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "reneg/autodiff/tensor.hpp"
#include "reneg/common/rng.hpp"

namespace reneg::reward {

struct GaussianComponent {
    double weight = 1.0;
    std::vector<double> mean;
    /// Row-major [d, d], symmetric positive definite.
    std::vector<double> covariance;
};

/// Finite Gaussian mixture in R^d.
struct GaussianMixture {
    std::vector<GaussianComponent> components;

    std::size_t dim() const;
    /// Throws InvalidArgument unless there is at least one component, all
    /// dimensions agree, weights are positive and sum to 1 (1e-9), and every
    /// covariance is symmetric positive definite.
    void validate() const;
    /// Mixture mean sum_k w_k mu_k.
    std::vector<double> mean() const;
    /// log sum_k w_k N(x; mu_k, Sigma_k) for a single point.
    double log_density(std::span<const double> x) const;
    /// n draws, [n, d].
    ad::Tensor sample(Rng& rng, std::size_t n) const;
};

/// Lower Cholesky factor of a row-major SPD matrix. Throws InvalidArgument
/// when the matrix is not positive definite.
std::vector<double> cholesky(std::span<const double> matrix, std::size_t n);

/// Inverse of a row-major SPD matrix via its Cholesky factor.
std::vector<double> spd_inverse(std::span<const double> matrix, std::size_t n);

/// log det of a row-major SPD matrix.
double spd_log_det(std::span<const double> matrix, std::size_t n);

}  // namespace reneg::reward
