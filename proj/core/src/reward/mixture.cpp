// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "reneg/reward/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "reneg/error.hpp"

namespace reneg::reward {

std::vector<double> cholesky(std::span<const double> m, std::size_t n) {
    if (m.size() != n * n) throw InvalidArgument("cholesky: matrix is not " + std::to_string(n) + "x" + std::to_string(n));
    std::vector<double> L(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = m[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= L[i * n + k] * L[j * n + k];
            if (i == j) {
                if (!(s > 0.0)) throw InvalidArgument("covariance is not positive definite");
                L[i * n + i] = std::sqrt(s);
            } else {
                L[i * n + j] = s / L[j * n + j];
            }
        }
    }
    return L;
}

std::vector<double> spd_inverse(std::span<const double> m, std::size_t n) {
    const auto L = cholesky(m, n);
    // Solve L L^T X = I column by column.
    std::vector<double> inv(n * n, 0.0), y(n);
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = i == c ? 1.0 : 0.0;
            for (std::size_t k = 0; k < i; ++k) s -= L[i * n + k] * y[k];
            y[i] = s / L[i * n + i];
        }
        for (std::size_t ii = n; ii-- > 0;) {
            double s = y[ii];
            for (std::size_t k = ii + 1; k < n; ++k) s -= L[k * n + ii] * inv[k * n + c];
            inv[ii * n + c] = s / L[ii * n + ii];
        }
    }
    return inv;
}

double spd_log_det(std::span<const double> m, std::size_t n) {
    const auto L = cholesky(m, n);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::log(L[i * n + i]);
    return 2.0 * s;
}

std::size_t GaussianMixture::dim() const {
    if (components.empty()) throw InvalidArgument("mixture has no components");
    return components.front().mean.size();
}

void GaussianMixture::validate() const {
    const std::size_t d = dim();
    if (d == 0) throw InvalidArgument("mixture dimension is zero");
    double total = 0.0;
    for (const auto& c : components) {
        if (c.mean.size() != d || c.covariance.size() != d * d) {
            throw InvalidArgument("mixture components disagree on dimension");
        }
        if (!(c.weight > 0.0) || !std::isfinite(c.weight)) throw InvalidArgument("mixture weight must be positive");
        for (double v : c.mean) {
            if (!std::isfinite(v)) throw InvalidArgument("mixture mean is not finite");
        }
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < i; ++j)
                if (std::abs(c.covariance[i * d + j] - c.covariance[j * d + i]) > 1e-12) {
                    throw InvalidArgument("covariance is not symmetric");
                }
        (void)cholesky(c.covariance, d);
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("mixture weights sum to " + std::to_string(total));
}

std::vector<double> GaussianMixture::mean() const {
    std::vector<double> m(dim(), 0.0);
    for (const auto& c : components)
        for (std::size_t i = 0; i < m.size(); ++i) m[i] += c.weight * c.mean[i];
    return m;
}

double GaussianMixture::log_density(std::span<const double> x) const {
    const std::size_t d = dim();
    if (x.size() != d) throw InvalidArgument("log_density: point has wrong dimension");
    std::vector<double> terms;
    for (const auto& c : components) {
        const auto P = spd_inverse(c.covariance, d);
        double q = 0.0;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) q += (x[i] - c.mean[i]) * P[i * d + j] * (x[j] - c.mean[j]);
        terms.push_back(std::log(c.weight) - 0.5 * (static_cast<double>(d) * std::log(2.0 * std::numbers::pi) +
                                                    spd_log_det(c.covariance, d) + q));
    }
    const double m = *std::max_element(terms.begin(), terms.end());
    double s = 0.0;
    for (double t : terms) s += std::exp(t - m);
    return m + std::log(s);
}

ad::Tensor GaussianMixture::sample(Rng& rng, std::size_t n) const {
    const std::size_t d = dim();
    std::vector<std::vector<double>> factors;
    for (const auto& c : components) factors.push_back(cholesky(c.covariance, d));
    std::vector<double> out(n * d);
    std::vector<double> z(d);
    for (std::size_t r = 0; r < n; ++r) {
        const double u = rng.uniform();
        std::size_t k = 0;
        double acc = components[0].weight;
        while (u >= acc && k + 1 < components.size()) acc += components[++k].weight;
        for (auto& v : z) v = rng.normal();
        const auto& L = factors[k];
        for (std::size_t i = 0; i < d; ++i) {
            double v = components[k].mean[i];
            for (std::size_t j = 0; j <= i; ++j) v += L[i * d + j] * z[j];
            out[r * d + i] = v;
        }
    }
    return ad::Tensor::matrix(n, d, std::move(out));
}

}  // namespace reneg::reward
