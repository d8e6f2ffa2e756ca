// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "reneg/diffusion/schedule.hpp"

#include <cmath>
#include <string>

#include "reneg/error.hpp"

namespace reneg::diffusion {

NoiseSchedule::NoiseSchedule(std::vector<double> betas, std::vector<double> alpha_bars, std::vector<double> times)
    : betas_(std::move(betas)), alpha_bars_(std::move(alpha_bars)), times_(std::move(times)) {}

NoiseSchedule NoiseSchedule::linear(int steps, double beta_min, double beta_max) {
    if (steps < 1) throw InvalidArgument("schedule needs T >= 1, got " + std::to_string(steps));
    if (!(beta_min > 0.0) || !(beta_min <= beta_max) || !(beta_max < 1.0)) {
        throw InvalidArgument("schedule needs 0 < beta_min <= beta_max < 1, got [" + std::to_string(beta_min) + ", " +
                              std::to_string(beta_max) + "]");
    }
    const auto n = static_cast<std::size_t>(steps);
    std::vector<double> betas(n), alpha_bars(n), times(n);
    double running = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double frac = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
        betas[i] = beta_min + frac * (beta_max - beta_min);
        running *= 1.0 - betas[i];
        alpha_bars[i] = running;
        times[i] = static_cast<double>(i + 1) / static_cast<double>(n);
    }
    return NoiseSchedule(std::move(betas), std::move(alpha_bars), std::move(times));
}

NoiseSchedule NoiseSchedule::from_alpha_bars(std::vector<double> alpha_bars, std::vector<double> times) {
    if (alpha_bars.empty() || alpha_bars.size() != times.size()) {
        throw InvalidArgument("schedule needs matching non-empty alpha_bar and time tables");
    }
    std::vector<double> betas(alpha_bars.size());
    double prev = 1.0;
    for (std::size_t i = 0; i < alpha_bars.size(); ++i) {
        if (!(alpha_bars[i] > 0.0) || !(alpha_bars[i] < prev)) {
            throw InvalidArgument("alpha_bar must be strictly decreasing in (0, 1) at index " + std::to_string(i + 1));
        }
        betas[i] = 1.0 - alpha_bars[i] / prev;
        prev = alpha_bars[i];
    }
    return NoiseSchedule(std::move(betas), std::move(alpha_bars), std::move(times));
}

NoiseSchedule NoiseSchedule::from_tables(std::vector<double> betas, std::vector<double> alpha_bars,
                                         std::vector<double> times) {
    const NoiseSchedule reference = from_alpha_bars(alpha_bars, times);
    if (betas.size() != alpha_bars.size()) throw InvalidArgument("schedule tables differ in length");
    double running = 1.0;
    for (std::size_t i = 0; i < betas.size(); ++i) {
        running *= 1.0 - betas[i];
        if (std::abs(running - alpha_bars[i]) > 1e-12 || std::abs(betas[i] - reference.betas_[i]) > 1e-9) {
            throw InvalidArgument("alpha_bar is not the running product of alphas at index " + std::to_string(i + 1));
        }
    }
    return NoiseSchedule(std::move(betas), std::move(alpha_bars), std::move(times));
}

NoiseSchedule NoiseSchedule::resample(int count) const {
    const int total = steps();
    if (count < 1 || count > total) {
        throw InvalidArgument("cannot resample a " + std::to_string(total) + "-step schedule to " +
                              std::to_string(count) + " steps");
    }
    if (count == total) return *this;
    std::vector<double> alpha_bars, times;
    for (int k = 1; k <= count; ++k) {
        const auto idx = static_cast<int>(std::lround(static_cast<double>(k) * total / count));
        alpha_bars.push_back(alpha_bar(idx));
        times.push_back(time(idx));
    }
    return from_alpha_bars(std::move(alpha_bars), std::move(times));
}

void NoiseSchedule::require_step(int t, const char* op) const {
    if (t < 1 || t > steps()) {
        throw InvalidArgument(std::string(op) + ": timestep " + std::to_string(t) + " outside [1, " +
                              std::to_string(steps()) + "]");
    }
}

double NoiseSchedule::beta(int t) const {
    require_step(t, "beta");
    return betas_[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::alpha(int t) const { return 1.0 - beta(t); }

double NoiseSchedule::alpha_bar(int t) const {
    if (t == 0) return 1.0;
    require_step(t, "alpha_bar");
    return alpha_bars_[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::time(int t) const {
    if (t == 0) return 0.0;
    require_step(t, "time");
    return times_[static_cast<std::size_t>(t - 1)];
}

NoiseSchedule build_schedule(int steps, double beta_min, double beta_max) {
    return NoiseSchedule::linear(steps, beta_min, beta_max);
}

}  // namespace reneg::diffusion
