// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

namespace reneg::diffusion {

/// Variance schedule of a discrete diffusion process.
///
/// Indices run over t in [1, T]; index 0 is the clean end with alpha_bar(0) == 1.
/// Every schedule also carries the network time input of each index, as a
/// fraction of the training horizon, so that a schedule resampled onto fewer
/// inference steps still feeds the network the training-time positions it
/// was trained on.
class NoiseSchedule {
public:
    /// Linear beta ramp from beta_min to beta_max over T steps.
    static NoiseSchedule linear(int steps, double beta_min, double beta_max);

    /// Builds a schedule from cumulative products alpha_bar(1..T) and their
    /// network time inputs. alpha_bar must be strictly decreasing in (0, 1).
    static NoiseSchedule from_alpha_bars(std::vector<double> alpha_bars, std::vector<double> times);

    /// Restores a schedule from stored tables; checks that alpha_bars is the
    /// running product of (1 - beta) within 1e-12.
    static NoiseSchedule from_tables(std::vector<double> betas, std::vector<double> alpha_bars,
                                     std::vector<double> times);

    /// Subsequence of `count` indices spread evenly over [1, T], ending at T.
    NoiseSchedule resample(int count) const;

    int steps() const noexcept { return static_cast<int>(alpha_bars_.size()); }

    double beta(int t) const;
    double alpha(int t) const;
    /// alpha_bar(0) == 1.
    double alpha_bar(int t) const;
    /// Network time input for index t; time(0) == 0.
    double time(int t) const;

    std::span<const double> betas() const noexcept { return betas_; }
    std::span<const double> alpha_bars() const noexcept { return alpha_bars_; }
    std::span<const double> times() const noexcept { return times_; }

    /// Throws InvalidArgument unless t is in [1, T].
    void require_step(int t, const char* op) const;

private:
    NoiseSchedule(std::vector<double> betas, std::vector<double> alpha_bars, std::vector<double> times);

    std::vector<double> betas_;
    std::vector<double> alpha_bars_;
    std::vector<double> times_;
};

/// build_schedule: linear betas, validated. Rejects T < 1 and betas outside
/// 0 < beta_min <= beta_max < 1.
NoiseSchedule build_schedule(int steps, double beta_min, double beta_max);

}  // namespace reneg::diffusion
