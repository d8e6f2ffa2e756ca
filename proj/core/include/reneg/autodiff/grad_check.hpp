// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "reneg/autodiff/tensor.hpp"

namespace reneg::ad {

/// A scalar-valued function of several tensors. It must build its result from
/// the arguments it is given so that it can be evaluated both on a tape (for
/// the analytic gradient) and on plain constants (for finite differences).
using ScalarFunction = std::function<Tensor(std::span<const Tensor>)>;

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t coordinates = 0;
};

/// Compares reverse-mode gradients of `f` at `point` against central
/// differences with the given step. The error of a coordinate is
/// |analytic - numeric| / (|numeric| + 1e-12); the maximum is returned.
///
/// Throws InvalidArgument when step <= 0 or f is not finite at `point`.
GradCheckResult grad_check(const ScalarFunction& f, std::span<const Tensor> point, double step = 1e-5);

}  // namespace reneg::ad
