// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "reneg/autodiff/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "reneg/autodiff/tape.hpp"
#include "reneg/error.hpp"

namespace reneg::ad {

GradCheckResult grad_check(const ScalarFunction& f, std::span<const Tensor> point, double step) {
    if (!(step > 0.0)) throw InvalidArgument("grad_check: step must be positive");

    std::vector<Tensor> base;
    base.reserve(point.size());
    for (const auto& p : point) base.push_back(p.detach());

    const double f0 = f(base).item();
    if (!std::isfinite(f0)) throw InvalidArgument("grad_check: function is not finite at the check point");

    Tape tape;
    std::vector<Tensor> leaves;
    leaves.reserve(base.size());
    for (const auto& b : base) leaves.push_back(tape.leaf(b));
    const Tensor root = f(leaves);
    const GradientMap grads = tape.backward(root);

    GradCheckResult result;
    for (std::size_t k = 0; k < base.size(); ++k) {
        const auto it = grads.find(*leaves[k].node_id());
        const Tensor analytic = it != grads.end() ? it->second : Tensor::zeros(base[k].shape());
        for (std::size_t i = 0; i < base[k].numel(); ++i) {
            auto eval_at = [&](double delta) {
                std::vector<double> v = base[k].values();
                v[i] += delta;
                std::vector<Tensor> args = base;
                args[k] = Tensor(base[k].shape(), std::move(v));
                return f(args).item();
            };
            const double numeric = (eval_at(step) - eval_at(-step)) / (2.0 * step);
            const double err = std::abs(analytic[i] - numeric) / (std::abs(numeric) + 1e-12);
            result.max_relative_error = std::max(result.max_relative_error, err);
            ++result.coordinates;
        }
    }
    return result;
}

}  // namespace reneg::ad
