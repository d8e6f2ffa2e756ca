// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "reneg/probe/efficiency.hpp"

#include <algorithm>
#include <cmath>

#include "reneg/autodiff/ops.hpp"
#include "reneg/autodiff/tape.hpp"
#include "reneg/common/parallel.hpp"
#include "reneg/common/rng.hpp"
#include "reneg/error.hpp"

namespace reneg::probe {
namespace {

struct Setup {
    diffusion::ScoreNetwork net;
    std::vector<std::size_t> indices;  // group tensors in net.parameters(); empty for the negative
    ad::Tensor negative;
    std::size_t d_theta = 0;
};

Setup make_setup(const sampling::DiffusionModel& model, const ProbeGroup& group, const ProbeConfig& config) {
    Setup s{model.network, {}, config.negative.rank() == 0 ? model.encoder.null_embedding() : config.negative, 0};
    if (s.negative.rank() != 1 || s.negative.numel() != model.encoder.dim()) {
        throw InvalidArgument("probe: negative must be a [d_e] vector");
    }
    switch (group.kind) {
        case ProbeGroup::Kind::neg_embedding:
            s.d_theta = s.negative.numel();
            break;
        case ProbeGroup::Kind::full_theta:
            s.indices = s.net.group_indices(diffusion::ParamGroup::full_theta);
            break;
        case ProbeGroup::Kind::adapter:
            s.net = diffusion::attach_adapter(s.net, group.layer, group.rank, derive_seed(derive_seed(config.seed, 0xada), config.adapter_init));
            s.indices = s.net.group_indices(diffusion::ParamGroup::adapters);
            break;
    }
    const auto params = s.net.parameters();
    for (auto i : s.indices) s.d_theta += params[i].numel();
    if (s.d_theta == 0) throw InvalidArgument("probe: parameter group '" + group.name() + "' is empty");
    return s;
}

ad::Tensor run_chain(const sampling::DiffusionModel& model, const Setup& s, std::span<const int> prompts,
                     std::vector<ad::Tensor> params, const ad::Tensor& negative, const ProbeConfig& config) {
    const auto schedule = model.schedule.resample(config.steps);
    const auto eps = sampling::network_predictor(s.net, schedule, std::move(params));
    std::vector<std::uint64_t> seeds(prompts.size());
    for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = derive_seed(config.seed, i);
    return sampling::sample_chain(eps, schedule, model.encoder.encode_batch(prompts),
                                  ad::broadcast_rows(negative, prompts.size()), config.gamma, sampling::Solver::ddim,
                                  seeds, model.network.shape().data_dim, false)
        .x0;
}

void require_prompts(const sampling::DiffusionModel& model, std::span<const int> prompts) {
    if (prompts.empty()) throw InvalidArgument("probe needs at least one prompt");
    for (int p : prompts) model.encoder.require_prompt(p);
}

}  // namespace

std::string ProbeGroup::name() const {
    switch (kind) {
        case Kind::full_theta: return "full_theta";
        case Kind::neg_embedding: return "neg_embedding";
        case Kind::adapter: return "adapter_r" + std::to_string(rank);
    }
    return "unknown";
}

double Jacobian::frobenius() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s);
}

Jacobian sampling_jacobian(const sampling::DiffusionModel& model, std::span<const int> prompts,
                           const ProbeGroup& group, const ProbeConfig& config) {
    require_prompts(model, prompts);
    const Setup s = make_setup(model, group, config);

    ad::Tape tape;
    std::vector<ad::Tensor> params = s.net.parameters();
    std::vector<ad::Tensor> leaves;
    for (auto i : s.indices) leaves.push_back(params[i] = tape.leaf(params[i]));
    ad::Tensor negative = s.negative;
    if (group.kind == ProbeGroup::Kind::neg_embedding) leaves.push_back(negative = tape.leaf(negative));

    const ad::Tensor x0 = run_chain(model, s, prompts, params, negative, config);
    const std::size_t N = prompts.size(), D = x0.dim(1), cols = N * D;
    std::vector<ad::Tensor> roots;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < D; ++j) roots.push_back(ad::sum(ad::slice(ad::slice(x0, 0, i, i + 1), 1, j, j + 1)));

    Jacobian J{group.name(), s.d_theta, N, D, std::vector<double>(s.d_theta * cols, 0.0)};
    parallel_for(cols, [&](std::size_t c) {
        const ad::GradientMap g = tape.backward(roots[c]);
        std::size_t offset = 0;
        for (const auto& leaf : leaves) {
            const auto it = g.find(*leaf.node_id());
            if (it != g.end()) {
                const auto& v = it->second.values();
                for (std::size_t e = 0; e < v.size(); ++e) J.values[(offset + e) * cols + c] = v[e];
            }
            offset += leaf.numel();
        }
    });
    return J;
}

double parameter_efficiency(double frobenius, std::size_t prompts, std::size_t output_dim, std::size_t d_theta) {
    if (prompts == 0 || output_dim == 0 || d_theta == 0) throw InvalidArgument("parameter_efficiency: zero dimension");
    if (!(frobenius >= 0.0)) throw InvalidArgument("parameter_efficiency: negative norm");
    return frobenius / (static_cast<double>(prompts) * static_cast<double>(output_dim) * static_cast<double>(d_theta));
}

double parameter_efficiency(const Jacobian& j) {
    if (j.values.size() != j.d_theta * j.prompts * j.output_dim) {
        throw InvalidArgument("parameter_efficiency: Jacobian size does not match its dimensions");
    }
    return parameter_efficiency(j.frobenius(), j.prompts, j.output_dim, j.d_theta);
}

std::vector<SpotCheck> finite_difference_spot_checks(const sampling::DiffusionModel& model,
                                                     std::span<const int> prompts, const ProbeGroup& group,
                                                     const ProbeConfig& config, const Jacobian& jacobian,
                                                     std::size_t count, double step, std::uint64_t seed) {
    require_prompts(model, prompts);
    if (!(step > 0.0)) throw InvalidArgument("finite differences need a positive step");
    const Setup s = make_setup(model, group, config);
    if (jacobian.d_theta != s.d_theta || jacobian.prompts != prompts.size()) {
        throw InvalidArgument("spot check: Jacobian does not match the probe setup");
    }
    const std::size_t cols = jacobian.prompts * jacobian.output_dim;
    Rng rng(seed);
    std::vector<SpotCheck> checks(count);
    for (auto& c : checks) {
        c.param = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(s.d_theta) - 1));
        c.column = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(cols) - 1));
        c.analytic = jacobian.at(c.param, c.column);
    }
    parallel_for(count, [&](std::size_t k) {
        SpotCheck& c = checks[k];
        auto evaluate = [&](double delta) {
            std::vector<ad::Tensor> params = s.net.parameters();
            ad::Tensor negative = s.negative;
            ad::Tensor* target = &negative;
            std::size_t local = c.param;
            for (auto i : s.indices) {
                if (local < params[i].numel()) {
                    target = &params[i];
                    break;
                }
                local -= params[i].numel();
            }
            std::vector<double> v = target->values();
            v[local] += delta;
            *target = ad::Tensor(target->shape(), std::move(v));
            return run_chain(model, s, prompts, params, negative, config)[c.column];
        };
        c.numeric = (evaluate(step) - evaluate(-step)) / (2.0 * step);
        const double scale = std::max({std::abs(c.analytic), std::abs(c.numeric), 1e-7});
        c.relative_error = std::abs(c.analytic - c.numeric) / scale;
    });
    return checks;
}

GroupComparison compare_groups(const sampling::DiffusionModel& model, std::span<const int> prompts,
                               std::span<const std::size_t> ranks, const ProbeConfig& config) {
    if (ranks.empty()) throw InvalidArgument("compare_groups needs at least one adapter rank");
    std::vector<ProbeGroup> groups = {ProbeGroup::negative(), ProbeGroup::theta()};
    for (auto r : ranks) groups.push_back(ProbeGroup::adapter(r));

    if (config.adapter_inits == 0) throw InvalidArgument("compare_groups needs adapter_inits >= 1");
    GroupComparison out;
    for (const auto& g : groups) {
        const std::size_t draws = g.kind == ProbeGroup::Kind::adapter ? config.adapter_inits : 1;
        EfficiencyReport report;
        for (std::size_t k = 0; k < draws; ++k) {
            ProbeConfig c = config;
            c.adapter_init = k;
            const Jacobian J = sampling_jacobian(model, prompts, g, c);
            report = {J.group, J.d_theta, J.prompts, J.output_dim, report.frobenius + J.frobenius(),
                      report.efficiency + parameter_efficiency(J)};
        }
        report.frobenius /= static_cast<double>(draws);
        report.efficiency /= static_cast<double>(draws);
        out.reports.push_back(report);
    }
    const auto& neg = out.reports[0];
    const auto& theta = out.reports[1];
    const auto small = std::min_element(ranks.begin(), ranks.end()) - ranks.begin();
    const auto large = std::max_element(ranks.begin(), ranks.end()) - ranks.begin();
    const auto& rs = out.reports[2 + static_cast<std::size_t>(small)];
    const auto& rl = out.reports[2 + static_cast<std::size_t>(large)];
    auto ratio = [](double a, double b) { return b > 0.0 ? a / b : (a > 0.0 ? INFINITY : 1.0); };
    out.verdict.negative_over_theta = ratio(neg.efficiency, theta.efficiency);
    out.verdict.small_rank_over_large_rank = ratio(rs.efficiency, rl.efficiency);
    out.verdict.negative_beats_theta = neg.efficiency > theta.efficiency;
    out.verdict.small_rank_beats_large_rank = rs.efficiency > rl.efficiency;
    return out;
}

}  // namespace reneg::probe
