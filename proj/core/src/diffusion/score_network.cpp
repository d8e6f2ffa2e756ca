// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "reneg/diffusion/score_network.hpp"

#include <cmath>
#include <numbers>

#include "reneg/autodiff/ops.hpp"
#include "reneg/common/hashing.hpp"
#include "reneg/common/rng.hpp"
#include "reneg/error.hpp"

namespace reneg::diffusion {

ad::Tensor time_embedding(std::span<const double> times, std::size_t features) {
    if (features % 2 != 0) throw InvalidArgument("time feature count must be even");
    const std::size_t half = features / 2;
    std::vector<double> out(times.size() * features);
    for (std::size_t r = 0; r < times.size(); ++r) {
        for (std::size_t k = 0; k < half; ++k) {
            // Frequencies span 1..100 cycles per unit time on a log scale.
            const double freq = half == 1 ? 1.0 : std::pow(100.0, static_cast<double>(k) / (half - 1));
            const double phase = 2.0 * std::numbers::pi * freq * times[r];
            out[r * features + k] = std::sin(phase);
            out[r * features + half + k] = std::cos(phase);
        }
    }
    return ad::Tensor::matrix(times.size(), features, std::move(out));
}

ScoreNetwork::ScoreNetwork(NetworkShape shape, std::vector<DenseLayer> layers, std::vector<LowRankAdapter> adapters)
    : shape_(shape), layers_(std::move(layers)), adapters_(std::move(adapters)) {
    if (layers_.size() != kLayers) throw InvalidArgument("score network needs exactly 3 layers");
    const std::size_t dims[kLayers + 1] = {shape_.input_dim(), shape_.width, shape_.width, shape_.data_dim};
    for (std::size_t l = 0; l < kLayers; ++l) {
        const auto& L = layers_[l];
        if (L.weight.shape() != ad::Shape{dims[l], dims[l + 1]} || L.bias.shape() != ad::Shape{dims[l + 1]}) {
            throw InvalidArgument("layer " + std::to_string(l) + " has weight " + ad::shape_string(L.weight.shape()) +
                                  ", expected " + ad::shape_string({dims[l], dims[l + 1]}));
        }
    }
    for (const auto& A : adapters_) {
        if (A.layer >= kLayers) throw InvalidArgument("adapter on unknown layer " + std::to_string(A.layer));
        if (A.a.shape() != ad::Shape{dims[A.layer], A.rank} || A.b.shape() != ad::Shape{A.rank, dims[A.layer + 1]}) {
            throw InvalidArgument("adapter shapes do not match layer " + std::to_string(A.layer));
        }
    }
}

ScoreNetwork ScoreNetwork::create(const NetworkShape& shape, std::uint64_t seed) {
    if (shape.data_dim == 0 || shape.cond_dim == 0 || shape.width == 0 || shape.time_features == 0) {
        throw InvalidArgument("network dimensions must be positive");
    }
    Rng rng(seed);
    const std::size_t dims[kLayers + 1] = {shape.input_dim(), shape.width, shape.width, shape.data_dim};
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l < kLayers; ++l) {
        DenseLayer L;
        if (l + 1 < kLayers) {
            L.weight = rng.normal_tensor({dims[l], dims[l + 1]}, 1.0 / std::sqrt(static_cast<double>(dims[l])));
        } else {
            L.weight = ad::Tensor::zeros({dims[l], dims[l + 1]});
        }
        L.bias = ad::Tensor::zeros({dims[l + 1]});
        layers.push_back(std::move(L));
    }
    return ScoreNetwork(shape, std::move(layers));
}

std::vector<ad::Tensor> ScoreNetwork::parameters() const {
    std::vector<ad::Tensor> p;
    for (const auto& L : layers_) {
        p.push_back(L.weight);
        p.push_back(L.bias);
    }
    for (const auto& A : adapters_) {
        p.push_back(A.a);
        p.push_back(A.b);
    }
    return p;
}

ScoreNetwork ScoreNetwork::with_parameters(std::span<const ad::Tensor> params) const {
    if (params.size() != 2 * (kLayers + adapters_.size())) throw InvalidArgument("parameter count mismatch");
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l < kLayers; ++l) layers.push_back({params[2 * l].detach(), params[2 * l + 1].detach()});
    std::vector<LowRankAdapter> adapters = adapters_;
    for (std::size_t k = 0; k < adapters.size(); ++k) {
        adapters[k].a = params[2 * kLayers + 2 * k].detach();
        adapters[k].b = params[2 * kLayers + 2 * k + 1].detach();
    }
    return ScoreNetwork(shape_, std::move(layers), std::move(adapters));
}

std::size_t ScoreNetwork::base_parameter_count() const {
    std::size_t n = 0;
    for (const auto& L : layers_) n += L.weight.numel() + L.bias.numel();
    return n;
}

std::size_t ScoreNetwork::adapter_parameter_count() const {
    std::size_t n = 0;
    for (const auto& A : adapters_) n += A.parameter_count();
    return n;
}

std::vector<std::size_t> ScoreNetwork::group_indices(ParamGroup group) const {
    std::vector<std::size_t> idx;
    if (group == ParamGroup::full_theta) {
        for (std::size_t i = 0; i < 2 * kLayers; ++i) idx.push_back(i);
    } else {
        for (std::size_t i = 0; i < 2 * adapters_.size(); ++i) idx.push_back(2 * kLayers + i);
    }
    return idx;
}

ad::Tensor ScoreNetwork::predict(const ad::Tensor& x_t, const ad::Tensor& cond, std::span<const double> times) const {
    const auto params = parameters();
    return predict(x_t, cond, times, params);
}

ad::Tensor ScoreNetwork::predict(const ad::Tensor& x_t, const ad::Tensor& cond, std::span<const double> times,
                                 std::span<const ad::Tensor> params) const {
    if (x_t.rank() != 2 || x_t.dim(1) != shape_.data_dim) {
        throw InvalidArgument("predict: x_t shape " + ad::shape_string(x_t.shape()) + " does not match data width " +
                              std::to_string(shape_.data_dim));
    }
    const std::size_t batch = x_t.dim(0);
    if (cond.shape() != ad::Shape{batch, shape_.cond_dim}) {
        throw InvalidArgument("predict: condition shape " + ad::shape_string(cond.shape()) + " vs x_t " +
                              ad::shape_string(x_t.shape()));
    }
    if (times.size() != batch) throw InvalidArgument("predict: one time input per row required");
    if (params.size() != 2 * (kLayers + adapters_.size())) throw InvalidArgument("predict: parameter count mismatch");

    const ad::Tensor parts[] = {x_t, time_embedding(times, shape_.time_features), cond};
    ad::Tensor h = ad::concat(parts, 1);
    for (std::size_t l = 0; l < kLayers; ++l) {
        ad::Tensor z = ad::matmul(h, params[2 * l]);
        for (std::size_t k = 0; k < adapters_.size(); ++k) {
            if (adapters_[k].layer != l) continue;
            const ad::Tensor& a = params[2 * kLayers + 2 * k];
            const ad::Tensor& b = params[2 * kLayers + 2 * k + 1];
            z = ad::add(z, ad::scale(ad::matmul(ad::matmul(h, a), b), adapters_[k].scaling()));
        }
        z = ad::add_row(z, params[2 * l + 1]);
        h = l + 1 < kLayers ? ad::silu(z) : z;
    }
    return h;
}

std::string ScoreNetwork::fingerprint() const {
    Hasher h;
    h.update("score-network:" + std::to_string(shape_.data_dim) + "," + std::to_string(shape_.cond_dim) + "," +
             std::to_string(shape_.time_features) + "," + std::to_string(shape_.width) + ";");
    for (const auto& p : parameters()) h.update(p.data());
    for (const auto& A : adapters_) h.update("adapter:" + std::to_string(A.layer) + "," + std::to_string(A.rank) + ";");
    return h.hex();
}

ad::Tensor predict_noise(const ScoreNetwork& net, const ad::Tensor& x_t, const ad::Tensor& cond, int t,
                         const NoiseSchedule& schedule) {
    schedule.require_step(t, "predict_noise");
    const std::vector<double> times(x_t.rank() == 2 ? x_t.dim(0) : 1, schedule.time(t));
    return net.predict(x_t, cond, times);
}

ScoreNetwork attach_adapter(const ScoreNetwork& net, std::size_t layer, std::size_t rank, std::uint64_t seed,
                            double alpha) {
    if (layer >= ScoreNetwork::kLayers) throw InvalidArgument("attach_adapter: unknown layer " + std::to_string(layer));
    const auto& w = net.layers()[layer].weight;
    const std::size_t in = w.dim(0), out = w.dim(1);
    if (rank < 1 || rank > std::min(in, out)) {
        throw InvalidArgument("attach_adapter: rank " + std::to_string(rank) + " outside [1, " +
                              std::to_string(std::min(in, out)) + "] for layer " + std::to_string(layer));
    }
    Rng rng(seed);
    LowRankAdapter adapter;
    adapter.layer = layer;
    adapter.rank = rank;
    adapter.alpha = alpha;
    adapter.a = rng.normal_tensor({in, rank}, 1.0 / std::sqrt(static_cast<double>(in)));
    adapter.b = ad::Tensor::zeros({rank, out});
    auto adapters = net.adapters();
    adapters.push_back(std::move(adapter));
    return ScoreNetwork(net.shape(), net.layers(), std::move(adapters));
}

BoundParameters bind_parameters(const ScoreNetwork& net, ad::Tape& tape, ParamGroup group) {
    BoundParameters bound{net.parameters(), {}};
    for (std::size_t i : net.group_indices(group)) {
        bound.params[i] = tape.leaf(bound.params[i]);
        bound.leaves.push_back(bound.params[i]);
    }
    return bound;
}

}  // namespace reneg::diffusion
