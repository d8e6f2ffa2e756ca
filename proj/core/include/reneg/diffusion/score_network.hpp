// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "reneg/autodiff/tape.hpp"
#include "reneg/autodiff/tensor.hpp"
#include "reneg/diffusion/schedule.hpp"

namespace reneg::diffusion {

struct NetworkShape {
    std::size_t data_dim = 2;
    std::size_t cond_dim = 16;
    std::size_t time_features = 16;
    std::size_t width = 128;

    std::size_t input_dim() const noexcept { return data_dim + time_features + cond_dim; }
    bool operator==(const NetworkShape&) const = default;
};

struct DenseLayer {
    ad::Tensor weight;  // [in, out]
    ad::Tensor bias;    // [out]
};

/// Low-rank update of one dense layer: W_eff = W + (alpha / rank) * A * B,
/// with A [in, rank] and B [rank, out].
struct LowRankAdapter {
    std::size_t layer = 0;
    std::size_t rank = 0;
    double alpha = 1.0;
    ad::Tensor a;
    ad::Tensor b;

    std::size_t parameter_count() const noexcept { return a.numel() + b.numel(); }
    double scaling() const noexcept { return alpha / static_cast<double>(rank); }
};

/// Parameter groups that can be exposed as tape leaves.
enum class ParamGroup { full_theta, adapters };

/// Sinusoidal features of the network time input, [B, features].
ad::Tensor time_embedding(std::span<const double> times, std::size_t features);

/// Noise predictor eps_theta(x_t, c, t): three dense layers with SiLU between
/// them over concat(x_t, time features, condition). The output layer starts
/// at zero. Value type; copies share immutable parameter storage.
class ScoreNetwork {
public:
    static constexpr std::size_t kLayers = 3;

    ScoreNetwork(NetworkShape shape, std::vector<DenseLayer> layers, std::vector<LowRankAdapter> adapters = {});

    /// Seeded initialisation: hidden layers N(0, 1/fan_in), output layer zero.
    static ScoreNetwork create(const NetworkShape& shape, std::uint64_t seed);

    const NetworkShape& shape() const noexcept { return shape_; }
    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    const std::vector<LowRankAdapter>& adapters() const noexcept { return adapters_; }

    /// Flat parameter list: W0, b0, W1, b1, W2, b2, then (A, B) per adapter.
    std::vector<ad::Tensor> parameters() const;
    ScoreNetwork with_parameters(std::span<const ad::Tensor> params) const;
    std::size_t base_parameter_count() const;
    std::size_t adapter_parameter_count() const;
    /// Indices into parameters() of the tensors in `group`.
    std::vector<std::size_t> group_indices(ParamGroup group) const;

    /// Prediction for a batch: x_t [B, d_x], cond [B, d_e], one time input per row.
    ad::Tensor predict(const ad::Tensor& x_t, const ad::Tensor& cond, std::span<const double> times) const;
    /// Same, with an explicit parameter list (as returned by parameters(),
    /// possibly with some entries replaced by tape leaves).
    ad::Tensor predict(const ad::Tensor& x_t, const ad::Tensor& cond, std::span<const double> times,
                       std::span<const ad::Tensor> params) const;

    /// SHA-256 over shape and every parameter byte.
    std::string fingerprint() const;

private:
    NetworkShape shape_;
    std::vector<DenseLayer> layers_;
    std::vector<LowRankAdapter> adapters_;
};

/// eps_theta(x_t, c, t) at schedule index t in [1, T] for every row.
ad::Tensor predict_noise(const ScoreNetwork& net, const ad::Tensor& x_t, const ad::Tensor& cond, int t,
                         const NoiseSchedule& schedule);

/// Returns a copy of `net` with a fresh adapter on `layer`: A ~ N(0, 1/in),
/// B = 0, so the output is initially unchanged. Rejects unknown layers and
/// rank outside [1, min(in, out)].
ScoreNetwork attach_adapter(const ScoreNetwork& net, std::size_t layer, std::size_t rank, std::uint64_t seed,
                            double alpha = 1.0);

/// Parameters of `net` with the tensors of `group` registered as leaves on
/// `tape`; everything else stays constant.
struct BoundParameters {
    std::vector<ad::Tensor> params;
    std::vector<ad::Tensor> leaves;
};
BoundParameters bind_parameters(const ScoreNetwork& net, ad::Tape& tape, ParamGroup group);

}  // namespace reneg::diffusion
