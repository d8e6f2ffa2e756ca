// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "reneg/autodiff/tensor.hpp"
#include "reneg/diffusion/encoder.hpp"

namespace reneg::trainer {

enum class Provenance { null_init, handcrafted, global_trained, per_sample };

const char* provenance_name(Provenance p);
Provenance parse_provenance(const std::string& name);

/// A vector for the negative slot of guidance, tied to the encoder it was
/// made for.
struct NegativeEmbedding {
    ad::Tensor vector;  // [d_e]
    std::string encoder_fingerprint;
    Provenance provenance = Provenance::null_init;
    std::string config_hash;
    std::string reward_curve_path;
};

inline constexpr int kEmbeddingFormatVersion = 1;

/// The encoder's null embedding.
NegativeEmbedding null_negative(const diffusion::ConditionEncoder& encoder);

/// The encoder's embedding of `prompt`, used as a hand-picked negative.
NegativeEmbedding handcrafted_negative(const diffusion::ConditionEncoder& encoder, int prompt);

/// Throws InvalidArgument on a length or fingerprint mismatch.
void require_compatible(const NegativeEmbedding& n, const diffusion::ConditionEncoder& encoder);

nlohmann::json embedding_to_json(const NegativeEmbedding& n);
NegativeEmbedding embedding_from_json(const nlohmann::json& j);
void save_embedding(const NegativeEmbedding& n, const std::string& path);
NegativeEmbedding load_embedding(const std::string& path);

}  // namespace reneg::trainer
