// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "reneg/trainer/embedding.hpp"

#include <fstream>

#include "reneg/error.hpp"

namespace reneg::trainer {

using nlohmann::json;

const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::null_init: return "null_init";
        case Provenance::handcrafted: return "handcrafted";
        case Provenance::global_trained: return "global_trained";
        case Provenance::per_sample: return "per_sample";
    }
    return "unknown";
}

Provenance parse_provenance(const std::string& name) {
    for (auto p : {Provenance::null_init, Provenance::handcrafted, Provenance::global_trained, Provenance::per_sample}) {
        if (name == provenance_name(p)) return p;
    }
    throw InvalidArgument("unknown provenance '" + name + "'");
}

NegativeEmbedding null_negative(const diffusion::ConditionEncoder& encoder) {
    return {encoder.null_embedding(), encoder.fingerprint(), Provenance::null_init, {}, {}};
}

NegativeEmbedding handcrafted_negative(const diffusion::ConditionEncoder& encoder, int prompt) {
    return {encoder.encode(prompt), encoder.fingerprint(), Provenance::handcrafted, {}, {}};
}

void require_compatible(const NegativeEmbedding& n, const diffusion::ConditionEncoder& encoder) {
    if (n.vector.rank() != 1 || n.vector.numel() != encoder.dim()) {
        throw InvalidArgument("negative embedding has shape " + ad::shape_string(n.vector.shape()) +
                              ", encoder dimension is " + std::to_string(encoder.dim()));
    }
    if (n.encoder_fingerprint != encoder.fingerprint()) {
        throw InvalidArgument("negative embedding was made for encoder " + n.encoder_fingerprint.substr(0, 12) +
                              ", not " + encoder.fingerprint().substr(0, 12));
    }
}

json embedding_to_json(const NegativeEmbedding& n) {
    return json{{"format_version", kEmbeddingFormatVersion},
                {"vector", n.vector.values()},
                {"d_e", n.vector.numel()},
                {"encoder_fingerprint", n.encoder_fingerprint},
                {"provenance", provenance_name(n.provenance)},
                {"config_hash", n.config_hash},
                {"reward_curve_path", n.reward_curve_path}};
}

NegativeEmbedding embedding_from_json(const json& j) {
    const int version = j.at("format_version").get<int>();
    if (version != kEmbeddingFormatVersion) {
        throw Error("embedding: unsupported format_version " + std::to_string(version));
    }
    NegativeEmbedding n;
    n.vector = ad::Tensor::vector(j.at("vector").get<std::vector<double>>());
    if (n.vector.numel() != j.at("d_e").get<std::size_t>()) throw Error("embedding: d_e does not match vector length");
    n.encoder_fingerprint = j.at("encoder_fingerprint").get<std::string>();
    n.provenance = parse_provenance(j.at("provenance").get<std::string>());
    n.config_hash = j.value("config_hash", std::string{});
    n.reward_curve_path = j.value("reward_curve_path", std::string{});
    return n;
}

void save_embedding(const NegativeEmbedding& n, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write embedding " + path);
    out << embedding_to_json(n).dump(1) << '\n';
}

NegativeEmbedding load_embedding(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read embedding " + path);
    return embedding_from_json(json::parse(in));
}

}  // namespace reneg::trainer
