// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "reneg/diffusion/checkpoint.hpp"

#include <fstream>

#include "reneg/error.hpp"

namespace reneg::diffusion {
namespace {

using nlohmann::json;

json tensor_to_json(const ad::Tensor& t) { return json{{"shape", t.shape()}, {"data", t.values()}}; }

ad::Tensor tensor_from_json(const json& j) {
    return ad::Tensor(j.at("shape").get<ad::Shape>(), j.at("data").get<std::vector<double>>());
}

}  // namespace

json schedule_to_json(const NoiseSchedule& schedule) {
    return json{{"T", schedule.steps()},
                {"betas", std::vector<double>(schedule.betas().begin(), schedule.betas().end())},
                {"alpha_bars", std::vector<double>(schedule.alpha_bars().begin(), schedule.alpha_bars().end())},
                {"times", std::vector<double>(schedule.times().begin(), schedule.times().end())}};
}

NoiseSchedule schedule_from_json(const json& j) {
    auto s = NoiseSchedule::from_tables(j.at("betas").get<std::vector<double>>(),
                                        j.at("alpha_bars").get<std::vector<double>>(),
                                        j.at("times").get<std::vector<double>>());
    if (s.steps() != j.at("T").get<int>()) throw Error("schedule: T does not match table length");
    return s;
}

json encoder_to_json(const ConditionEncoder& encoder) {
    return json{{"names", encoder.names()},
                {"dim", encoder.dim()},
                {"table", tensor_to_json(encoder.table())},
                {"null_embedding", encoder.null_embedding().values()},
                {"fingerprint", encoder.fingerprint()}};
}

ConditionEncoder encoder_from_json(const json& j) {
    ConditionEncoder enc(j.at("names").get<std::vector<std::string>>(), tensor_from_json(j.at("table")),
                         ad::Tensor::vector(j.at("null_embedding").get<std::vector<double>>()));
    if (j.contains("fingerprint") && j.at("fingerprint").get<std::string>() != enc.fingerprint()) {
        throw Error("encoder: stored fingerprint does not match table contents");
    }
    return enc;
}

json network_to_json(const ScoreNetwork& network) {
    const auto& s = network.shape();
    json layers = json::array();
    for (const auto& L : network.layers()) {
        layers.push_back({{"weight", tensor_to_json(L.weight)}, {"bias", tensor_to_json(L.bias)}});
    }
    json adapters = json::array();
    for (const auto& A : network.adapters()) {
        adapters.push_back({{"layer", A.layer},
                            {"rank", A.rank},
                            {"alpha", A.alpha},
                            {"a", tensor_to_json(A.a)},
                            {"b", tensor_to_json(A.b)}});
    }
    return json{{"shape",
                 {{"data_dim", s.data_dim}, {"cond_dim", s.cond_dim}, {"time_features", s.time_features},
                  {"width", s.width}}},
                {"layers", layers},
                {"adapters", adapters},
                {"fingerprint", network.fingerprint()}};
}

ScoreNetwork network_from_json(const json& j) {
    const auto& s = j.at("shape");
    NetworkShape shape{s.at("data_dim").get<std::size_t>(), s.at("cond_dim").get<std::size_t>(),
                       s.at("time_features").get<std::size_t>(), s.at("width").get<std::size_t>()};
    std::vector<DenseLayer> layers;
    for (const auto& L : j.at("layers")) {
        layers.push_back({tensor_from_json(L.at("weight")), tensor_from_json(L.at("bias"))});
    }
    std::vector<LowRankAdapter> adapters;
    for (const auto& A : j.value("adapters", json::array())) {
        adapters.push_back({A.at("layer").get<std::size_t>(), A.at("rank").get<std::size_t>(),
                            A.at("alpha").get<double>(), tensor_from_json(A.at("a")), tensor_from_json(A.at("b"))});
    }
    ScoreNetwork net(shape, std::move(layers), std::move(adapters));
    if (j.contains("fingerprint") && j.at("fingerprint").get<std::string>() != net.fingerprint()) {
        throw Error("network: stored fingerprint does not match weights");
    }
    return net;
}

json checkpoint_to_json(const Checkpoint& c) {
    return json{{"format_version", kCheckpointFormatVersion},
                {"schedule", schedule_to_json(c.schedule)},
                {"encoder", encoder_to_json(c.encoder)},
                {"network", network_to_json(c.network)},
                {"pretrain",
                 {{"steps", c.pretrain.steps},
                  {"learning_rate", c.pretrain.learning_rate},
                  {"batch_size", c.pretrain.batch_size},
                  {"p_drop", c.pretrain.p_drop},
                  {"seed", c.pretrain.seed}}},
                {"seed", c.seed},
                {"config_hash", c.config_hash}};
}

Checkpoint checkpoint_from_json(const json& j) {
    const int version = j.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
        throw Error("checkpoint: unsupported format_version " + std::to_string(version));
    }
    const auto& p = j.at("pretrain");
    PretrainConfig pc;
    pc.steps = p.at("steps").get<std::size_t>();
    pc.learning_rate = p.at("learning_rate").get<double>();
    pc.batch_size = p.at("batch_size").get<std::size_t>();
    pc.p_drop = p.at("p_drop").get<double>();
    pc.seed = p.at("seed").get<std::uint64_t>();
    return Checkpoint{schedule_from_json(j.at("schedule")), encoder_from_json(j.at("encoder")),
                      network_from_json(j.at("network")), pc, j.at("seed").get<std::uint64_t>(),
                      j.value("config_hash", std::string{})};
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write checkpoint " + path);
    out << checkpoint_to_json(checkpoint).dump(1) << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read checkpoint " + path);
    return checkpoint_from_json(json::parse(in));
}

}  // namespace reneg::diffusion
