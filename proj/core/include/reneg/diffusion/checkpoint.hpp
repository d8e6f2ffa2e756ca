// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "reneg/diffusion/encoder.hpp"
#include "reneg/diffusion/pretrain.hpp"
#include "reneg/diffusion/schedule.hpp"
#include "reneg/diffusion/score_network.hpp"

namespace reneg::diffusion {

inline constexpr int kCheckpointFormatVersion = 1;

/// Everything needed to restore a pretrained world model. Field layout of the
/// JSON form is documented in docs/checkpoint_schema.md.
struct Checkpoint {
    NoiseSchedule schedule;
    ConditionEncoder encoder;
    ScoreNetwork network;
    PretrainConfig pretrain;
    std::uint64_t seed = 0;
    std::string config_hash;
};

nlohmann::json schedule_to_json(const NoiseSchedule& schedule);
NoiseSchedule schedule_from_json(const nlohmann::json& j);
nlohmann::json encoder_to_json(const ConditionEncoder& encoder);
/// Verifies the stored fingerprint against the restored table.
ConditionEncoder encoder_from_json(const nlohmann::json& j);
nlohmann::json network_to_json(const ScoreNetwork& network);
ScoreNetwork network_from_json(const nlohmann::json& j);

nlohmann::json checkpoint_to_json(const Checkpoint& checkpoint);
/// Rejects unknown format versions and fingerprint mismatches.
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace reneg::diffusion
