// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "reneg/autodiff/tensor.hpp"

namespace reneg::diffusion {

/// Reserved prompt id that encodes to the null embedding.
inline constexpr int kNullPrompt = -1;

/// Frozen lookup table from prompt-class id to condition embedding, plus the
/// null embedding used for unconditional prediction. Immutable after
/// construction; the fingerprint is a SHA-256 over dimensions, table and null
/// embedding.
class ConditionEncoder {
public:
    ConditionEncoder(std::vector<std::string> names, ad::Tensor table, ad::Tensor null_embedding);

    /// Seeded N(0, 1) table and null embedding. Rejects any two rows closer
    /// than 1e-9 in L2 (which a continuous draw never produces).
    static ConditionEncoder random(std::vector<std::string> names, std::size_t dim, std::uint64_t seed);

    /// Table row for `prompt_id`, or the null embedding for kNullPrompt.
    ad::Tensor encode(int prompt_id) const;
    /// One row per id -> [B, d_e].
    ad::Tensor encode_batch(std::span<const int> prompt_ids) const;

    std::size_t classes() const noexcept { return names_.size(); }
    std::size_t dim() const noexcept { return table_.dim(1); }
    const std::string& name(int prompt_id) const;
    const std::vector<std::string>& names() const noexcept { return names_; }
    const ad::Tensor& table() const noexcept { return table_; }
    const ad::Tensor& null_embedding() const noexcept { return null_; }
    const std::string& fingerprint() const noexcept { return fingerprint_; }

    void require_prompt(int prompt_id) const;

private:
    std::vector<std::string> names_;
    ad::Tensor table_;
    ad::Tensor null_;
    std::string fingerprint_;
};

}  // namespace reneg::diffusion
