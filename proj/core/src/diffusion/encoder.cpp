// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "reneg/diffusion/encoder.hpp"

#include <cmath>

#include "reneg/common/hashing.hpp"
#include "reneg/common/rng.hpp"
#include "reneg/error.hpp"

namespace reneg::diffusion {
namespace {

std::string fingerprint_of(const ad::Tensor& table, const ad::Tensor& null_embedding) {
    Hasher h;
    h.update("condition-encoder:" + std::to_string(table.dim(0)) + "x" + std::to_string(table.dim(1)) + ";");
    h.update(table.data());
    h.update(null_embedding.data());
    return h.hex();
}

}  // namespace

ConditionEncoder::ConditionEncoder(std::vector<std::string> names, ad::Tensor table, ad::Tensor null_embedding)
    : names_(std::move(names)), table_(table.detach()), null_(null_embedding.detach()) {
    if (table_.rank() != 2 || table_.dim(0) != names_.size()) {
        throw InvalidArgument("encoder table " + ad::shape_string(table_.shape()) + " does not match " +
                              std::to_string(names_.size()) + " prompt names");
    }
    if (null_.numel() != table_.dim(1)) {
        throw InvalidArgument("null embedding " + ad::shape_string(null_.shape()) + " does not match width " +
                              std::to_string(table_.dim(1)));
    }
    null_ = null_.reshaped({table_.dim(1)});
    fingerprint_ = fingerprint_of(table_, null_);
}

ConditionEncoder ConditionEncoder::random(std::vector<std::string> names, std::size_t dim, std::uint64_t seed) {
    if (names.empty() || dim == 0) throw InvalidArgument("encoder needs at least one class and a positive width");
    Rng rng(seed);
    const std::size_t n = names.size();
    ad::Tensor table = rng.normal_tensor({n, dim});
    ad::Tensor null_embedding = rng.normal_tensor({dim});
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            double d2 = 0.0;
            for (std::size_t j = 0; j < dim; ++j) d2 += std::pow(table.at(a, j) - table.at(b, j), 2);
            if (std::sqrt(d2) < 1e-9) throw InvalidArgument("encoder rows " + std::to_string(a) + " and " +
                                                            std::to_string(b) + " coincide");
        }
    }
    return ConditionEncoder(std::move(names), std::move(table), std::move(null_embedding));
}

void ConditionEncoder::require_prompt(int prompt_id) const {
    if (prompt_id == kNullPrompt) return;
    if (prompt_id < 0 || static_cast<std::size_t>(prompt_id) >= names_.size()) {
        throw InvalidArgument("unknown prompt id " + std::to_string(prompt_id));
    }
}

ad::Tensor ConditionEncoder::encode(int prompt_id) const {
    require_prompt(prompt_id);
    if (prompt_id == kNullPrompt) return null_;
    const std::size_t d = dim();
    const auto begin = table_.data().begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(prompt_id) * d);
    return ad::Tensor::vector(std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(d)));
}

ad::Tensor ConditionEncoder::encode_batch(std::span<const int> prompt_ids) const {
    if (prompt_ids.empty()) throw InvalidArgument("encode_batch: empty prompt list");
    const std::size_t d = dim();
    std::vector<double> out;
    out.reserve(prompt_ids.size() * d);
    for (int id : prompt_ids) {
        const ad::Tensor row = encode(id);
        out.insert(out.end(), row.data().begin(), row.data().end());
    }
    return ad::Tensor::matrix(prompt_ids.size(), d, std::move(out));
}

const std::string& ConditionEncoder::name(int prompt_id) const {
    require_prompt(prompt_id);
    static const std::string kNull = "<null>";
    if (prompt_id == kNullPrompt) return kNull;
    return names_[static_cast<std::size_t>(prompt_id)];
}

}  // namespace reneg::diffusion
