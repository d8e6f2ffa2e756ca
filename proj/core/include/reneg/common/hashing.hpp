// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace reneg {

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view bytes);
std::string sha256_hex(std::span<const double> values);

/// Incremental SHA-256 over mixed content.
class Hasher {
public:
    Hasher();
    ~Hasher();
    Hasher(const Hasher&) = delete;
    Hasher& operator=(const Hasher&) = delete;

    Hasher& update(std::string_view bytes);
    Hasher& update(std::span<const double> values);
    std::string hex();

private:
    struct State;
    State* state_;
};

std::string sha256_file(const std::string& path);

}  // namespace reneg
