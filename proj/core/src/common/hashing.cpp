// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "reneg/common/hashing.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <iterator>

#include "reneg/error.hpp"

namespace reneg {

struct Hasher::State {
    EVP_MD_CTX* ctx = nullptr;
};

Hasher::Hasher() : state_(new State) {
    state_->ctx = EVP_MD_CTX_new();
    if (state_->ctx == nullptr || EVP_DigestInit_ex(state_->ctx, EVP_sha256(), nullptr) != 1) {
        throw Error("failed to initialise SHA-256");
    }
}

Hasher::~Hasher() {
    EVP_MD_CTX_free(state_->ctx);
    delete state_;
}

Hasher& Hasher::update(std::string_view bytes) {
    EVP_DigestUpdate(state_->ctx, bytes.data(), bytes.size());
    return *this;
}

Hasher& Hasher::update(std::span<const double> values) {
    EVP_DigestUpdate(state_->ctx, values.data(), values.size_bytes());
    return *this;
}

std::string Hasher::hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(state_->ctx, digest.data(), &len);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xf]);
    }
    return out;
}

std::string sha256_hex(std::string_view bytes) { return Hasher().update(bytes).hex(); }

std::string sha256_hex(std::span<const double> values) { return Hasher().update(values).hex(); }

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path + " for hashing");
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return sha256_hex(content);
}

}  // namespace reneg
