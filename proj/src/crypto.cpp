// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include "puflab/crypto.hpp"

#include <cmath>
#include <stdexcept>

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>

#include "puflab/errors.hpp"

namespace puflab::crypto {

namespace {
EVP_MD_CTX *as_ctx(void *p) { return static_cast<EVP_MD_CTX *>(p); }

void check(int ok, const char *what) {
    if (ok != 1)
        throw Error(std::string("openssl: ") + what + " failed");
}
} // namespace

Digest sha256(std::span<const std::uint8_t> data) {
    Digest d{};
    unsigned int len = 0;
    check(EVP_Digest(data.data(), data.size(), d.data(), &len, EVP_sha256(), nullptr),
          "EVP_Digest");
    return d;
}

Sha256::Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_)
        throw Error("openssl: EVP_MD_CTX_new failed");
    check(EVP_DigestInit_ex(as_ctx(ctx_), EVP_sha256(), nullptr), "DigestInit");
}

Sha256::~Sha256() { EVP_MD_CTX_free(as_ctx(ctx_)); }

Sha256 &Sha256::update(std::span<const std::uint8_t> data) {
    check(EVP_DigestUpdate(as_ctx(ctx_), data.data(), data.size()), "DigestUpdate");
    return *this;
}

Sha256 &Sha256::update(std::string_view text) {
    check(EVP_DigestUpdate(as_ctx(ctx_), text.data(), text.size()), "DigestUpdate");
    return *this;
}

Digest Sha256::finish() {
    Digest d{};
    unsigned int len = 0;
    check(EVP_DigestFinal_ex(as_ctx(ctx_), d.data(), &len), "DigestFinal");
    check(EVP_DigestInit_ex(as_ctx(ctx_), EVP_sha256(), nullptr), "DigestInit");
    return d;
}

Digest hmac_sha256(std::span<const std::uint8_t> key,
                   std::span<const std::uint8_t> data) {
    Digest d{};
    unsigned int len = 0;
    static const std::uint8_t empty = 0;
    const auto *k = key.empty() ? &empty : key.data();
    if (!HMAC(EVP_sha256(), k, static_cast<int>(key.size()), data.data(), data.size(),
              d.data(), &len))
        throw Error("openssl: HMAC failed");
    return d;
}

bool constant_time_equal(std::span<const std::uint8_t> a,
                         std::span<const std::uint8_t> b) {
    if (a.size() != b.size())
        return false;
    return CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

void secure_zero(void *ptr, std::size_t len) { OPENSSL_cleanse(ptr, len); }

Digest kdf(std::string_view tag,
           std::initializer_list<std::span<const std::uint8_t>> parts) {
    Bytes frame;
    put_be32(frame, static_cast<std::uint32_t>(tag.size()));
    Sha256 h;
    h.update(frame).update(tag);
    for (auto p : parts) {
        frame.clear();
        put_be32(frame, static_cast<std::uint32_t>(p.size()));
        h.update(frame).update(p);
    }
    return h.finish();
}

Expander::Expander(std::string_view domain, std::span<const std::uint8_t> seed) {
    static constexpr std::string_view label = "puflab/xof/v1";
    prefix_.assign(label.begin(), label.end());
    put_be32(prefix_, static_cast<std::uint32_t>(domain.size()));
    prefix_.insert(prefix_.end(), domain.begin(), domain.end());
    put_be32(prefix_, static_cast<std::uint32_t>(seed.size()));
    append(prefix_, seed);
}

void Expander::refill() {
    Bytes input = prefix_;
    put_be64(input, counter_++);
    block_ = sha256(input);
    used_ = 0;
}

void Expander::fill(std::span<std::uint8_t> out) {
    for (auto &b : out) {
        if (used_ == block_.size())
            refill();
        b = block_[used_++];
    }
}

Bytes Expander::bytes(std::size_t n) {
    Bytes out(n);
    fill(out);
    return out;
}

Bits Expander::bits(std::size_t n) { return unpack_bits(bytes((n + 7) / 8), n); }

std::uint64_t Expander::next_u64() {
    std::array<std::uint8_t, 8> b{};
    fill(b);
    return get_be64(b);
}

double Expander::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Expander::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

std::uint64_t Expander::uniform_below(std::uint64_t bound) {
    if (bound == 0)
        throw ValidationError("uniform_below: bound must be positive");
    // Largest multiple of bound that fits; values above it are rejected.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % bound;
}

} // namespace puflab::crypto
