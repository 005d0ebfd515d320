// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include "puflab/random.hpp"

#include <cmath>

#include "puflab/crypto.hpp"
#include "puflab/errors.hpp"

namespace puflab {

RandomStream RandomStream::fork(std::uint64_t index) const {
    Bytes in;
    put_be64(in, seed_);
    put_be64(in, index);
    auto d = crypto::kdf("puflab/stream-fork", {in});
    return RandomStream(get_be64(d));
}

double RandomStream::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomStream::gaussian() {
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

std::uint64_t RandomStream::uniform_below(std::uint64_t bound) {
    if (bound == 0)
        throw ValidationError("uniform_below: bound must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % bound;
}

Bits RandomStream::bits(std::size_t n) {
    Bits out(n);
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i % 64 == 0)
            word = engine_();
        out[i] = static_cast<std::uint8_t>(word >> 63);
        word <<= 1;
    }
    return out;
}

Bytes RandomStream::bytes(std::size_t n) {
    Bytes out(n);
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i % 8 == 0)
            word = engine_();
        out[i] = static_cast<std::uint8_t>(word >> 56);
        word <<= 8;
    }
    return out;
}

} // namespace puflab
