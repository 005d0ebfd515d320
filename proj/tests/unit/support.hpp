// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/sha.h>

#include "puflab/puf.hpp"

namespace puflab::fixtures {

inline PufInstance make_device(PufKind kind, std::uint64_t seed, std::size_t calibration = 300) {
    PufConfig c;
    c.kind = kind;
    c.seed = make_seed(seed);
    c.photonic.calibration_samples = calibration;
    return PufInstance::create(c);
}

inline PufInstance photonic(std::uint64_t seed, std::size_t calibration = 300) {
    return make_device(PufKind::Photonic, seed, calibration);
}
inline PufInstance arbiter(std::uint64_t seed) { return make_device(PufKind::ArbiterLinear, seed); }
inline PufInstance sram(std::uint64_t seed) { return make_device(PufKind::SramWeak, seed); }

/// Straight-line reimplementation of the seed expander on top of the
/// one-shot OpenSSL digest, used as an oracle for derived parameters.
class OracleExpander {
  public:
    OracleExpander(std::string_view domain, const std::vector<std::uint8_t> &seed) {
        for (char ch : std::string_view("puflab/xof/v1"))
            prefix_.push_back(static_cast<std::uint8_t>(ch));
        be(prefix_, domain.size(), 4);
        for (char ch : domain)
            prefix_.push_back(static_cast<std::uint8_t>(ch));
        be(prefix_, seed.size(), 4);
        prefix_.insert(prefix_.end(), seed.begin(), seed.end());
    }

    std::uint8_t byte() {
        if (used_ == 32) {
            auto in = prefix_;
            be(in, counter_++, 8);
            SHA256(in.data(), in.size(), block_.data());
            used_ = 0;
        }
        return block_[used_++];
    }

    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v = (v << 8) | byte();
        return v;
    }

    double uniform() { return static_cast<double>(u64() >> 11) / 9007199254740992.0; }

    double gaussian() {
        if (spare_) {
            spare_ = false;
            return spare_value_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_value_ = v * f;
        spare_ = true;
        return u * f;
    }

    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = u64();
        } while (x >= limit);
        return x % bound;
    }

  private:
    static void be(std::vector<std::uint8_t> &out, std::uint64_t v, int width) {
        for (int i = width - 1; i >= 0; --i)
            out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    std::vector<std::uint8_t> prefix_;
    std::uint64_t counter_ = 0;
    std::array<std::uint8_t, 32> block_{};
    std::size_t used_ = 32;
    bool spare_ = false;
    double spare_value_ = 0;
};

inline std::string oracle_sha256_hex(const std::vector<std::uint8_t> &data) {
    std::array<std::uint8_t, 32> d{};
    SHA256(data.data(), data.size(), d.data());
    static const char *digits = "0123456789abcdef";
    std::string out;
    for (auto b : d) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 15]);
    }
    return out;
}

inline std::vector<std::uint8_t> ascii(std::string_view s) { return {s.begin(), s.end()}; }

} // namespace puflab::fixtures
