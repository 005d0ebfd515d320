// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>

#include "puflab/bits.hpp"

namespace puflab::crypto {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::span<const std::uint8_t> data);

/// Incremental SHA-256.
class Sha256 {
  public:
    Sha256();
    ~Sha256();
    Sha256(const Sha256 &) = delete;
    Sha256 &operator=(const Sha256 &) = delete;

    Sha256 &update(std::span<const std::uint8_t> data);
    Sha256 &update(std::string_view text);
    Digest finish();

  private:
    void *ctx_;
};

Digest hmac_sha256(std::span<const std::uint8_t> key,
                   std::span<const std::uint8_t> data);

bool constant_time_equal(std::span<const std::uint8_t> a,
                         std::span<const std::uint8_t> b);

/// Overwrites memory in a way the optimizer cannot elide.
void secure_zero(void *ptr, std::size_t len);

/// SHA-256 over tagged input: H(be32(|tag|) || tag || be32(|p0|) || p0 || ...).
/// Length framing makes distinct part lists collision-free as inputs.
Digest kdf(std::string_view tag,
           std::initializer_list<std::span<const std::uint8_t>> parts);

/// Counter-mode extendable output over SHA-256.
///
/// Block k of the stream is
///   SHA-256("puflab/xof/v1" || be32(|domain|) || domain || be32(|seed|) ||
///           seed || be64(k))
/// and the output is the concatenation of blocks k = 0, 1, 2, ... Every
/// seed-derived quantity in the project (device parameters, protocol
/// challenges, memory walks) is drawn from one of these streams, so results
/// depend only on the seed bytes and never on platform RNGs.
class Expander {
  public:
    Expander(std::string_view domain, std::span<const std::uint8_t> seed);

    void fill(std::span<std::uint8_t> out);
    Bytes bytes(std::size_t n);
    Bits bits(std::size_t n);
    /// Next 8 stream bytes as a big-endian integer.
    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform();
    /// Standard normal via the Marsaglia polar method.
    double gaussian();
    /// Uniform in [0, bound) by rejection sampling; bound > 0.
    std::uint64_t uniform_below(std::uint64_t bound);

  private:
    void refill();

    Bytes prefix_;
    std::uint64_t counter_ = 0;
    Digest block_{};
    std::size_t used_ = block_.size();
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace puflab::crypto
