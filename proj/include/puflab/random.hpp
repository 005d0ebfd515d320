// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

#include "puflab/bits.hpp"

namespace puflab {

/// Explicit, injectable randomness: noise draws, nonces, fuzzy-extractor
/// codewords. Nothing in the library reads ambient entropy.
///
/// Built on std::mt19937_64, whose output sequence is fixed by the standard;
/// the real-valued conversions are done here rather than through the
/// implementation-defined <random> distributions.
class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    /// Independent child stream; does not advance this stream.
    RandomStream fork(std::uint64_t index) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t next_u64() { return engine_(); }
    double uniform();
    double gaussian();
    std::uint64_t uniform_below(std::uint64_t bound);
    bool bernoulli(double p) { return uniform() < p; }
    Bits bits(std::size_t n);
    Bytes bytes(std::size_t n);

  private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace puflab
