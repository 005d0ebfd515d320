// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace puflab {

/// One element per bit, each 0 or 1.
using Bits = std::vector<std::uint8_t>;
using Bytes = std::vector<std::uint8_t>;

/// Packs bits most-significant-first; the final byte is zero padded.
Bytes pack_bits(std::span<const std::uint8_t> bits);
/// Inverse of pack_bits. Throws ValidationError if \p bytes is too short.
Bits unpack_bits(std::span<const std::uint8_t> bytes, std::size_t count);

Bits xor_bits(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);
std::size_t hamming_distance(std::span<const std::uint8_t> a,
                             std::span<const std::uint8_t> b);
double fractional_hamming_distance(std::span<const std::uint8_t> a,
                                   std::span<const std::uint8_t> b);

std::string to_hex(std::span<const std::uint8_t> bytes);
Bytes from_hex(std::string_view hex);

// Big-endian integer framing used by every wire format in the project.
void put_be32(Bytes &out, std::uint32_t v);
void put_be64(Bytes &out, std::uint64_t v);
std::uint32_t get_be32(std::span<const std::uint8_t> in);
std::uint64_t get_be64(std::span<const std::uint8_t> in);
void append(Bytes &out, std::span<const std::uint8_t> data);

/// Sequential reader over a byte buffer; throws ValidationError on underrun.
class ByteReader {
  public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t u8();
    std::uint32_t be32();
    std::uint64_t be64();
    std::span<const std::uint8_t> take(std::size_t n);
    /// 4-byte big-endian length followed by that many bytes.
    std::span<const std::uint8_t> length_prefixed();
    std::size_t remaining() const { return data_.size() - pos_; }
    bool done() const { return pos_ == data_.size(); }

  private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

void put_length_prefixed(Bytes &out, std::span<const std::uint8_t> field);

} // namespace puflab
