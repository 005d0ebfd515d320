// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include "puflab/bits.hpp"

#include <algorithm>

#include "puflab/errors.hpp"

namespace puflab {

Bytes pack_bits(std::span<const std::uint8_t> bits) {
    Bytes out((bits.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] & 1u)
            out[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
    }
    return out;
}

Bits unpack_bits(std::span<const std::uint8_t> bytes, std::size_t count) {
    if (bytes.size() * 8 < count)
        throw ValidationError("unpack_bits: need " + std::to_string(count) +
                              " bits, have " + std::to_string(bytes.size() * 8));
    Bits out(count);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = (bytes[i / 8] >> (7 - i % 8)) & 1u;
    return out;
}

Bits xor_bits(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
    if (a.size() != b.size())
        throw ShapeError("xor_bits: length mismatch");
    Bits out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = (a[i] ^ b[i]) & 1u;
    return out;
}

std::size_t hamming_distance(std::span<const std::uint8_t> a,
                             std::span<const std::uint8_t> b) {
    if (a.size() != b.size())
        throw ShapeError("hamming_distance: length mismatch");
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        d += (a[i] ^ b[i]) & 1u;
    return d;
}

double fractional_hamming_distance(std::span<const std::uint8_t> a,
                                   std::span<const std::uint8_t> b) {
    if (a.empty())
        throw ValidationError("fractional_hamming_distance: empty input");
    return static_cast<double>(hamming_distance(a, b)) /
           static_cast<double>(a.size());
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s;
    s.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 15]);
    }
    return s;
}

namespace {
int hex_value(char c) {
    if (c >= '0' && c <= '9')
        return c - '0';
    if (c >= 'a' && c <= 'f')
        return c - 'a' + 10;
    if (c >= 'A' && c <= 'F')
        return c - 'A' + 10;
    return -1;
}
} // namespace

Bytes from_hex(std::string_view hex) {
    if (hex.starts_with("0x") || hex.starts_with("0X"))
        hex.remove_prefix(2);
    if (hex.size() % 2 != 0)
        throw ValidationError("hex string has odd length");
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        int hi = hex_value(hex[2 * i]);
        int lo = hex_value(hex[2 * i + 1]);
        if (hi < 0 || lo < 0)
            throw ValidationError("invalid hex digit in '" + std::string(hex) + "'");
        out[i] = static_cast<std::uint8_t>(hi << 4 | lo);
    }
    return out;
}

void put_be32(Bytes &out, std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8)
        out.push_back(static_cast<std::uint8_t>(v >> s));
}

void put_be64(Bytes &out, std::uint64_t v) {
    for (int s = 56; s >= 0; s -= 8)
        out.push_back(static_cast<std::uint8_t>(v >> s));
}

std::uint32_t get_be32(std::span<const std::uint8_t> in) {
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < 4; ++i)
        v = v << 8 | in[i];
    return v;
}

std::uint64_t get_be64(std::span<const std::uint8_t> in) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < 8; ++i)
        v = v << 8 | in[i];
    return v;
}

void append(Bytes &out, std::span<const std::uint8_t> data) {
    out.insert(out.end(), data.begin(), data.end());
}

void put_length_prefixed(Bytes &out, std::span<const std::uint8_t> field) {
    put_be32(out, static_cast<std::uint32_t>(field.size()));
    append(out, field);
}

std::span<const std::uint8_t> ByteReader::take(std::size_t n) {
    if (remaining() < n)
        throw ValidationError("truncated message: wanted " + std::to_string(n) +
                              " bytes, " + std::to_string(remaining()) + " left");
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
}

std::uint8_t ByteReader::u8() { return take(1)[0]; }
std::uint32_t ByteReader::be32() { return get_be32(take(4)); }
std::uint64_t ByteReader::be64() { return get_be64(take(8)); }

std::span<const std::uint8_t> ByteReader::length_prefixed() {
    auto n = be32();
    return take(n);
}

} // namespace puflab
