// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include "puflab/keys.hpp"

#include <algorithm>

#include "puflab/errors.hpp"

namespace puflab {

std::span<const std::uint8_t> detail::KeyAccess::bytes(const SecretKey &key) {
    return key.bytes_;
}

SecretKey detail::KeyAccess::make(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < SecretKey::size)
        throw ValidationError("key material shorter than 128 bits");
    SecretKey k;
    std::copy_n(bytes.begin(), SecretKey::size, k.bytes_.begin());
    return k;
}

SecretKey::SecretKey(SecretKey &&other) noexcept : bytes_(other.bytes_) {
    crypto::secure_zero(other.bytes_.data(), other.bytes_.size());
}

SecretKey &SecretKey::operator=(SecretKey &&other) noexcept {
    if (this != &other) {
        bytes_ = other.bytes_;
        crypto::secure_zero(other.bytes_.data(), other.bytes_.size());
    }
    return *this;
}

SecretKey::~SecretKey() { crypto::secure_zero(bytes_.data(), bytes_.size()); }

SecretKey SecretKey::clone() const {
    SecretKey k;
    k.bytes_ = bytes_;
    return k;
}

bool SecretKey::operator==(const SecretKey &other) const {
    return crypto::constant_time_equal(bytes_, other.bytes_);
}

crypto::Digest SecretKey::fingerprint() const {
    return crypto::kdf("puflab/key/fingerprint", {bytes_});
}

// ---------------------------------------------------------------------------

RepetitionCode::RepetitionCode(std::size_t repeat, std::size_t blocks)
    : repeat_(repeat), blocks_(blocks) {
    if (repeat < 1 || repeat % 2 == 0)
        throw ValidationError("repetition code: repeat must be odd and >= 1");
    if (blocks < 1)
        throw ValidationError("repetition code: need at least one block");
}

Bits RepetitionCode::encode(std::span<const std::uint8_t> message) const {
    if (message.size() != blocks_)
        throw ShapeError("repetition encode: message length mismatch");
    Bits out(n());
    for (std::size_t b = 0; b < blocks_; ++b)
        std::fill_n(out.begin() + static_cast<long>(b * repeat_), repeat_, message[b] & 1u);
    return out;
}

Bits RepetitionCode::decode(std::span<const std::uint8_t> word) const {
    if (word.size() != n())
        throw ShapeError("repetition decode: word length mismatch");
    Bits out(blocks_);
    for (std::size_t b = 0; b < blocks_; ++b) {
        std::size_t ones = 0;
        for (std::size_t i = 0; i < repeat_; ++i)
            ones += word[b * repeat_ + i] & 1u;
        out[b] = 2 * ones > repeat_ ? 1 : 0;
    }
    return out;
}

std::string RepetitionCode::name() const {
    return "repetition(" + std::to_string(repeat_) + ")x" + std::to_string(blocks_);
}

// ---------------------------------------------------------------------------

Bytes HelperData::serialize() const {
    Bytes out;
    put_be32(out, static_cast<std::uint32_t>(code_offset.size()));
    append(out, pack_bits(code_offset));
    append(out, key_check);
    return out;
}

HelperData HelperData::parse(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    HelperData h;
    const auto n = r.be32();
    h.code_offset = unpack_bits(r.take((n + 7) / 8), n);
    auto check = r.take(h.key_check.size());
    std::copy(check.begin(), check.end(), h.key_check.begin());
    if (!r.done())
        throw ValidationError("helper data: trailing bytes");
    return h;
}

namespace {

SecretKey key_from_message(std::span<const std::uint8_t> message) {
    auto packed = pack_bits(message);
    auto d = crypto::kdf("puflab/fe/key", {packed});
    auto key = detail::KeyAccess::make(d);
    crypto::secure_zero(d.data(), d.size());
    crypto::secure_zero(packed.data(), packed.size());
    return key;
}

std::array<std::uint8_t, 8> key_check_of(const SecretKey &key) {
    auto d = crypto::kdf("puflab/fe/check", {detail::KeyAccess::bytes(key)});
    std::array<std::uint8_t, 8> out{};
    std::copy_n(d.begin(), out.size(), out.begin());
    return out;
}

} // namespace

FuzzyExtractor::FuzzyExtractor() : code_(std::make_shared<RepetitionCode>(5, 128)) {}

FuzzyExtractor::FuzzyExtractor(std::shared_ptr<const BlockCode> code) : code_(std::move(code)) {
    if (!code_)
        throw ValidationError("fuzzy extractor: null code");
}

Enrollment FuzzyExtractor::generate(std::span<const std::uint8_t> response,
                                    RandomStream &randomness) const {
    if (response.size() != code_->n())
        throw ValidationError("fe_generate: response has " + std::to_string(response.size()) +
                              " bits, code length is " + std::to_string(code_->n()));
    Bits message = randomness.bits(code_->k());
    Bits codeword = code_->encode(message);
    HelperData helper;
    helper.code_offset = xor_bits(response, codeword);
    SecretKey key = key_from_message(message);
    helper.key_check = key_check_of(key);
    crypto::secure_zero(message.data(), message.size());
    crypto::secure_zero(codeword.data(), codeword.size());
    return {std::move(key), std::move(helper)};
}

ReproduceResult FuzzyExtractor::reproduce(std::span<const std::uint8_t> noisy,
                                          const HelperData &helper) const {
    if (noisy.size() != code_->n() || helper.code_offset.size() != code_->n())
        throw ValidationError("fe_reproduce: length mismatch with code length " +
                              std::to_string(code_->n()));
    Bits word = xor_bits(noisy, helper.code_offset);
    Bits message = code_->decode(word);
    SecretKey key = key_from_message(message);
    crypto::secure_zero(word.data(), word.size());
    crypto::secure_zero(message.data(), message.size());
    ReproduceResult result;
    if (crypto::constant_time_equal(key_check_of(key), helper.key_check)) {
        result.status = ReproduceStatus::Ok;
        result.key.emplace(std::move(key));
    }
    return result;
}

Enrollment fe_generate(std::span<const std::uint8_t> response, RandomStream &randomness) {
    return FuzzyExtractor().generate(response, randomness);
}

ReproduceResult fe_reproduce(std::span<const std::uint8_t> noisy, const HelperData &helper) {
    return FuzzyExtractor().reproduce(noisy, helper);
}

// ---------------------------------------------------------------------------

Bits read_key_material(const PufInstance &puf, std::size_t n_bits, RandomStream *noise) {
    auto read = [&](const Challenge &c) {
        return noise ? puf.evaluate(c, *noise).bits : puf.evaluate_noiseless(c).bits;
    };
    Bits out;
    if (puf.kind() == PufKind::SramWeak) {
        if (puf.response_bits() < n_bits)
            throw ConfigError("SRAM device has " + std::to_string(puf.response_bits()) +
                              " cells, key material needs " + std::to_string(n_bits));
        out = read(Challenge{});
        out.resize(n_bits);
        return out;
    }
    crypto::Expander challenges("key/challenge", puf.config().seed);
    while (out.size() < n_bits) {
        auto bits = read(Challenge(challenges.bits(puf.challenge_bits())));
        out.insert(out.end(), bits.begin(), bits.end());
    }
    out.resize(n_bits);
    return out;
}

Enrollment enroll_device_key(const PufInstance &puf, const FuzzyExtractor &fe,
                             RandomStream &noise, RandomStream &randomness) {
    auto raw = read_key_material(puf, fe.response_bits(), &noise);
    auto e = fe.generate(raw, randomness);
    crypto::secure_zero(raw.data(), raw.size());
    return e;
}

ReproduceResult recover_device_key(const PufInstance &puf, const FuzzyExtractor &fe,
                                   const HelperData &helper, RandomStream &noise) {
    auto raw = read_key_material(puf, fe.response_bits(), &noise);
    auto r = fe.reproduce(raw, helper);
    crypto::secure_zero(raw.data(), raw.size());
    return r;
}

} // namespace puflab
