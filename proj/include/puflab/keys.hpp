// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "puflab/bits.hpp"
#include "puflab/crypto.hpp"
#include "puflab/puf.hpp"
#include "puflab/random.hpp"

namespace puflab {

class SecretKey;

namespace detail {
/// Library-internal access to key bytes (AEAD, protocol MAC keys). Not part
/// of the public surface.
struct KeyAccess {
    static std::span<const std::uint8_t> bytes(const SecretKey &key);
    static SecretKey make(std::span<const std::uint8_t> bytes);
};
} // namespace detail

/// 128-bit symmetric key. There is no accessor for the raw bytes and no
/// serializer; the storage is wiped on destruction.
class SecretKey {
  public:
    static constexpr std::size_t size = 16;

    SecretKey(SecretKey &&other) noexcept;
    SecretKey &operator=(SecretKey &&other) noexcept;
    SecretKey(const SecretKey &) = delete;
    SecretKey &operator=(const SecretKey &) = delete;
    ~SecretKey();

    /// Explicit copy, for handing the same key to a second owner.
    SecretKey clone() const;
    /// Constant-time comparison.
    bool operator==(const SecretKey &other) const;
    /// One-way identifier, safe to log.
    crypto::Digest fingerprint() const;

  private:
    SecretKey() = default;
    friend struct detail::KeyAccess;
    std::array<std::uint8_t, size> bytes_{};
};

/// Error-correcting code used by the code-offset construction.
class BlockCode {
  public:
    virtual ~BlockCode() = default;
    /// Codeword length.
    virtual std::size_t n() const = 0;
    /// Message length.
    virtual std::size_t k() const = 0;
    virtual Bits encode(std::span<const std::uint8_t> message) const = 0;
    /// Maximum-likelihood decoding to a message. Never fails; words beyond
    /// the correction radius decode to a wrong message.
    virtual Bits decode(std::span<const std::uint8_t> word) const = 0;
    virtual std::string name() const = 0;
};

/// Each message bit repeated \p repeat times; majority decoding corrects up
/// to (repeat - 1) / 2 errors per block.
class RepetitionCode final : public BlockCode {
  public:
    RepetitionCode(std::size_t repeat, std::size_t blocks);

    std::size_t n() const override { return repeat_ * blocks_; }
    std::size_t k() const override { return blocks_; }
    std::size_t repeat() const { return repeat_; }
    std::size_t correctable() const { return (repeat_ - 1) / 2; }
    Bits encode(std::span<const std::uint8_t> message) const override;
    Bits decode(std::span<const std::uint8_t> word) const override;
    std::string name() const override;

  private:
    std::size_t repeat_, blocks_;
};

struct HelperData {
    Bits code_offset;                         // response XOR codeword
    std::array<std::uint8_t, 8> key_check{};  // truncated digest of the key

    /// be32 bit count || packed offset || key_check
    Bytes serialize() const;
    static HelperData parse(std::span<const std::uint8_t> bytes);
    bool operator==(const HelperData &) const = default;
};

struct Enrollment {
    SecretKey key;
    HelperData helper;
};

enum class ReproduceStatus { Ok, Failure };

struct ReproduceResult {
    ReproduceStatus status = ReproduceStatus::Failure;
    std::optional<SecretKey> key;
    bool ok() const { return status == ReproduceStatus::Ok; }
};

/// Code-offset fuzzy extractor. Defaults to repetition(5) over 128 blocks,
/// i.e. 640 response bits for a 128-bit key.
class FuzzyExtractor {
  public:
    FuzzyExtractor();
    explicit FuzzyExtractor(std::shared_ptr<const BlockCode> code);

    std::size_t response_bits() const { return code_->n(); }
    const BlockCode &code() const { return *code_; }

    /// helper = response XOR encode(m) for a uniformly drawn message m;
    /// key = KDF(m). Deterministic given \p randomness.
    Enrollment generate(std::span<const std::uint8_t> response, RandomStream &randomness) const;
    /// Decodes noisy XOR helper; returns Failure when the recomputed key does
    /// not match helper.key_check.
    ReproduceResult reproduce(std::span<const std::uint8_t> noisy,
                              const HelperData &helper) const;

  private:
    std::shared_ptr<const BlockCode> code_;
};

Enrollment fe_generate(std::span<const std::uint8_t> response, RandomStream &randomness);
ReproduceResult fe_reproduce(std::span<const std::uint8_t> noisy, const HelperData &helper);

/// Raw key-material bits read from a device: SRAM devices return their
/// power-up pattern (truncated to n_bits); photonic and arbiter devices return
/// concatenated responses to a fixed public challenge sequence derived from
/// the device seed. Noiseless when \p noise is null.
Bits read_key_material(const PufInstance &puf, std::size_t n_bits, RandomStream *noise);

/// Enrollment of a device-bound key through the fuzzy extractor.
Enrollment enroll_device_key(const PufInstance &puf, const FuzzyExtractor &fe,
                             RandomStream &noise, RandomStream &randomness);
ReproduceResult recover_device_key(const PufInstance &puf, const FuzzyExtractor &fe,
                                   const HelperData &helper, RandomStream &noise);

} // namespace puflab
