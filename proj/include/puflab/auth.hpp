// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "puflab/bits.hpp"
#include "puflab/crypto.hpp"
#include "puflab/keys.hpp"
#include "puflab/puf.hpp"
#include "puflab/random.hpp"

namespace puflab::auth {

enum class Role { Device, Verifier };
enum class CommitStatus {
    Stable,
    /// Device: msg1 sent, waiting for the verifier to prove knowledge of the
    /// new secret.
    PendingVerifier,
    /// Verifier: rolled over, but still holding the previous secret until the
    /// device shows it has rolled over as well.
    PendingDevice,
};

std::string_view to_string(Role role);
std::string_view to_string(CommitStatus status);

inline constexpr std::uint8_t kMessage1Type = 0x01;
inline constexpr std::uint8_t kMessage2Type = 0x02;
inline constexpr std::size_t kMacSize = 32;
inline constexpr std::size_t kNonceSize = 16;

/// Device -> Verifier.
///
/// Wire: type || be32 counter || lp(masked) || lp(memory_hash) ||
/// lp(be64 cycle_count) || lp(nonce) || mac, where lp() is a be32 length
/// prefix and mac = HMAC-SHA256(r_i, every preceding byte).
struct AuthMessage1 {
    std::uint32_t counter = 0;
    Bytes masked;                 // r_{i+1} XOR r_i
    crypto::Digest memory_hash{}; // SHA-256 of the device memory image
    std::uint64_t cycle_count = 0;
    std::array<std::uint8_t, kNonceSize> nonce{};
    crypto::Digest mac{};

    /// Bytes covered by the MAC.
    Bytes signed_part() const;
    Bytes serialize() const;
    /// Throws ValidationError on malformed framing.
    static AuthMessage1 parse(std::span<const std::uint8_t> wire);
    bool operator==(const AuthMessage1 &) const = default;
};

/// Verifier -> Device.
///
/// Wire: type || be32 counter || mac, with
/// mac = HMAC-SHA256(r_{i+1}, type || be32 counter || packed c_{i+1}).
struct AuthMessage2 {
    std::uint32_t counter = 0;
    crypto::Digest mac{};

    Bytes serialize() const;
    static AuthMessage2 parse(std::span<const std::uint8_t> wire);
    bool operator==(const AuthMessage2 &) const = default;
};

/// Next challenge from the current secret: SHA-256 counter-mode expansion of
/// r_i, truncated to \p challenge_bits.
Challenge next_challenge(const SecretKey &current, std::size_t challenge_bits);

/// Sub-challenges whose responses are concatenated into the raw key material
/// for the next secret. The first one is \p challenge itself.
std::vector<Challenge> sub_challenges(const Challenge &challenge, std::size_t count);

/// Shared secret established at enrollment in a trusted setting.
SecretKey enroll_initial_secret(const PufInstance &puf, const FuzzyExtractor &fe,
                                RandomStream &noise, RandomStream &randomness);

/// Read-only view of one party's state.
struct SessionState {
    Role role = Role::Device;
    CommitStatus status = CommitStatus::Stable;
    std::uint32_t counter = 0;
    crypto::Digest current_fingerprint{};
    std::optional<crypto::Digest> pending_fingerprint;  // device only
    std::optional<crypto::Digest> previous_fingerprint; // verifier only
};

enum class DeviceVerdict { Committed, MacMismatch, CounterMismatch };
std::string_view to_string(DeviceVerdict verdict);

/// The device side. Not thread-safe; one session at a time.
class DeviceEndpoint {
  public:
    DeviceEndpoint(PufInstance puf, SecretKey initial, RandomStream noise,
                   RandomStream randomness, FuzzyExtractor fe = FuzzyExtractor());

    /// Derives c_{i+1}, reads and stabilizes r_{i+1} and returns msg1.
    /// Throws ProtocolStateError unless Stable.
    AuthMessage1 respond();
    /// Checks msg2; commits r_{i+1} on success, otherwise drops the pending
    /// secret and keeps r_i. Throws ProtocolStateError unless
    /// PendingVerifier.
    DeviceVerdict check_verifier(const AuthMessage2 &msg2);
    /// Drops a pending session (e.g. msg2 never arrived). No-op when Stable.
    void abort_session();

    void set_memory_image(Bytes image) { memory_image_ = std::move(image); }
    const Bytes &memory_image() const { return memory_image_; }
    std::uint64_t cycle_count() const { return cycle_count_; }
    void set_cycle_count(std::uint64_t cycles) { cycle_count_ = cycles; }

    SessionState state() const;
    const PufInstance &puf() const { return puf_; }
    /// The fresh challenge of the pending session.
    const std::optional<Challenge> &pending_challenge() const { return pending_challenge_; }

  private:
    PufInstance puf_;
    FuzzyExtractor fe_;
    RandomStream noise_, randomness_;
    SecretKey current_;
    std::optional<SecretKey> pending_;
    std::optional<Challenge> pending_challenge_;
    std::uint32_t counter_ = 0;
    std::uint64_t cycle_count_ = 0;
    Bytes memory_image_;
    CommitStatus status_ = CommitStatus::Stable;
};

enum class VerifierVerdict {
    Accepted,
    Malformed,
    UnknownEpoch,
    MacMismatch,
    Replay,
    MemoryMismatch,
    WindowExhausted,
};
std::string_view to_string(VerifierVerdict verdict);

struct VerifierOutcome {
    VerifierVerdict verdict = VerifierVerdict::Malformed;
    std::optional<AuthMessage2> reply;
    bool accepted() const { return verdict == VerifierVerdict::Accepted; }
};

/// The verifier side. Holds the committed secret and, for one epoch after a
/// rollover, the previous secret so that a lost msg2 does not strand the
/// device. Each epoch keeps a bounded window of accepted nonces.
class VerifierEndpoint {
  public:
    static constexpr std::size_t kNonceWindow = 64;

    VerifierEndpoint(SecretKey initial, std::size_t challenge_bits);

    /// Reject on any violation leaves the state untouched.
    VerifierOutcome check_device(const AuthMessage1 &msg1);
    /// Parses first; framing errors yield Malformed.
    VerifierOutcome check_device(std::span<const std::uint8_t> wire);

    /// When set, msg1.memory_hash must equal SHA-256 of this image.
    void set_golden_image(std::span<const std::uint8_t> image);
    void clear_golden_image() { golden_hash_.reset(); }

    SessionState state() const;
    /// Last accepted device metadata.
    std::optional<std::uint64_t> last_cycle_count() const { return last_cycle_count_; }

  private:
    struct Epoch {
        SecretKey secret;
        std::uint32_t counter;
        std::vector<std::array<std::uint8_t, kNonceSize>> nonces;
    };

    std::size_t challenge_bits_;
    Epoch current_;
    std::optional<Epoch> previous_;
    std::optional<crypto::Digest> golden_hash_;
    std::optional<std::uint64_t> last_cycle_count_;
};

} // namespace puflab::auth
