// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "puflab/bits.hpp"
#include "puflab/crypto.hpp"
#include "puflab/kv.hpp"
#include "puflab/puf.hpp"
#include "puflab/random.hpp"

namespace puflab::sim {

enum class AdversaryMode {
    None,    // no adversary on the wire at all
    Passive, // observes only
    Replay,  // re-sends every earlier message of the same kind after each one
    BitFlip, // flips one bit of a message with probability p
    Drop,    // drops a message with probability p
    Modify,  // applies a protocol-aware rule
    Inject,  // injects k forgeries (replay / splice / flip) ahead of each message
};

enum class ModifyRule {
    FlipMac,        // auth: flip one MAC bit of msg1
    SpliceMasked,   // auth: graft an earlier masked secret into msg1
    BumpCounter,    // auth: increment the msg1 counter
    ForgeReply,     // auth: replace the msg2 MAC with random bytes
    FlipMemoryByte, // attest: flip one byte of device memory before hashing
    Relocate,       // attest: serve memory from elsewhere at extra hash cost
    FlipReportBit,  // attest: flip one bit of the report hash
};

std::string_view to_string(AdversaryMode mode);
AdversaryMode parse_adversary_mode(std::string_view name);
std::string_view to_string(ModifyRule rule);
ModifyRule parse_modify_rule(std::string_view name);

struct AdversaryPolicy {
    AdversaryMode mode = AdversaryMode::Passive;
    double probability = 0.0; // BitFlip and Drop
    ModifyRule rule = ModifyRule::FlipMac;
    std::size_t injections = 0; // Inject
    double relocation_overhead = 1.5;
    /// Keep a copy of every observed message.
    bool harvest = false;

    /// Throws ValidationError for probabilities outside [0, 1], a zero
    /// injection count with Inject, or a relocation overhead below 1.
    void validate() const;
};

enum class Direction { ToVerifier, ToDevice };
std::string_view to_string(Direction direction);

struct AdversaryAction {
    std::size_t id = 0;
    std::size_t trial = 0;
    std::uint64_t time = 0;
    Direction direction = Direction::ToVerifier;
    std::string kind;
    std::string detail;
};

struct Envelope {
    Direction direction = Direction::ToVerifier;
    Bytes payload;
    std::uint64_t time = 0;
    /// Set when the adversary altered or originated this message; names the
    /// logged action responsible.
    std::optional<std::size_t> action;
    bool tainted() const { return action.has_value(); }
};

/// In-order channel between a device and a verifier with an adversary on the
/// wire. Time is an integer tick count advanced by a fixed latency per
/// delivered message.
class Channel {
  public:
    /// Rewrites a message under the Modify policy; returns nullopt to leave
    /// it unchanged. Receives the message and the earlier messages observed
    /// in the same direction.
    using Rewriter = std::function<std::optional<Bytes>(Direction, const Bytes &,
                                                        const std::vector<Bytes> &, RandomStream &)>;

    Channel(AdversaryPolicy policy, RandomStream rng, std::uint64_t latency = 1);

    void set_rewriter(Rewriter rewriter) { rewriter_ = std::move(rewriter); }
    /// Messages delivered to the receiver, in order.
    std::vector<Envelope> transmit(std::size_t trial, Direction direction, const Bytes &payload);
    /// Records an adversarial action taken off the wire (e.g. against device
    /// memory) and returns its id.
    std::size_t record_action(std::size_t trial, Direction direction, std::string kind,
                              std::string detail);

    const AdversaryPolicy &policy() const { return policy_; }
    const std::vector<AdversaryAction> &log() const { return log_; }
    const std::vector<Bytes> &harvested() const { return harvested_; }
    std::uint64_t now() const { return now_; }
    /// SHA-256 over every delivered message (direction byte, length, payload).
    crypto::Digest transcript_digest();

  private:
    std::vector<Bytes> &history(Direction d) { return d == Direction::ToVerifier ? to_verifier_ : to_device_; }
    Envelope deliver(Direction direction, Bytes payload, std::optional<std::size_t> action);
    Bytes forge(std::size_t trial, Direction direction, const Bytes &payload, std::size_t index,
                std::size_t &action);

    AdversaryPolicy policy_;
    RandomStream rng_;
    std::uint64_t latency_;
    std::uint64_t now_ = 0;
    Rewriter rewriter_;
    std::vector<AdversaryAction> log_;
    std::vector<Bytes> to_verifier_, to_device_, harvested_;
    crypto::Sha256 transcript_;
};

enum class Protocol { Auth, Attest };
std::string_view to_string(Protocol protocol);

struct ScenarioConfig {
    Protocol protocol = Protocol::Auth;
    AdversaryPolicy adversary;
    std::size_t trials = 100;
    std::uint64_t seed = 1;
    PufConfig device;
    // Attestation only.
    std::size_t memory_size = 16384;
    std::size_t chunk_size = 1024;
    double budget_factor = 1.2;

    void validate() const;
    KeyValueDoc to_kv() const;
    /// Keys: protocol, adversary, probability, rule, injections,
    /// relocation_overhead, harvest, trials, seed, memory_size, chunk_size,
    /// budget_factor, and device.<key> for any device configuration key.
    static ScenarioConfig from_kv(const KeyValueDoc &doc);
};

struct TrialRecord {
    std::size_t trial = 0;
    std::string outcome; // "accepted" or "<party>:<reason>"
    bool adversary_success = false;
    std::size_t adversary_actions = 0;
    /// Auth: the session completed through the verifier's retained previous
    /// secret after an earlier failure.
    bool recovered = false;
};

struct ScenarioReport {
    Protocol protocol = Protocol::Auth;
    AdversaryMode mode = AdversaryMode::Passive;
    std::size_t trials = 0;
    std::size_t accepts = 0;
    std::map<std::string, std::size_t> rejects;
    std::size_t adversary_successes = 0;
    /// Adversary successes with no logged action behind them. Always 0
    /// unless the bookkeeping is broken.
    std::size_t untraced_successes = 0;
    std::size_t adversary_actions = 0;
    std::size_t forged_messages = 0;
    std::size_t forgeries_accepted = 0;
    std::size_t recovered_sessions = 0;
    std::size_t harvested_messages = 0;
    /// Auth: both parties hold the same secret after the last trial.
    bool final_in_sync = true;
    crypto::Digest transcript{};
    std::vector<TrialRecord> trial_log;
    std::vector<AdversaryAction> action_log;

    KeyValueDoc to_kv() const;
    std::string trial_csv() const;
    std::string action_csv() const;
};

/// Runs the configured protocol end to end through a Channel. Deterministic
/// given the configuration (including its seed).
ScenarioReport run_scenario(const ScenarioConfig &config);

} // namespace puflab::sim
