// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include "puflab/auth.hpp"

#include <algorithm>

#include "puflab/errors.hpp"

namespace puflab::auth {

using detail::KeyAccess;

std::string_view to_string(Role role) { return role == Role::Device ? "device" : "verifier"; }

std::string_view to_string(CommitStatus status) {
    switch (status) {
    case CommitStatus::Stable: return "stable";
    case CommitStatus::PendingVerifier: return "pending-verifier";
    case CommitStatus::PendingDevice: return "pending-device";
    }
    return "?";
}

std::string_view to_string(DeviceVerdict verdict) {
    switch (verdict) {
    case DeviceVerdict::Committed: return "committed";
    case DeviceVerdict::MacMismatch: return "mac-mismatch";
    case DeviceVerdict::CounterMismatch: return "counter-mismatch";
    }
    return "?";
}

std::string_view to_string(VerifierVerdict verdict) {
    switch (verdict) {
    case VerifierVerdict::Accepted: return "accepted";
    case VerifierVerdict::Malformed: return "malformed";
    case VerifierVerdict::UnknownEpoch: return "unknown-epoch";
    case VerifierVerdict::MacMismatch: return "mac-mismatch";
    case VerifierVerdict::Replay: return "replay";
    case VerifierVerdict::MemoryMismatch: return "memory-mismatch";
    case VerifierVerdict::WindowExhausted: return "window-exhausted";
    }
    return "?";
}

// ---------------------------------------------------------------------------

Bytes AuthMessage1::signed_part() const {
    Bytes out{kMessage1Type};
    put_be32(out, counter);
    put_length_prefixed(out, masked);
    put_length_prefixed(out, memory_hash);
    Bytes cc;
    put_be64(cc, cycle_count);
    put_length_prefixed(out, cc);
    put_length_prefixed(out, nonce);
    return out;
}

Bytes AuthMessage1::serialize() const {
    Bytes out = signed_part();
    append(out, mac);
    return out;
}

namespace {
template <std::size_t N>
void copy_exact(std::span<const std::uint8_t> src, std::array<std::uint8_t, N> &dst,
                const char *field) {
    if (src.size() != N)
        throw ValidationError(std::string("auth message: field '") + field + "' has " +
                              std::to_string(src.size()) + " bytes, expected " +
                              std::to_string(N));
    std::copy(src.begin(), src.end(), dst.begin());
}
} // namespace

AuthMessage1 AuthMessage1::parse(std::span<const std::uint8_t> wire) {
    ByteReader r(wire);
    if (r.u8() != kMessage1Type)
        throw ValidationError("auth message 1: wrong type byte");
    AuthMessage1 m;
    m.counter = r.be32();
    auto masked = r.length_prefixed();
    if (masked.size() != SecretKey::size)
        throw ValidationError("auth message 1: masked secret must be 16 bytes");
    m.masked.assign(masked.begin(), masked.end());
    copy_exact(r.length_prefixed(), m.memory_hash, "memory_hash");
    auto cc = r.length_prefixed();
    if (cc.size() != 8)
        throw ValidationError("auth message 1: cycle count must be 8 bytes");
    m.cycle_count = get_be64(cc);
    copy_exact(r.length_prefixed(), m.nonce, "nonce");
    copy_exact(r.take(kMacSize), m.mac, "mac");
    if (!r.done())
        throw ValidationError("auth message 1: trailing bytes");
    return m;
}

Bytes AuthMessage2::serialize() const {
    Bytes out{kMessage2Type};
    put_be32(out, counter);
    append(out, mac);
    return out;
}

AuthMessage2 AuthMessage2::parse(std::span<const std::uint8_t> wire) {
    ByteReader r(wire);
    if (r.u8() != kMessage2Type)
        throw ValidationError("auth message 2: wrong type byte");
    AuthMessage2 m;
    m.counter = r.be32();
    copy_exact(r.take(kMacSize), m.mac, "mac");
    if (!r.done())
        throw ValidationError("auth message 2: trailing bytes");
    return m;
}

// ---------------------------------------------------------------------------

Challenge next_challenge(const SecretKey &current, std::size_t challenge_bits) {
    crypto::Expander rng("auth.challenge", KeyAccess::bytes(current));
    return Challenge(rng.bits(challenge_bits));
}

std::vector<Challenge> sub_challenges(const Challenge &challenge, std::size_t count) {
    std::vector<Challenge> out;
    if (count == 0)
        return out;
    out.push_back(challenge);
    crypto::Expander rng("auth.subchallenge", pack_bits(challenge.bits));
    while (out.size() < count)
        out.emplace_back(rng.bits(challenge.size()));
    return out;
}

namespace {

Bits raw_material(const PufInstance &puf, const Challenge &challenge, std::size_t n_bits,
                  RandomStream &noise) {
    const std::size_t per = puf.response_bits();
    Bits raw;
    for (const auto &c : sub_challenges(challenge, (n_bits + per - 1) / per)) {
        auto bits = puf.evaluate(c, noise).bits;
        raw.insert(raw.end(), bits.begin(), bits.end());
    }
    raw.resize(n_bits);
    return raw;
}

SecretKey stabilized_secret(const PufInstance &puf, const FuzzyExtractor &fe,
                            const Challenge &challenge, RandomStream &noise,
                            RandomStream &randomness) {
    Bits raw = raw_material(puf, challenge, fe.response_bits(), noise);
    auto enrollment = fe.generate(raw, randomness);
    crypto::secure_zero(raw.data(), raw.size());
    return std::move(enrollment.key);
}

crypto::Digest mac2_for(const SecretKey &next, std::uint32_t counter, const Challenge &challenge) {
    Bytes data{kMessage2Type};
    put_be32(data, counter);
    append(data, pack_bits(challenge.bits));
    return crypto::hmac_sha256(KeyAccess::bytes(next), data);
}

Bytes xor_bytes(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
    Bytes out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = a[i] ^ b[i];
    return out;
}

} // namespace

SecretKey enroll_initial_secret(const PufInstance &puf, const FuzzyExtractor &fe,
                                RandomStream &noise, RandomStream &randomness) {
    crypto::Expander rng("auth.enroll", puf.config().seed);
    return stabilized_secret(puf, fe, Challenge(rng.bits(puf.challenge_bits())), noise,
                             randomness);
}

// ---------------------------------------------------------------------------

DeviceEndpoint::DeviceEndpoint(PufInstance puf, SecretKey initial, RandomStream noise,
                               RandomStream randomness, FuzzyExtractor fe)
    : puf_(std::move(puf)), fe_(std::move(fe)), noise_(std::move(noise)),
      randomness_(std::move(randomness)), current_(std::move(initial)) {
    if (puf_.kind() == PufKind::SramWeak)
        throw ConfigError("authentication needs a challengeable device, not an SRAM array");
}

AuthMessage1 DeviceEndpoint::respond() {
    if (status_ != CommitStatus::Stable)
        throw ProtocolStateError("device respond: a session is already pending");
    Challenge challenge = next_challenge(current_, puf_.challenge_bits());
    SecretKey next = stabilized_secret(puf_, fe_, challenge, noise_, randomness_);

    AuthMessage1 m;
    m.counter = counter_;
    m.masked = xor_bytes(KeyAccess::bytes(next), KeyAccess::bytes(current_));
    m.memory_hash = crypto::sha256(memory_image_);
    m.cycle_count = cycle_count_;
    auto nonce = randomness_.bytes(kNonceSize);
    std::copy(nonce.begin(), nonce.end(), m.nonce.begin());
    m.mac = crypto::hmac_sha256(KeyAccess::bytes(current_), m.signed_part());

    // Each stage of each sub-challenge evaluation is one clock.
    cycle_count_ += puf_.challenge_bits() *
                    ((fe_.response_bits() + puf_.response_bits() - 1) / puf_.response_bits());
    pending_.emplace(std::move(next));
    pending_challenge_ = std::move(challenge);
    status_ = CommitStatus::PendingVerifier;
    return m;
}

DeviceVerdict DeviceEndpoint::check_verifier(const AuthMessage2 &msg2) {
    if (status_ != CommitStatus::PendingVerifier)
        throw ProtocolStateError("device check: no session pending");
    DeviceVerdict verdict = DeviceVerdict::Committed;
    if (msg2.counter != counter_) {
        verdict = DeviceVerdict::CounterMismatch;
    } else {
        auto expected = mac2_for(*pending_, counter_, *pending_challenge_);
        if (!crypto::constant_time_equal(expected, msg2.mac))
            verdict = DeviceVerdict::MacMismatch;
    }
    if (verdict == DeviceVerdict::Committed) {
        current_ = std::move(*pending_);
        ++counter_;
    }
    abort_session();
    return verdict;
}

void DeviceEndpoint::abort_session() {
    pending_.reset();
    pending_challenge_.reset();
    status_ = CommitStatus::Stable;
}

SessionState DeviceEndpoint::state() const {
    SessionState s;
    s.role = Role::Device;
    s.status = status_;
    s.counter = counter_;
    s.current_fingerprint = current_.fingerprint();
    if (pending_)
        s.pending_fingerprint = pending_->fingerprint();
    return s;
}

// ---------------------------------------------------------------------------

VerifierEndpoint::VerifierEndpoint(SecretKey initial, std::size_t challenge_bits)
    : challenge_bits_(challenge_bits), current_{std::move(initial), 0, {}} {
    if (challenge_bits == 0)
        throw ValidationError("verifier: challenge width must be positive");
}

void VerifierEndpoint::set_golden_image(std::span<const std::uint8_t> image) {
    golden_hash_ = crypto::sha256(image);
}

VerifierOutcome VerifierEndpoint::check_device(std::span<const std::uint8_t> wire) {
    AuthMessage1 m;
    try {
        m = AuthMessage1::parse(wire);
    } catch (const ValidationError &) {
        return {VerifierVerdict::Malformed, std::nullopt};
    }
    return check_device(m);
}

VerifierOutcome VerifierEndpoint::check_device(const AuthMessage1 &msg1) {
    if (msg1.masked.size() != SecretKey::size)
        return {VerifierVerdict::Malformed, std::nullopt};

    Epoch *epoch = nullptr;
    if (msg1.counter == current_.counter)
        epoch = &current_;
    else if (previous_ && msg1.counter == previous_->counter)
        epoch = &*previous_;
    if (!epoch)
        return {VerifierVerdict::UnknownEpoch, std::nullopt};

    auto expected = crypto::hmac_sha256(KeyAccess::bytes(epoch->secret), msg1.signed_part());
    if (!crypto::constant_time_equal(expected, msg1.mac))
        return {VerifierVerdict::MacMismatch, std::nullopt};
    if (std::find(epoch->nonces.begin(), epoch->nonces.end(), msg1.nonce) != epoch->nonces.end())
        return {VerifierVerdict::Replay, std::nullopt};
    if (epoch->nonces.size() >= kNonceWindow)
        return {VerifierVerdict::WindowExhausted, std::nullopt};
    if (golden_hash_ && !crypto::constant_time_equal(*golden_hash_, msg1.memory_hash))
        return {VerifierVerdict::MemoryMismatch, std::nullopt};

    Bytes next_bytes = xor_bytes(msg1.masked, KeyAccess::bytes(epoch->secret));
    SecretKey next = KeyAccess::make(next_bytes);
    crypto::secure_zero(next_bytes.data(), next_bytes.size());
    Challenge challenge = next_challenge(epoch->secret, challenge_bits_);

    AuthMessage2 reply;
    reply.counter = msg1.counter;
    reply.mac = mac2_for(next, msg1.counter, challenge);

    epoch->nonces.push_back(msg1.nonce);
    const std::uint32_t next_counter = epoch->counter + 1;
    if (epoch == &current_) {
        // The device has shown it holds the current secret, so the one
        // before it can go.
        previous_.emplace(std::move(current_));
    }
    current_ = Epoch{std::move(next), next_counter, {}};
    last_cycle_count_ = msg1.cycle_count;
    return {VerifierVerdict::Accepted, reply};
}

SessionState VerifierEndpoint::state() const {
    SessionState s;
    s.role = Role::Verifier;
    s.status = previous_ ? CommitStatus::PendingDevice : CommitStatus::Stable;
    s.counter = current_.counter;
    s.current_fingerprint = current_.secret.fingerprint();
    if (previous_)
        s.previous_fingerprint = previous_->secret.fingerprint();
    return s;
}

} // namespace puflab::auth
