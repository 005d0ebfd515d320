// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include "puflab/attest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "puflab/errors.hpp"

namespace puflab::attest {

MemoryImage::MemoryImage(Bytes data, std::size_t chunk_size)
    : data_(std::move(data)), chunk_size_(chunk_size) {
    if (data_.empty())
        throw ValidationError("memory image is empty");
    if (chunk_size_ == 0)
        throw ValidationError("chunk size must be positive");
}

Bytes MemoryImage::chunk(std::size_t index) const {
    if (index >= chunk_count())
        throw ValidationError("chunk index " + std::to_string(index) + " out of range");
    Bytes out(chunk_size_, 0);
    const std::size_t begin = index * chunk_size_;
    const std::size_t len = std::min(chunk_size_, data_.size() - begin);
    std::copy_n(data_.begin() + static_cast<long>(begin), len, out.begin());
    return out;
}

std::uint64_t TimeModel::per_chunk_ps(std::size_t chunk_size, std::size_t challenge_bits) const {
    const double hash = static_cast<double>(hash_ps_per_byte * chunk_size) * hash_overhead;
    return static_cast<std::uint64_t>(std::llround(hash)) + puf_ps_per_bit * challenge_bits;
}

// ---------------------------------------------------------------------------

Bytes AttestationRequest::serialize() const {
    Bytes out{kRequestType};
    put_be64(out, timestamp);
    put_be32(out, static_cast<std::uint32_t>(challenge.size()));
    append(out, pack_bits(challenge.bits));
    return out;
}

AttestationRequest AttestationRequest::parse(std::span<const std::uint8_t> wire) {
    ByteReader r(wire);
    if (r.u8() != kRequestType)
        throw ValidationError("attestation request: wrong type byte");
    AttestationRequest req;
    req.timestamp = r.be64();
    const auto n = r.be32();
    if (n > 4096)
        throw ValidationError("attestation request: challenge too long");
    req.challenge = Challenge(unpack_bits(r.take((n + 7) / 8), n));
    if (!r.done())
        throw ValidationError("attestation request: trailing bytes");
    return req;
}

Bytes AttestationReport::serialize() const {
    Bytes out{kReportType};
    put_be64(out, timestamp);
    append(out, final_hash);
    put_be64(out, elapsed_ps);
    return out;
}

AttestationReport AttestationReport::parse(std::span<const std::uint8_t> wire) {
    ByteReader r(wire);
    if (r.u8() != kReportType)
        throw ValidationError("attestation report: wrong type byte");
    AttestationReport rep;
    rep.timestamp = r.be64();
    auto h = r.take(rep.final_hash.size());
    std::copy(h.begin(), h.end(), rep.final_hash.begin());
    rep.elapsed_ps = r.be64();
    if (!r.done())
        throw ValidationError("attestation report: trailing bytes");
    return rep;
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> derive_walk(std::span<const std::uint8_t> first_response,
                                     std::uint64_t timestamp, std::size_t n) {
    if (n == 0)
        throw ValidationError("derive_walk: need at least one chunk");
    Bytes t;
    put_be64(t, timestamp);
    const auto seed = crypto::kdf("attest.walk", {first_response, t});
    crypto::Expander rng("attest.walk", seed);
    std::vector<std::size_t> walk(n);
    std::iota(walk.begin(), walk.end(), std::size_t{0});
    for (std::size_t i = n - 1; i > 0; --i)
        std::swap(walk[i], walk[rng.uniform_below(i + 1)]);
    return walk;
}

Challenge chained_challenge(const Bits &response, std::size_t challenge_bits,
                            const AttestOptions &options) {
    if (response.size() == challenge_bits)
        return Challenge(response);
    if (!options.adapt_width)
        throw ConfigError("attestation: response width " + std::to_string(response.size()) +
                          " differs from challenge width " + std::to_string(challenge_bits) +
                          " and width adaptation is off");
    crypto::Expander rng("attest.adapt", pack_bits(response));
    return Challenge(rng.bits(challenge_bits));
}

std::vector<crypto::Digest> hash_chain(const AttestationRequest &request,
                                       const MemoryImage &memory, const PufInstance &puf,
                                       const AttestOptions &options) {
    if (puf.kind() == PufKind::SramWeak)
        throw ConfigError("attestation needs a challengeable device, not an SRAM array");
    const std::size_t width = puf.challenge_bits();
    if (request.challenge.size() != width)
        throw ConfigError("attestation: request challenge has " +
                          std::to_string(request.challenge.size()) + " bits, device takes " +
                          std::to_string(width));
    if (!options.adapt_width && puf.response_bits() != width)
        throw ConfigError("attestation: response width " + std::to_string(puf.response_bits()) +
                          " differs from challenge width " + std::to_string(width) +
                          " and width adaptation is off");

    Bits response = puf.evaluate_noiseless(request.challenge).bits;
    Bytes packed = pack_bits(response);
    const auto walk = derive_walk(packed, request.timestamp, memory.chunk_count());

    std::vector<crypto::Digest> chain;
    chain.reserve(walk.size());
    for (std::size_t i = 0; i < walk.size(); ++i) {
        if (i > 0) {
            response = puf.evaluate_noiseless(chained_challenge(response, width, options)).bits;
            packed = pack_bits(response);
        }
        crypto::Sha256 h;
        h.update(memory.chunk(walk[i])).update(packed);
        if (i > 0)
            h.update(chain.back());
        chain.push_back(h.finish());
    }
    return chain;
}

AttestationReport device_attest(const AttestationRequest &request, const MemoryImage &memory,
                                const PufInstance &puf, const AttestOptions &options) {
    AttestationReport rep;
    rep.timestamp = request.timestamp;
    rep.final_hash = hash_chain(request, memory, puf, options).back();
    rep.elapsed_ps = memory.chunk_count() *
                     options.time.per_chunk_ps(memory.chunk_size(), puf.challenge_bits());
    return rep;
}

std::uint64_t honest_elapsed_ps(const MemoryImage &memory, const PufInstance &puf,
                                const TimeModel &time) {
    TimeModel honest = time;
    honest.hash_overhead = 1.0;
    return memory.chunk_count() * honest.per_chunk_ps(memory.chunk_size(), puf.challenge_bits());
}

std::string_view to_string(RejectReason reason) {
    switch (reason) {
    case RejectReason::HashMismatch: return "hash-mismatch";
    case RejectReason::Timeout: return "timeout";
    case RejectReason::Stale: return "stale";
    }
    return "?";
}

AttestVerdict verifier_attest_check(const AttestationRequest &request,
                                    const AttestationReport &report,
                                    const MemoryImage &golden, const PufInstance &puf_model,
                                    std::uint64_t time_budget_ps, const AttestOptions &options) {
    if (report.timestamp != request.timestamp)
        return {RejectReason::HashMismatch};
    const auto expected = hash_chain(request, golden, puf_model, options).back();
    if (!crypto::constant_time_equal(expected, report.final_hash))
        return {RejectReason::HashMismatch};
    if (report.elapsed_ps > time_budget_ps)
        return {RejectReason::Timeout};
    return {};
}

// ---------------------------------------------------------------------------

AttestationVerifier::AttestationVerifier(MemoryImage golden, PufInstance puf_model,
                                         double budget_factor, AttestOptions options)
    : golden_(std::move(golden)), puf_(std::move(puf_model)), options_(options) {
    if (!(budget_factor >= 1.0) || !std::isfinite(budget_factor))
        throw ValidationError("attestation budget factor must be finite and >= 1");
    budget_ps_ = static_cast<std::uint64_t>(
        std::floor(budget_factor * static_cast<double>(honest_elapsed_ps(golden_, puf_, options_.time))));
}

AttestationRequest AttestationVerifier::make_request(std::uint64_t timestamp, RandomStream &rng) {
    if (last_timestamp_ && timestamp <= *last_timestamp_)
        throw ValidationError("attestation timestamps must strictly increase");
    last_timestamp_ = timestamp;
    outstanding_ = AttestationRequest{timestamp, random_challenge(puf_.challenge_bits(), rng)};
    return *outstanding_;
}

AttestVerdict AttestationVerifier::check(const AttestationRequest &request,
                                         const AttestationReport &report) {
    if (!outstanding_ || !(*outstanding_ == request))
        return {RejectReason::Stale};
    auto verdict = verifier_attest_check(request, report, golden_, puf_, budget_ps_, options_);
    if (verdict.accepted())
        outstanding_.reset();
    return verdict;
}

} // namespace puflab::attest
