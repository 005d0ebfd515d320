// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "puflab/bits.hpp"
#include "puflab/crypto.hpp"
#include "puflab/puf.hpp"

namespace puflab::attest {

inline constexpr std::uint8_t kReportType = 0x03;
inline constexpr std::size_t kDefaultChunkSize = 4096;

inline constexpr std::uint8_t kRequestType = 0x04;

/// Wire: type || be64 timestamp || be32 challenge bits || packed challenge.
struct AttestationRequest {
    std::uint64_t timestamp = 0;
    Challenge challenge;

    Bytes serialize() const;
    static AttestationRequest parse(std::span<const std::uint8_t> wire);
    bool operator==(const AttestationRequest &) const = default;
};

/// Byte image split into fixed-size chunks; the last chunk is zero-padded.
class MemoryImage {
  public:
    /// Throws ValidationError for an empty image or a zero chunk size.
    MemoryImage(Bytes data, std::size_t chunk_size = kDefaultChunkSize);

    std::size_t size() const { return data_.size(); }
    std::size_t chunk_size() const { return chunk_size_; }
    std::size_t chunk_count() const { return (data_.size() + chunk_size_ - 1) / chunk_size_; }
    /// Chunk \p index (0-based), always chunk_size() bytes.
    Bytes chunk(std::size_t index) const;
    const Bytes &data() const { return data_; }
    Bytes &mutable_data() { return data_; }

  private:
    Bytes data_;
    std::size_t chunk_size_;
};

/// Simulated latencies in picoseconds.
struct TimeModel {
    std::uint64_t hash_ps_per_byte = 1000; // 1 GB/s hashing
    std::uint64_t puf_ps_per_bit = 200;    // 5 Gb/s interrogation
    /// Multiplier on the hashing latency. 1 for an honest device; an
    /// adversary serving relocated memory pays more per chunk.
    double hash_overhead = 1.0;

    std::uint64_t per_chunk_ps(std::size_t chunk_size, std::size_t challenge_bits) const;
};

struct AttestOptions {
    TimeModel time;
    /// Map each response to the next challenge by SHA-256 expansion when the
    /// response and challenge widths differ. When false, differing widths
    /// raise ConfigError.
    bool adapt_width = true;
};

/// Wire: type || be64 timestamp || 32-byte final hash || be64 elapsed.
struct AttestationReport {
    std::uint64_t timestamp = 0;
    crypto::Digest final_hash{};
    std::uint64_t elapsed_ps = 0;

    Bytes serialize() const;
    static AttestationReport parse(std::span<const std::uint8_t> wire);
    bool operator==(const AttestationReport &) const = default;
};

/// Deterministic permutation of the chunk indices 0..n-1: Fisher-Yates driven
/// by a SHA-256 expander seeded with KDF(packed r1 || be64 t).
std::vector<std::size_t> derive_walk(std::span<const std::uint8_t> first_response,
                                     std::uint64_t timestamp, std::size_t n);

/// The challenge fed to the device after it answered \p response.
Challenge chained_challenge(const Bits &response, std::size_t challenge_bits,
                            const AttestOptions &options);

/// Every intermediate hash h_1..h_n of one run, using noiseless responses.
std::vector<crypto::Digest> hash_chain(const AttestationRequest &request,
                                       const MemoryImage &memory, const PufInstance &puf,
                                       const AttestOptions &options = {});

AttestationReport device_attest(const AttestationRequest &request, const MemoryImage &memory,
                                const PufInstance &puf, const AttestOptions &options = {});

/// Elapsed time of an honest run over \p memory.
std::uint64_t honest_elapsed_ps(const MemoryImage &memory, const PufInstance &puf,
                                const TimeModel &time = {});

/// Stale: the report answers no outstanding request (already accepted once,
/// or never issued by this verifier).
enum class RejectReason { HashMismatch, Timeout, Stale };
std::string_view to_string(RejectReason reason);

struct AttestVerdict {
    std::optional<RejectReason> reject;
    bool accepted() const { return !reject; }
};

/// Recomputes h_n from the golden image and the device model. A report whose
/// timestamp does not echo the request counts as a hash mismatch.
AttestVerdict verifier_attest_check(const AttestationRequest &request,
                                    const AttestationReport &report,
                                    const MemoryImage &golden, const PufInstance &puf_model,
                                    std::uint64_t time_budget_ps,
                                    const AttestOptions &options = {});

/// Verifier holding the golden image and device model, issuing requests with
/// strictly increasing timestamps. Only the latest request is outstanding and
/// it is retired by the first report that is accepted for it.
class AttestationVerifier {
  public:
    AttestationVerifier(MemoryImage golden, PufInstance puf_model, double budget_factor = 1.2,
                        AttestOptions options = {});

    /// Throws ValidationError if \p timestamp does not exceed the last one.
    AttestationRequest make_request(std::uint64_t timestamp, RandomStream &rng);
    AttestVerdict check(const AttestationRequest &request, const AttestationReport &report);
    const std::optional<AttestationRequest> &outstanding() const { return outstanding_; }
    std::uint64_t time_budget_ps() const { return budget_ps_; }
    const MemoryImage &golden() const { return golden_; }

  private:
    MemoryImage golden_;
    PufInstance puf_;
    AttestOptions options_;
    std::uint64_t budget_ps_;
    std::optional<std::uint64_t> last_timestamp_;
    std::optional<AttestationRequest> outstanding_;
};

} // namespace puflab::attest
