// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "puflab/bits.hpp"
#include "puflab/crypto.hpp"
#include "puflab/kv.hpp"
#include "puflab/random.hpp"

namespace puflab {

enum class PufKind { Photonic, ArbiterLinear, SramWeak };

std::string_view to_string(PufKind kind);
PufKind parse_puf_kind(std::string_view name);

using DeviceSeed = std::array<std::uint8_t, 32>;

/// Seed whose low 8 bytes hold \p value big-endian and whose other bytes are 0.
DeviceSeed make_seed(std::uint64_t value);
DeviceSeed parse_seed(std::string_view hex);
std::string seed_hex(const DeviceSeed &seed);

struct Challenge {
    Bits bits;

    Challenge() = default;
    explicit Challenge(Bits b) : bits(std::move(b)) {}
    std::size_t size() const { return bits.size(); }
    bool operator==(const Challenge &) const = default;
};

Challenge random_challenge(std::size_t length, RandomStream &rng);

struct Response {
    Bits bits;
    /// Photocurrent (or delay / mismatch) per response bit, normalized units.
    std::vector<double> analog;
};

struct EnvironmentState {
    double temperature_delta = 0.0; // kelvin from calibration point
    double noise_sigma = 0.02;      // additive Gaussian, normalized units
};

struct PhotonicParams {
    std::size_t paths = 32;
    double mem_decay = 0.6;         // resonator through-coupling, [0, 1)
    double phase_temp_coeff = 0.02; // rad / K, applied to every ring phase
    /// Photocurrent per unit optical tap power, scaled by the tap count so the
    /// mean tap photocurrent stays comparable across detector widths.
    double responsivity = 0.3;
    /// Optical input power; 1 at calibration. Exposed as an attack hook.
    double laser_power = 1.0;
    std::size_t calibration_samples = 1000;
    /// Photodiodes with no optical coupling (zero detector row).
    std::vector<std::size_t> dead_taps;
};

struct ArbiterParams {
    double replica_sigma = 0.1; // per-replica weight perturbation
};

struct SramParams {
    double mismatch_sigma = 0.5; // spread of per-cell stability
};

struct PufConfig {
    PufKind kind = PufKind::Photonic;
    DeviceSeed seed{};
    std::size_t challenge_bits = 64;
    std::size_t response_bits = 128;
    EnvironmentState env;
    PhotonicParams photonic;
    ArbiterParams arbiter;
    SramParams sram;

    /// Throws ValidationError naming the offending parameter.
    void validate() const;

    KeyValueDoc to_kv() const;
    static PufConfig from_kv(const KeyValueDoc &doc);
};

/// Arbiter parity features: phi_i = prod_{j >= i} (1 - 2 c_j) for
/// i < L, plus a trailing constant 1 (length L + 1).
std::vector<double> parity_features(const Challenge &c);

namespace detail {
struct PhotonicModel;
struct ArbiterModel;
struct SramModel;
} // namespace detail

/// A simulated PUF device.
///
/// Evaluation is a pure function of (configuration, thresholds, challenge,
/// noise draws). The device-unique parameter block is immutable and shared
/// between copies, so an instance can be copied cheaply and evaluated from
/// several threads as long as each caller owns its noise stream.
class PufInstance {
  public:
    /// Validates \p config, expands the seed into device parameters and, for
    /// photonic devices, calibrates thresholds with
    /// config.photonic.calibration_samples challenges.
    static PufInstance create(const PufConfig &config);

    const PufConfig &config() const { return config_; }
    PufKind kind() const { return config_.kind; }
    std::size_t challenge_bits() const { return config_.challenge_bits; }
    std::size_t response_bits() const { return config_.response_bits; }
    const EnvironmentState &environment() const { return config_.env; }

    /// Same device under different operating conditions.
    PufInstance with_environment(const EnvironmentState &env) const;

    /// Noisy evaluation; draws noise_sigma-scaled Gaussians from \p noise.
    Response evaluate(const Challenge &challenge, RandomStream &noise) const;
    /// Evaluation with the noise term removed (temperature still applies).
    Response evaluate_noiseless(const Challenge &challenge) const;

    /// Per-tap median of noiseless photocurrents over \p n_samples challenges
    /// drawn from the device's calibration stream. Photonic devices only.
    const std::vector<double> &calibrate_thresholds(std::size_t n_samples);
    const std::vector<double> &thresholds() const { return thresholds_; }

    /// Photonic: detector photocurrents observed after each stage (L rows of
    /// M values), noiseless.
    std::vector<std::vector<double>> stage_trace(const Challenge &challenge) const;
    /// Photonic: total noiseless optical power reaching the detectors.
    double detected_power(const Challenge &challenge) const;
    /// Photonic: total optical power injected by the laser.
    double input_power() const;

    /// Arbiter: replica weight vector (length L + 1). Replica 0 is the
    /// unperturbed stage-weight vector w.
    std::vector<double> replica_weights(std::size_t replica) const;

    /// SRAM: probability that bit \p k differs from its noiseless value.
    double flip_probability(std::size_t k) const;

    /// Digest over configuration, thresholds and every device parameter.
    crypto::Digest state_digest() const;

  private:
    PufInstance() = default;
    std::vector<double> analog_noiseless(const Challenge &challenge) const;
    void check_challenge(const Challenge &challenge) const;

    PufConfig config_;
    std::vector<double> thresholds_;
    std::shared_ptr<const detail::PhotonicModel> photonic_;
    std::shared_ptr<const detail::ArbiterModel> arbiter_;
    std::shared_ptr<const detail::SramModel> sram_;
};

/// Weak-PUF whitened evaluation: the challenge is XORed with the SRAM
/// response (repeated / truncated to the photonic challenge width) and the
/// result is evaluated on the photonic device. With \p noise null both
/// devices are read noiselessly.
Response composite_evaluate(const PufInstance &photonic, const PufInstance &sram,
                            const Challenge &challenge, RandomStream *noise = nullptr);

/// The internal challenge that composite_evaluate feeds to the photonic PUF.
Challenge composite_challenge(const PufInstance &photonic, const Bits &sram_bits,
                              const Challenge &challenge);

} // namespace puflab
