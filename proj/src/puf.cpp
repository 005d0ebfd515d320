// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include "puflab/puf.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "puflab/errors.hpp"

namespace puflab {

using cplx = std::complex<double>;

std::string_view to_string(PufKind kind) {
    switch (kind) {
    case PufKind::Photonic:
        return "photonic";
    case PufKind::ArbiterLinear:
        return "arbiter";
    case PufKind::SramWeak:
        return "sram";
    }
    return "unknown";
}

PufKind parse_puf_kind(std::string_view name) {
    if (name == "photonic")
        return PufKind::Photonic;
    if (name == "arbiter")
        return PufKind::ArbiterLinear;
    if (name == "sram")
        return PufKind::SramWeak;
    throw ValidationError("kind: unknown PUF kind '" + std::string(name) +
                          "' (expected photonic, arbiter or sram)");
}

DeviceSeed make_seed(std::uint64_t value) {
    DeviceSeed s{};
    for (int i = 0; i < 8; ++i)
        s[31 - i] = static_cast<std::uint8_t>(value >> (8 * i));
    return s;
}

DeviceSeed parse_seed(std::string_view hex) {
    auto bytes = from_hex(hex);
    if (bytes.size() > 32)
        throw ValidationError("seed: more than 256 bits");
    DeviceSeed s{};
    std::copy(bytes.begin(), bytes.end(), s.end() - static_cast<long>(bytes.size()));
    return s;
}

std::string seed_hex(const DeviceSeed &seed) { return to_hex(seed); }

Challenge random_challenge(std::size_t length, RandomStream &rng) {
    return Challenge(rng.bits(length));
}

std::vector<double> parity_features(const Challenge &c) {
    const std::size_t L = c.size();
    std::vector<double> phi(L + 1);
    phi[L] = 1.0;
    double acc = 1.0;
    for (std::size_t i = L; i-- > 0;) {
        acc *= c.bits[i] ? -1.0 : 1.0;
        phi[i] = acc;
    }
    return phi;
}

// ---------------------------------------------------------------------------
// Configuration

void PufConfig::validate() const {
    auto fail = [](const std::string &msg) { throw ValidationError(msg); };
    if (challenge_bits != 32 && challenge_bits != 64 && challenge_bits != 128)
        fail("challenge_bits: " + std::to_string(challenge_bits) +
             " not supported (expected 32, 64 or 128)");
    if (response_bits < 1 || response_bits > 65536)
        fail("response_bits: must be in [1, 65536], got " + std::to_string(response_bits));
    if (!(env.noise_sigma >= 0.0) || !std::isfinite(env.noise_sigma))
        fail("noise_sigma: must be finite and >= 0");
    if (!std::isfinite(env.temperature_delta))
        fail("temperature_delta: must be finite");
    switch (kind) {
    case PufKind::Photonic:
        if (photonic.paths < 2 || photonic.paths > 1024)
            fail("paths: must be in [2, 1024], got " + std::to_string(photonic.paths));
        if (!(photonic.mem_decay >= 0.0 && photonic.mem_decay < 1.0))
            fail("mem_decay: must be in [0, 1)");
        if (!std::isfinite(photonic.phase_temp_coeff))
            fail("phase_temp_coeff: must be finite");
        if (!(photonic.responsivity > 0.0) || !std::isfinite(photonic.responsivity))
            fail("responsivity: must be finite and > 0");
        if (!(photonic.laser_power > 0.0) || !std::isfinite(photonic.laser_power))
            fail("laser_power: must be finite and > 0");
        if (photonic.calibration_samples < 100)
            fail("calibration_samples: must be >= 100");
        for (auto t : photonic.dead_taps)
            if (t >= response_bits)
                fail("dead_taps: tap " + std::to_string(t) + " out of range");
        break;
    case PufKind::ArbiterLinear:
        if (!(arbiter.replica_sigma >= 0.0) || !std::isfinite(arbiter.replica_sigma))
            fail("replica_sigma: must be finite and >= 0");
        break;
    case PufKind::SramWeak:
        if (!(sram.mismatch_sigma > 0.0) || !std::isfinite(sram.mismatch_sigma))
            fail("mismatch_sigma: must be finite and > 0");
        break;
    }
}

KeyValueDoc PufConfig::to_kv() const {
    KeyValueDoc doc;
    doc.set("kind", std::string(to_string(kind)));
    doc.set("seed", seed_hex(seed));
    doc.set("challenge_bits", challenge_bits);
    doc.set("response_bits", response_bits);
    doc.set("noise_sigma", env.noise_sigma);
    doc.set("temperature_delta", env.temperature_delta);
    switch (kind) {
    case PufKind::Photonic: {
        doc.set("paths", photonic.paths);
        doc.set("mem_decay", photonic.mem_decay);
        doc.set("phase_temp_coeff", photonic.phase_temp_coeff);
        doc.set("responsivity", photonic.responsivity);
        doc.set("laser_power", photonic.laser_power);
        doc.set("calibration_samples", photonic.calibration_samples);
        if (!photonic.dead_taps.empty()) {
            std::string taps;
            for (auto t : photonic.dead_taps)
                taps += (taps.empty() ? "" : ",") + std::to_string(t);
            doc.set("dead_taps", taps);
        }
        break;
    }
    case PufKind::ArbiterLinear:
        doc.set("replica_sigma", arbiter.replica_sigma);
        break;
    case PufKind::SramWeak:
        doc.set("mismatch_sigma", sram.mismatch_sigma);
        break;
    }
    return doc;
}

PufConfig PufConfig::from_kv(const KeyValueDoc &doc) {
    static const char *known[] = {"kind",          "seed",          "challenge_bits",
                                  "response_bits", "noise_sigma",   "temperature_delta",
                                  "paths",         "mem_decay",     "phase_temp_coeff",
                                  "responsivity",  "laser_power",   "calibration_samples",
                                  "dead_taps",     "replica_sigma", "mismatch_sigma"};
    for (const auto &[k, v] : doc.entries()) {
        if (std::find(std::begin(known), std::end(known), k) == std::end(known))
            throw ValidationError("unknown PUF configuration key '" + k + "'");
    }
    PufConfig c;
    c.kind = parse_puf_kind(doc.get_or("kind", "photonic"));
    c.seed = parse_seed(doc.get("seed"));
    c.challenge_bits = doc.get_uint_or("challenge_bits", c.challenge_bits);
    c.response_bits = doc.get_uint_or("response_bits", c.response_bits);
    c.env.noise_sigma = doc.get_double_or("noise_sigma", c.env.noise_sigma);
    c.env.temperature_delta = doc.get_double_or("temperature_delta", c.env.temperature_delta);
    c.photonic.paths = doc.get_uint_or("paths", c.photonic.paths);
    c.photonic.mem_decay = doc.get_double_or("mem_decay", c.photonic.mem_decay);
    c.photonic.phase_temp_coeff =
        doc.get_double_or("phase_temp_coeff", c.photonic.phase_temp_coeff);
    c.photonic.responsivity = doc.get_double_or("responsivity", c.photonic.responsivity);
    c.photonic.laser_power = doc.get_double_or("laser_power", c.photonic.laser_power);
    c.photonic.calibration_samples =
        doc.get_uint_or("calibration_samples", c.photonic.calibration_samples);
    if (auto taps = doc.find("dead_taps")) {
        std::stringstream ss(*taps);
        std::string item;
        while (std::getline(ss, item, ',')) {
            KeyValueDoc one;
            one.set("dead_taps", item);
            c.photonic.dead_taps.push_back(one.get_uint("dead_taps"));
        }
    }
    c.arbiter.replica_sigma = doc.get_double_or("replica_sigma", c.arbiter.replica_sigma);
    c.sram.mismatch_sigma = doc.get_double_or("mismatch_sigma", c.sram.mismatch_sigma);
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// Device parameter blocks

namespace detail {

/// Coherent photonic PUF.
///
/// Each stage couples the propagating bus field with a resonator field
/// through a lossless 2x2 coupler (through coefficient a = mem_decay), applies
/// the ring round-trip phase to the resonator, phase-flips the masked bus paths
/// when the stage's challenge bit is 1, and scatters the bus through a unitary.
/// The whole stage is unitary on (bus, ring), so optical power is conserved
/// and the detected power can never exceed the injected power.
struct PhotonicModel {
    std::size_t paths = 0, stages = 0, taps = 0;
    std::vector<cplx> scatter;    // stages x paths x paths, row-major
    std::vector<std::uint8_t> mask; // stages x paths
    std::vector<cplx> ring_phase; // paths, unit modulus
    std::vector<cplx> input;      // paths, unit norm
    std::vector<cplx> detector;   // taps x paths, operator norm <= 1
};

struct ArbiterModel {
    std::vector<double> weights; // replicas x (L + 1)
    std::size_t width = 0;
};

struct SramModel {
    std::vector<double> mismatch;
};

} // namespace detail

namespace {

cplx complex_gaussian(crypto::Expander &x) {
    double re = x.gaussian();
    double im = x.gaussian();
    return {re * M_SQRT1_2, im * M_SQRT1_2};
}

/// Gram-Schmidt orthonormalization of the columns of a rows x cols matrix
/// (rows >= cols). With i.i.d. complex Gaussian input this yields columns of a
/// Haar-distributed unitary.
void orthonormalize_columns(std::vector<cplx> &m, std::size_t rows, std::size_t cols) {
    for (std::size_t j = 0; j < cols; ++j) {
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t k = 0; k < j; ++k) {
                cplx dot = 0;
                for (std::size_t r = 0; r < rows; ++r)
                    dot += std::conj(m[r * cols + k]) * m[r * cols + j];
                for (std::size_t r = 0; r < rows; ++r)
                    m[r * cols + j] -= dot * m[r * cols + k];
            }
        }
        double norm = 0;
        for (std::size_t r = 0; r < rows; ++r)
            norm += std::norm(m[r * cols + j]);
        norm = std::sqrt(norm);
        for (std::size_t r = 0; r < rows; ++r)
            m[r * cols + j] /= norm;
    }
}

std::shared_ptr<const detail::PhotonicModel> build_photonic(const PufConfig &cfg) {
    auto m = std::make_shared<detail::PhotonicModel>();
    const std::size_t P = cfg.photonic.paths;
    const std::size_t L = cfg.challenge_bits;
    const std::size_t M = cfg.response_bits;
    m->paths = P;
    m->stages = L;
    m->taps = M;

    crypto::Expander scat("photonic/scatter", cfg.seed);
    m->scatter.resize(L * P * P);
    std::vector<cplx> u(P * P);
    for (std::size_t s = 0; s < L; ++s) {
        for (auto &z : u)
            z = complex_gaussian(scat);
        orthonormalize_columns(u, P, P);
        std::copy(u.begin(), u.end(), m->scatter.begin() + static_cast<long>(s * P * P));
    }

    crypto::Expander mask("photonic/mask", cfg.seed);
    m->mask = mask.bits(L * P);
    for (std::size_t s = 0; s < L; ++s) {
        auto row = m->mask.begin() + static_cast<long>(s * P);
        if (std::none_of(row, row + static_cast<long>(P), [](auto b) { return b != 0; }))
            row[static_cast<long>(mask.uniform_below(P))] = 1;
    }

    crypto::Expander ring("photonic/ring-phase", cfg.seed);
    m->ring_phase.resize(P);
    for (auto &z : m->ring_phase) {
        cplx g;
        do {
            g = complex_gaussian(ring);
        } while (std::abs(g) == 0.0);
        z = g / std::abs(g);
    }

    crypto::Expander in("photonic/input", cfg.seed);
    m->input.resize(P);
    for (auto &z : m->input)
        z = complex_gaussian(in);
    orthonormalize_columns(m->input, P, 1);

    // Detector coupling: orthonormal columns when M >= P (an isometry), else
    // orthonormal rows (a co-isometry); both have operator norm exactly 1.
    crypto::Expander det("photonic/detector", cfg.seed);
    m->detector.resize(M * P);
    for (auto &z : m->detector)
        z = complex_gaussian(det);
    if (M >= P) {
        orthonormalize_columns(m->detector, M, P);
    } else {
        std::vector<cplx> t(P * M);
        for (std::size_t r = 0; r < M; ++r)
            for (std::size_t c = 0; c < P; ++c)
                t[c * M + r] = m->detector[r * P + c];
        orthonormalize_columns(t, P, M);
        for (std::size_t r = 0; r < M; ++r)
            for (std::size_t c = 0; c < P; ++c)
                m->detector[r * P + c] = t[c * M + r];
    }
    for (auto tap : cfg.photonic.dead_taps)
        std::fill_n(m->detector.begin() + static_cast<long>(tap * P), P, cplx{});
    return m;
}

std::shared_ptr<const detail::ArbiterModel> build_arbiter(const PufConfig &cfg) {
    auto m = std::make_shared<detail::ArbiterModel>();
    const std::size_t W = cfg.challenge_bits + 1;
    m->width = W;
    crypto::Expander base("arbiter/weights", cfg.seed);
    std::vector<double> w(W);
    for (auto &v : w)
        v = base.gaussian();
    crypto::Expander pert("arbiter/replica", cfg.seed);
    m->weights.resize(cfg.response_bits * W);
    for (std::size_t r = 0; r < cfg.response_bits; ++r) {
        for (std::size_t i = 0; i < W; ++i) {
            double delta = r == 0 ? 0.0 : cfg.arbiter.replica_sigma * pert.gaussian();
            m->weights[r * W + i] = w[i] + delta;
        }
    }
    return m;
}

std::shared_ptr<const detail::SramModel> build_sram(const PufConfig &cfg) {
    auto m = std::make_shared<detail::SramModel>();
    crypto::Expander x("sram/mismatch", cfg.seed);
    m->mismatch.resize(cfg.response_bits);
    for (auto &v : m->mismatch)
        v = cfg.sram.mismatch_sigma * x.gaussian();
    return m;
}

/// Runs the photonic stage recurrence. When \p trace is non-null the bus
/// field after every stage is appended to it (stages x paths).
std::vector<cplx> propagate(const detail::PhotonicModel &m, const PufConfig &cfg,
                            const Challenge &c, std::vector<cplx> *trace) {
    const std::size_t P = m.paths;
    const double a = cfg.photonic.mem_decay;
    const double k = std::sqrt(1.0 - a * a);
    const cplx drift = std::polar(1.0, cfg.photonic.phase_temp_coeff * cfg.env.temperature_delta);
    std::vector<cplx> ring_phase(P);
    for (std::size_t p = 0; p < P; ++p)
        ring_phase[p] = m.ring_phase[p] * drift;

    const double amp = std::sqrt(cfg.photonic.laser_power);
    std::vector<cplx> bus(P), ring(P, cplx{}), mixed(P);
    for (std::size_t p = 0; p < P; ++p)
        bus[p] = amp * m.input[p];

    for (std::size_t s = 0; s < m.stages; ++s) {
        const auto *mask = &m.mask[s * P];
        const bool flip = c.bits[s] != 0;
        for (std::size_t p = 0; p < P; ++p) {
            cplx b = a * bus[p] + k * ring[p];
            ring[p] = (a * ring[p] - k * bus[p]) * ring_phase[p];
            mixed[p] = (flip && mask[p]) ? -b : b;
        }
        const cplx *u = &m.scatter[s * P * P];
        for (std::size_t r = 0; r < P; ++r) {
            cplx acc = 0;
            for (std::size_t q = 0; q < P; ++q)
                acc += u[r * P + q] * mixed[q];
            bus[r] = acc;
        }
        if (trace)
            trace->insert(trace->end(), bus.begin(), bus.end());
    }
    return bus;
}

std::vector<double> detect(const detail::PhotonicModel &m, const PufConfig &cfg,
                           std::span<const cplx> bus) {
    const std::size_t P = m.paths;
    const double gain = cfg.photonic.responsivity * static_cast<double>(m.taps);
    std::vector<double> out(m.taps);
    for (std::size_t t = 0; t < m.taps; ++t) {
        cplx e = 0;
        for (std::size_t q = 0; q < P; ++q)
            e += m.detector[t * P + q] * bus[q];
        out[t] = gain * std::norm(e);
    }
    return out;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

// ---------------------------------------------------------------------------
// PufInstance

PufInstance PufInstance::create(const PufConfig &config) {
    config.validate();
    PufInstance p;
    p.config_ = config;
    switch (config.kind) {
    case PufKind::Photonic:
        p.photonic_ = build_photonic(config);
        p.calibrate_thresholds(config.photonic.calibration_samples);
        break;
    case PufKind::ArbiterLinear:
        p.arbiter_ = build_arbiter(config);
        p.thresholds_.assign(config.response_bits, 0.0);
        break;
    case PufKind::SramWeak:
        p.sram_ = build_sram(config);
        p.thresholds_.assign(config.response_bits, 0.0);
        break;
    }
    return p;
}

PufInstance PufInstance::with_environment(const EnvironmentState &env) const {
    PufInstance p = *this;
    p.config_.env = env;
    p.config_.validate();
    return p;
}

void PufInstance::check_challenge(const Challenge &challenge) const {
    if (config_.kind == PufKind::SramWeak)
        return;
    if (challenge.size() != config_.challenge_bits)
        throw ShapeError("challenge has " + std::to_string(challenge.size()) +
                         " bits, device expects " + std::to_string(config_.challenge_bits));
}

std::vector<double> PufInstance::analog_noiseless(const Challenge &challenge) const {
    check_challenge(challenge);
    switch (config_.kind) {
    case PufKind::Photonic: {
        auto bus = propagate(*photonic_, config_, challenge, nullptr);
        return detect(*photonic_, config_, bus);
    }
    case PufKind::ArbiterLinear: {
        const auto phi = parity_features(challenge);
        const std::size_t W = arbiter_->width;
        const double scale = 1.0 / std::sqrt(static_cast<double>(W));
        std::vector<double> out(config_.response_bits);
        for (std::size_t r = 0; r < out.size(); ++r) {
            double acc = 0;
            for (std::size_t i = 0; i < W; ++i)
                acc += arbiter_->weights[r * W + i] * phi[i];
            out[r] = acc * scale;
        }
        return out;
    }
    case PufKind::SramWeak:
        return sram_->mismatch;
    }
    return {};
}

Response PufInstance::evaluate_noiseless(const Challenge &challenge) const {
    Response r;
    r.analog = analog_noiseless(challenge);
    r.bits.resize(r.analog.size());
    for (std::size_t k = 0; k < r.analog.size(); ++k)
        r.bits[k] = r.analog[k] >= thresholds_[k] ? 1 : 0;
    return r;
}

Response PufInstance::evaluate(const Challenge &challenge, RandomStream &noise) const {
    Response r;
    r.analog = analog_noiseless(challenge);
    const double sigma = config_.env.noise_sigma;
    r.bits.resize(r.analog.size());
    for (std::size_t k = 0; k < r.analog.size(); ++k) {
        if (sigma > 0)
            r.analog[k] += sigma * noise.gaussian();
        r.bits[k] = r.analog[k] >= thresholds_[k] ? 1 : 0;
    }
    return r;
}

const std::vector<double> &PufInstance::calibrate_thresholds(std::size_t n_samples) {
    if (config_.kind != PufKind::Photonic)
        throw ValidationError("calibrate_thresholds: only photonic devices have "
                              "calibrated thresholds");
    if (n_samples < 100)
        throw ValidationError("n_samples: must be >= 100, got " + std::to_string(n_samples));
    const std::size_t M = config_.response_bits;
    crypto::Expander stream("photonic/calibration", config_.seed);
    std::vector<std::vector<double>> per_tap(M, std::vector<double>(n_samples));
    for (std::size_t i = 0; i < n_samples; ++i) {
        Challenge c(stream.bits(config_.challenge_bits));
        auto bus = propagate(*photonic_, config_, c, nullptr);
        auto cur = detect(*photonic_, config_, bus);
        for (std::size_t t = 0; t < M; ++t)
            per_tap[t][i] = cur[t];
    }
    thresholds_.resize(M);
    for (std::size_t t = 0; t < M; ++t)
        thresholds_[t] = median(std::move(per_tap[t]));
    return thresholds_;
}

std::vector<std::vector<double>> PufInstance::stage_trace(const Challenge &challenge) const {
    if (config_.kind != PufKind::Photonic)
        throw ValidationError("stage_trace: photonic devices only");
    check_challenge(challenge);
    std::vector<cplx> trace;
    propagate(*photonic_, config_, challenge, &trace);
    const std::size_t P = photonic_->paths;
    std::vector<std::vector<double>> out;
    for (std::size_t s = 0; s < photonic_->stages; ++s)
        out.push_back(detect(*photonic_, config_,
                             std::span<const cplx>(trace).subspan(s * P, P)));
    return out;
}

double PufInstance::detected_power(const Challenge &challenge) const {
    if (config_.kind != PufKind::Photonic)
        throw ValidationError("detected_power: photonic devices only");
    check_challenge(challenge);
    auto bus = propagate(*photonic_, config_, challenge, nullptr);
    const std::size_t P = photonic_->paths;
    double total = 0;
    for (std::size_t t = 0; t < photonic_->taps; ++t) {
        cplx e = 0;
        for (std::size_t q = 0; q < P; ++q)
            e += photonic_->detector[t * P + q] * bus[q];
        total += std::norm(e);
    }
    return total;
}

double PufInstance::input_power() const { return config_.photonic.laser_power; }

std::vector<double> PufInstance::replica_weights(std::size_t replica) const {
    if (config_.kind != PufKind::ArbiterLinear)
        throw ValidationError("replica_weights: arbiter devices only");
    if (replica >= config_.response_bits)
        throw ValidationError("replica_weights: replica out of range");
    const std::size_t W = arbiter_->width;
    auto b = arbiter_->weights.begin() + static_cast<long>(replica * W);
    return {b, b + static_cast<long>(W)};
}

double PufInstance::flip_probability(std::size_t k) const {
    if (config_.kind != PufKind::SramWeak)
        throw ValidationError("flip_probability: SRAM devices only");
    if (k >= config_.response_bits)
        throw ValidationError("flip_probability: bit out of range");
    const double sigma = config_.env.noise_sigma;
    if (sigma == 0)
        return 0.0;
    // P(noise pushes the cell across its trip point) = Phi(-|m| / sigma)
    return 0.5 * std::erfc(std::abs(sram_->mismatch[k]) / (sigma * M_SQRT2));
}

crypto::Digest PufInstance::state_digest() const {
    crypto::Sha256 h;
    auto doubles = [&](std::span<const double> v) {
        h.update(std::span(reinterpret_cast<const std::uint8_t *>(v.data()),
                           v.size() * sizeof(double)));
    };
    h.update(config_.to_kv().to_string());
    doubles(thresholds_);
    if (photonic_) {
        for (const auto *v : {&photonic_->scatter, &photonic_->ring_phase, &photonic_->input,
                              &photonic_->detector})
            doubles(std::span(reinterpret_cast<const double *>(v->data()), v->size() * 2));
        h.update(photonic_->mask);
    }
    if (arbiter_)
        doubles(arbiter_->weights);
    if (sram_)
        doubles(sram_->mismatch);
    return h.finish();
}

// ---------------------------------------------------------------------------
// Composite strong + weak evaluation

Challenge composite_challenge(const PufInstance &photonic, const Bits &sram_bits,
                              const Challenge &challenge) {
    const std::size_t L = photonic.challenge_bits();
    if (challenge.size() != L)
        throw ShapeError("composite challenge has " + std::to_string(challenge.size()) +
                         " bits, photonic device expects " + std::to_string(L));
    if (sram_bits.empty())
        throw ValidationError("composite: SRAM response is empty");
    Bits whitened(L);
    for (std::size_t i = 0; i < L; ++i)
        whitened[i] = challenge.bits[i] ^ sram_bits[i % sram_bits.size()];
    return Challenge(std::move(whitened));
}

Response composite_evaluate(const PufInstance &photonic, const PufInstance &sram,
                            const Challenge &challenge, RandomStream *noise) {
    if (photonic.kind() != PufKind::Photonic || sram.kind() != PufKind::SramWeak)
        throw ValidationError("composite_evaluate: needs a photonic and an SRAM device");
    const Challenge none;
    Bits key = noise ? sram.evaluate(none, *noise).bits : sram.evaluate_noiseless(none).bits;
    auto internal = composite_challenge(photonic, key, challenge);
    return noise ? photonic.evaluate(internal, *noise) : photonic.evaluate_noiseless(internal);
}

} // namespace puflab
