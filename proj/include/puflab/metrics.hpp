// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "puflab/bits.hpp"
#include "puflab/kv.hpp"
#include "puflab/puf.hpp"
#include "puflab/random.hpp"

namespace puflab {

/// Devices x (challenge index x bit position), values in {0, 1}.
class ResponseMatrix {
  public:
    ResponseMatrix() = default;
    ResponseMatrix(std::size_t devices, std::size_t challenges, std::size_t bits_per_response);

    /// Builds a matrix from equal-length rows; bits_per_response must divide
    /// the row length.
    static ResponseMatrix from_rows(const std::vector<Bits> &rows, std::size_t bits_per_response);

    std::size_t devices() const { return devices_; }
    std::size_t challenges() const { return challenges_; }
    std::size_t bits_per_response() const { return bits_; }
    std::size_t columns() const { return challenges_ * bits_; }
    bool empty() const { return devices_ == 0 || columns() == 0; }

    std::uint8_t at(std::size_t device, std::size_t column) const {
        return data_[device * columns() + column];
    }
    void set(std::size_t device, std::size_t column, std::uint8_t bit) {
        data_[device * columns() + column] = bit & 1u;
    }
    std::span<const std::uint8_t> row(std::size_t device) const {
        return std::span(data_).subspan(device * columns(), columns());
    }
    /// Bits of one response (one device, one challenge).
    std::span<const std::uint8_t> response(std::size_t device, std::size_t challenge) const {
        return std::span(data_).subspan(device * columns() + challenge * bits_, bits_);
    }
    void set_response(std::size_t device, std::size_t challenge, std::span<const std::uint8_t> bits);

    bool same_shape(const ResponseMatrix &o) const {
        return devices_ == o.devices_ && challenges_ == o.challenges_ && bits_ == o.bits_;
    }

  private:
    std::size_t devices_ = 0, challenges_ = 0, bits_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Shannon entropy of a Bernoulli(p) bit in bits; H(0) = H(1) = 0.
double binary_entropy(double p);

struct MetricsReport {
    std::size_t devices = 0;
    std::size_t columns = 0;
    std::size_t reevaluations = 0;
    double uniformity = 0;                 // mean fraction of ones
    std::vector<double> device_uniformity; // per device
    std::optional<double> uniqueness;      // needs >= 2 devices
    std::optional<double> reliability;     // needs >= 1 re-evaluation
    std::vector<double> bit_probability;   // p_j across devices
    std::vector<double> bit_entropy;       // H(p_j)
    std::vector<double> bit_error_rate;    // per column, empty without re-evaluations
    std::optional<double> mean_entropy;    // needs >= 2 devices
    double decision_threshold = 0.25;
    std::optional<double> far;
    std::optional<double> frr;

    /// Flat key-value summary (per-bit vectors are left to per_bit_csv).
    KeyValueDoc to_kv() const;
    /// column,p,entropy[,ber] rows.
    std::string per_bit_csv() const;
};

/// Population statistics. \p reevaluations are noisy re-reads of the same
/// devices and challenges as the golden (noiseless reference) matrix.
MetricsReport compute_metrics(const ResponseMatrix &golden,
                              std::span<const ResponseMatrix> reevaluations = {},
                              double decision_threshold = 0.25);

struct DecisionRates {
    double far = 0; // impostor distances <= threshold
    double frr = 0; // genuine distances > threshold
};

DecisionRates decision_rates(std::span<const double> genuine, std::span<const double> impostor,
                             double hd_threshold);

/// Genuine (reference vs re-read, same device and challenge) and impostor
/// (different devices, same challenge) fractional distances per response.
std::vector<double> genuine_distances(const ResponseMatrix &golden,
                                      std::span<const ResponseMatrix> reevaluations);
std::vector<double> impostor_distances(const ResponseMatrix &golden);

// ---------------------------------------------------------------------------
// Reliability / bit-aliasing CRP filtering

struct CrpRecord {
    std::size_t device = 0;
    Challenge challenge;
    Bits response;
    /// analog - threshold per response bit; the bit is 1 iff margin >= 0.
    std::vector<double> margins;
    EnvironmentState env;
};

/// Builds a record from a noiseless evaluation (margins relative to the
/// device thresholds).
CrpRecord make_crp_record(const PufInstance &puf, std::size_t device, const Challenge &challenge);

struct FilterBand {
    double delta_min = 0.0;
    double delta_max = std::numeric_limits<double>::infinity();

    void validate() const;
    bool keeps(double margin) const;
    bool operator==(const FilterBand &) const = default;
};

enum class FilterStatus { Ok, EmptyResult };

struct KeptCrp {
    std::size_t source = 0;              // index into the input list
    std::vector<std::size_t> positions;  // kept response bit positions
};

struct FilterReport {
    FilterStatus status = FilterStatus::Ok;
    std::size_t total_bits = 0;
    std::size_t kept_bits = 0;
    std::size_t kept_crps = 0;
    double retention = 0;
    /// 1 - mean Gaussian flip probability Phi(-|margin| / sigma) of kept bits.
    std::optional<double> predicted_reliability;
    /// Mean H(p) over (challenge, position) columns kept by >= 2 devices.
    std::optional<double> predicted_entropy;
};

struct FilterResult {
    std::vector<KeptCrp> kept;
    FilterReport report;
};

/// Keeps bit k of a record iff delta_min <= |margin_k| <= delta_max. Bits
/// below delta_min sit too close to the threshold to be reliable; bits above
/// delta_max are far enough out that they tend to repeat across devices.
FilterResult filter_crps(std::span<const CrpRecord> crps, const FilterBand &band);

/// Golden responses, margins and noisy re-reads for a device population.
struct PopulationSample {
    ResponseMatrix golden;
    std::vector<double> margins; // same layout as golden
    std::vector<ResponseMatrix> reevaluations;
    double noise_sigma = 0;

    double margin(std::size_t device, std::size_t column) const {
        return margins[device * golden.columns() + column];
    }
};

/// Each device draws its noise from noise.fork(device index).
PopulationSample sample_population(std::span<const PufInstance> devices,
                                   std::span<const Challenge> challenges, std::size_t trials,
                                   const RandomStream &noise);

struct SweepRow {
    FilterBand band;
    std::size_t kept_bits = 0;
    double retention = 0;
    std::optional<double> reliability;  // measured over re-evaluations
    std::optional<double> mean_entropy; // over columns kept by >= 2 devices
    std::optional<double> predicted_reliability;
};

std::vector<SweepRow> sweep_filter(const PopulationSample &sample,
                                   std::span<const FilterBand> bands);

/// The grid used when no band file is given.
std::vector<FilterBand> default_filter_grid();

std::string sweep_csv(std::span<const SweepRow> rows);

} // namespace puflab
