// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include "puflab/metrics.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "puflab/errors.hpp"

namespace puflab {

ResponseMatrix::ResponseMatrix(std::size_t devices, std::size_t challenges,
                               std::size_t bits_per_response)
    : devices_(devices), challenges_(challenges), bits_(bits_per_response),
      data_(devices * challenges * bits_per_response, 0) {}

ResponseMatrix ResponseMatrix::from_rows(const std::vector<Bits> &rows,
                                         std::size_t bits_per_response) {
    if (rows.empty() || rows[0].empty())
        throw ValidationError("response matrix is empty");
    if (bits_per_response == 0 || rows[0].size() % bits_per_response != 0)
        throw ValidationError("row length is not a multiple of bits_per_response");
    ResponseMatrix m(rows.size(), rows[0].size() / bits_per_response, bits_per_response);
    for (std::size_t d = 0; d < rows.size(); ++d) {
        if (rows[d].size() != rows[0].size())
            throw ValidationError("response matrix is not rectangular (row " +
                                  std::to_string(d) + ")");
        for (std::size_t c = 0; c < rows[d].size(); ++c) {
            if (rows[d][c] > 1)
                throw ValidationError("response matrix values must be 0 or 1");
            m.data_[d * m.columns() + c] = rows[d][c];
        }
    }
    return m;
}

void ResponseMatrix::set_response(std::size_t device, std::size_t challenge,
                                  std::span<const std::uint8_t> bits) {
    if (bits.size() != bits_)
        throw ShapeError("response width mismatch");
    for (std::size_t k = 0; k < bits_; ++k)
        data_[device * columns() + challenge * bits_ + k] = bits[k] & 1u;
}

double binary_entropy(double p) {
    if (p <= 0.0 || p >= 1.0)
        return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

// ---------------------------------------------------------------------------

std::vector<double> genuine_distances(const ResponseMatrix &golden,
                                      std::span<const ResponseMatrix> reevaluations) {
    std::vector<double> out;
    for (const auto &r : reevaluations) {
        if (!r.same_shape(golden))
            throw ValidationError("re-evaluation shape differs from the reference matrix");
        for (std::size_t d = 0; d < golden.devices(); ++d)
            for (std::size_t c = 0; c < golden.challenges(); ++c)
                out.push_back(fractional_hamming_distance(golden.response(d, c), r.response(d, c)));
    }
    return out;
}

std::vector<double> impostor_distances(const ResponseMatrix &golden) {
    std::vector<double> out;
    for (std::size_t a = 0; a < golden.devices(); ++a)
        for (std::size_t b = a + 1; b < golden.devices(); ++b)
            for (std::size_t c = 0; c < golden.challenges(); ++c)
                out.push_back(
                    fractional_hamming_distance(golden.response(a, c), golden.response(b, c)));
    return out;
}

DecisionRates decision_rates(std::span<const double> genuine, std::span<const double> impostor,
                             double hd_threshold) {
    if (!(hd_threshold >= 0.0 && hd_threshold <= 1.0))
        throw ValidationError("hd_threshold: must be in [0, 1]");
    if (genuine.empty() || impostor.empty())
        throw ValidationError("decision_rates: distance samples must be non-empty");
    std::size_t rejected = 0, accepted = 0;
    for (double g : genuine)
        rejected += g > hd_threshold;
    for (double i : impostor)
        accepted += i <= hd_threshold;
    return {static_cast<double>(accepted) / static_cast<double>(impostor.size()),
            static_cast<double>(rejected) / static_cast<double>(genuine.size())};
}

MetricsReport compute_metrics(const ResponseMatrix &golden,
                              std::span<const ResponseMatrix> reevaluations,
                              double decision_threshold) {
    if (golden.empty())
        throw ValidationError("compute_metrics: empty response matrix");
    const std::size_t D = golden.devices();
    const std::size_t C = golden.columns();
    const auto dD = static_cast<double>(D);
    const auto dC = static_cast<double>(C);

    MetricsReport rep;
    rep.devices = D;
    rep.columns = C;
    rep.reevaluations = reevaluations.size();
    rep.decision_threshold = decision_threshold;

    // Counts are accumulated as integers and divided once so the rates are
    // the correctly rounded values of the underlying fractions.
    std::size_t ones = 0;
    rep.device_uniformity.resize(D);
    for (std::size_t d = 0; d < D; ++d) {
        std::size_t dev_ones = 0;
        for (auto b : golden.row(d))
            dev_ones += b;
        rep.device_uniformity[d] = static_cast<double>(dev_ones) / dC;
        ones += dev_ones;
    }
    rep.uniformity = static_cast<double>(ones) / (dD * dC);

    rep.bit_probability.resize(C);
    rep.bit_entropy.resize(C);
    for (std::size_t j = 0; j < C; ++j) {
        std::size_t col_ones = 0;
        for (std::size_t d = 0; d < D; ++d)
            col_ones += golden.at(d, j);
        rep.bit_probability[j] = static_cast<double>(col_ones) / dD;
        rep.bit_entropy[j] = binary_entropy(rep.bit_probability[j]);
    }

    if (D >= 2) {
        std::size_t diffs = 0;
        for (std::size_t a = 0; a < D; ++a)
            for (std::size_t b = a + 1; b < D; ++b)
                diffs += hamming_distance(golden.row(a), golden.row(b));
        const double pairs = dD * (dD - 1) / 2;
        rep.uniqueness = static_cast<double>(diffs) / (pairs * dC);
        double sum = 0;
        for (double h : rep.bit_entropy)
            sum += h;
        rep.mean_entropy = sum / dC;
    }

    if (!reevaluations.empty()) {
        std::vector<std::size_t> col_errors(C, 0);
        std::size_t errors = 0;
        for (const auto &r : reevaluations) {
            if (!r.same_shape(golden))
                throw ValidationError("re-evaluation shape differs from the reference matrix");
            for (std::size_t d = 0; d < D; ++d)
                for (std::size_t j = 0; j < C; ++j)
                    if (r.at(d, j) != golden.at(d, j)) {
                        ++col_errors[j];
                        ++errors;
                    }
        }
        const auto trials = static_cast<double>(reevaluations.size());
        rep.reliability = 1.0 - static_cast<double>(errors) / (trials * dD * dC);
        rep.bit_error_rate.resize(C);
        for (std::size_t j = 0; j < C; ++j)
            rep.bit_error_rate[j] = static_cast<double>(col_errors[j]) / (trials * dD);
        if (D >= 2) {
            auto rates = decision_rates(genuine_distances(golden, reevaluations),
                                        impostor_distances(golden), decision_threshold);
            rep.far = rates.far;
            rep.frr = rates.frr;
        }
    }
    return rep;
}

KeyValueDoc MetricsReport::to_kv() const {
    KeyValueDoc doc;
    doc.set("devices", devices);
    doc.set("columns", columns);
    doc.set("reevaluations", reevaluations);
    doc.set("uniformity", uniformity);
    if (uniqueness)
        doc.set("uniqueness", *uniqueness);
    if (reliability) {
        doc.set("reliability", *reliability);
        doc.set("bit_error_rate", 1.0 - *reliability);
    }
    if (mean_entropy)
        doc.set("bit_aliasing_entropy", *mean_entropy);
    doc.set("decision_threshold", decision_threshold);
    if (far)
        doc.set("far", *far);
    if (frr)
        doc.set("frr", *frr);
    return doc;
}

std::string MetricsReport::per_bit_csv() const {
    std::ostringstream out;
    out << "column,p,entropy" << (bit_error_rate.empty() ? "" : ",ber") << "\n";
    for (std::size_t j = 0; j < bit_probability.size(); ++j) {
        out << j << ',' << format_double(bit_probability[j]) << ','
            << format_double(bit_entropy[j]);
        if (!bit_error_rate.empty())
            out << ',' << format_double(bit_error_rate[j]);
        out << "\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Filtering

CrpRecord make_crp_record(const PufInstance &puf, std::size_t device,
                          const Challenge &challenge) {
    CrpRecord rec;
    rec.device = device;
    rec.challenge = challenge;
    auto r = puf.evaluate_noiseless(challenge);
    rec.response = r.bits;
    rec.margins.resize(r.analog.size());
    for (std::size_t k = 0; k < r.analog.size(); ++k)
        rec.margins[k] = r.analog[k] - puf.thresholds()[k];
    rec.env = puf.environment();
    return rec;
}

void FilterBand::validate() const {
    if (!(delta_min >= 0.0) || !(delta_min < delta_max))
        throw ValidationError("filter band: need 0 <= delta_min < delta_max");
}

bool FilterBand::keeps(double margin) const {
    const double m = std::abs(margin);
    return m >= delta_min && m <= delta_max;
}

namespace {

double gaussian_flip_probability(double margin, double sigma) {
    if (sigma <= 0)
        return 0.0;
    return 0.5 * std::erfc(std::abs(margin) / (sigma * M_SQRT2));
}

/// Accumulates kept bits per column across devices and reports the mean
/// entropy over columns seen by at least two devices.
class AliasingTally {
  public:
    void add(const std::string &column, std::uint8_t bit) {
        auto &c = counts_[column];
        ++c.first;
        c.second += bit;
    }
    std::optional<double> mean_entropy() const {
        double sum = 0;
        std::size_t n = 0;
        for (const auto &[key, c] : counts_) {
            if (c.first < 2)
                continue;
            sum += binary_entropy(static_cast<double>(c.second) / static_cast<double>(c.first));
            ++n;
        }
        if (n == 0)
            return std::nullopt;
        return sum / static_cast<double>(n);
    }

  private:
    std::map<std::string, std::pair<std::size_t, std::size_t>> counts_;
};

std::string column_key(const Bytes &challenge, std::size_t position) {
    std::string key(challenge.begin(), challenge.end());
    key += '/';
    key += std::to_string(position);
    return key;
}

} // namespace

FilterResult filter_crps(std::span<const CrpRecord> crps, const FilterBand &band) {
    band.validate();
    if (crps.empty())
        throw ValidationError("filter_crps: no CRPs given");
    FilterResult out;
    auto &rep = out.report;
    AliasingTally tally;
    double flip_sum = 0;
    for (std::size_t i = 0; i < crps.size(); ++i) {
        const auto &rec = crps[i];
        if (rec.margins.size() != rec.response.size() || rec.margins.empty())
            throw ValidationError("filter_crps: record " + std::to_string(i) +
                                  " has no analog margins");
        const auto cbytes = pack_bits(rec.challenge.bits);
        KeptCrp kept{i, {}};
        for (std::size_t k = 0; k < rec.margins.size(); ++k) {
            ++rep.total_bits;
            if (!band.keeps(rec.margins[k]))
                continue;
            kept.positions.push_back(k);
            flip_sum += gaussian_flip_probability(rec.margins[k], rec.env.noise_sigma);
            tally.add(column_key(cbytes, k), rec.response[k]);
        }
        rep.kept_bits += kept.positions.size();
        if (!kept.positions.empty())
            out.kept.push_back(std::move(kept));
    }
    rep.kept_crps = out.kept.size();
    rep.retention = static_cast<double>(rep.kept_bits) / static_cast<double>(rep.total_bits);
    if (rep.kept_bits == 0) {
        rep.status = FilterStatus::EmptyResult;
        return out;
    }
    rep.predicted_reliability = 1.0 - flip_sum / static_cast<double>(rep.kept_bits);
    rep.predicted_entropy = tally.mean_entropy();
    return out;
}

PopulationSample sample_population(std::span<const PufInstance> devices,
                                   std::span<const Challenge> challenges, std::size_t trials,
                                   const RandomStream &noise) {
    if (devices.empty() || challenges.empty())
        throw ValidationError("sample_population: need at least one device and challenge");
    const std::size_t M = devices[0].response_bits();
    for (const auto &d : devices)
        if (d.response_bits() != M)
            throw ValidationError("sample_population: devices differ in response width");
    PopulationSample s;
    s.golden = ResponseMatrix(devices.size(), challenges.size(), M);
    s.margins.resize(devices.size() * challenges.size() * M);
    s.reevaluations.assign(trials, ResponseMatrix(devices.size(), challenges.size(), M));
    s.noise_sigma = devices[0].environment().noise_sigma;
    for (std::size_t d = 0; d < devices.size(); ++d) {
        auto stream = noise.fork(d);
        for (std::size_t c = 0; c < challenges.size(); ++c) {
            auto rec = make_crp_record(devices[d], d, challenges[c]);
            s.golden.set_response(d, c, rec.response);
            std::copy(rec.margins.begin(), rec.margins.end(),
                      s.margins.begin() + static_cast<long>((d * challenges.size() + c) * M));
            for (std::size_t t = 0; t < trials; ++t)
                s.reevaluations[t].set_response(d, c,
                                                devices[d].evaluate(challenges[c], stream).bits);
        }
    }
    return s;
}

std::vector<SweepRow> sweep_filter(const PopulationSample &sample,
                                   std::span<const FilterBand> bands) {
    if (bands.empty())
        throw ValidationError("sweep_filter: band grid is empty");
    const auto &g = sample.golden;
    const std::size_t D = g.devices(), C = g.columns();
    std::vector<SweepRow> rows;
    for (const auto &band : bands) {
        band.validate();
        SweepRow row{band, 0, 0, std::nullopt, std::nullopt, std::nullopt};
        std::size_t errors = 0;
        double flip_sum = 0;
        std::vector<std::pair<std::size_t, std::size_t>> col_counts(C, {0, 0});
        for (std::size_t d = 0; d < D; ++d) {
            for (std::size_t j = 0; j < C; ++j) {
                const double m = sample.margin(d, j);
                if (!band.keeps(m))
                    continue;
                ++row.kept_bits;
                flip_sum += gaussian_flip_probability(m, sample.noise_sigma);
                ++col_counts[j].first;
                col_counts[j].second += g.at(d, j);
                for (const auto &r : sample.reevaluations)
                    errors += r.at(d, j) != g.at(d, j);
            }
        }
        row.retention = static_cast<double>(row.kept_bits) / static_cast<double>(D * C);
        if (row.kept_bits > 0) {
            row.predicted_reliability = 1.0 - flip_sum / static_cast<double>(row.kept_bits);
            if (!sample.reevaluations.empty())
                row.reliability =
                    1.0 - static_cast<double>(errors) /
                              static_cast<double>(row.kept_bits * sample.reevaluations.size());
            double sum = 0;
            std::size_t n = 0;
            for (const auto &[kept, ones] : col_counts) {
                if (kept < 2)
                    continue;
                sum += binary_entropy(static_cast<double>(ones) / static_cast<double>(kept));
                ++n;
            }
            if (n)
                row.mean_entropy = sum / static_cast<double>(n);
        }
        rows.push_back(row);
    }
    return rows;
}

std::vector<FilterBand> default_filter_grid() {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<FilterBand> grid;
    for (double hi : {0.25, 0.5, 1.0, inf})
        for (double lo : {0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.08, 0.1})
            grid.push_back({lo, hi});
    return grid;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
    auto opt = [](const std::optional<double> &v) { return v ? format_double(*v) : ""; };
    std::ostringstream out;
    out << "delta_min,delta_max,kept_bits,retention,reliability,predicted_reliability,"
           "mean_entropy\n";
    for (const auto &r : rows)
        out << format_double(r.band.delta_min) << ',' << format_double(r.band.delta_max) << ','
            << r.kept_bits << ',' << format_double(r.retention) << ',' << opt(r.reliability)
            << ',' << opt(r.predicted_reliability) << ',' << opt(r.mean_entropy) << "\n";
    return out.str();
}

} // namespace puflab
