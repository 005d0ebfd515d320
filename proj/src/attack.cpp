// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include "puflab/attack.hpp"

#include <cmath>
#include <set>

#include "puflab/errors.hpp"

namespace puflab {

ChallengeSource uniform_challenges() {
    return [](std::size_t width, RandomStream &rng) { return random_challenge(width, rng); };
}

namespace {

template <typename Eval>
std::vector<CrpRecord> harvest(std::size_t width, std::size_t n, RandomStream &rng,
                               const HarvestOptions &options, Eval eval) {
    if (n == 0)
        throw ValidationError("harvest: n must be at least 1");
    if (!options.source)
        throw ValidationError("harvest: no challenge source");
    std::vector<CrpRecord> out;
    out.reserve(n);
    std::set<Bits> seen;
    std::size_t attempts = 0;
    while (out.size() < n) {
        if (++attempts > 64 * n + 1024)
            throw ValidationError("harvest: challenge source cannot supply " + std::to_string(n) +
                                  " distinct challenges");
        Challenge c = options.source(width, rng);
        if (options.unique && !seen.insert(c.bits).second)
            continue;
        out.push_back(eval(c));
    }
    return out;
}

CrpRecord record_from(std::size_t device, const Challenge &c, const Response &r,
                      const std::vector<double> &thresholds, const EnvironmentState &env) {
    CrpRecord rec;
    rec.device = device;
    rec.challenge = c;
    rec.response = r.bits;
    rec.margins.resize(r.analog.size());
    for (std::size_t k = 0; k < r.analog.size(); ++k)
        rec.margins[k] = r.analog[k] - (thresholds.empty() ? 0.0 : thresholds[k]);
    rec.env = env;
    return rec;
}

} // namespace

std::vector<CrpRecord> harvest_crps(const PufInstance &puf, std::size_t n, RandomStream &rng,
                                    const HarvestOptions &options) {
    return harvest(puf.challenge_bits(), n, rng, options, [&](const Challenge &c) {
        return record_from(0, c, puf.evaluate(c, rng), puf.thresholds(), puf.environment());
    });
}

std::vector<CrpRecord> harvest_composite_crps(const PufInstance &photonic,
                                              const PufInstance &sram, std::size_t n,
                                              RandomStream &rng, const HarvestOptions &options) {
    return harvest(photonic.challenge_bits(), n, rng, options, [&](const Challenge &c) {
        return record_from(0, c, composite_evaluate(photonic, sram, c, &rng),
                           photonic.thresholds(), photonic.environment());
    });
}

// ---------------------------------------------------------------------------

std::vector<double> fit_linear_threshold(const std::vector<std::vector<double>> &features,
                                         const std::vector<std::uint8_t> &labels,
                                         std::size_t iterations, double learning_rate) {
    if (features.empty() || features.size() != labels.size())
        throw ValidationError("fit: feature and label counts differ or are zero");
    const std::size_t n = features.size(), d = features.front().size();
    std::vector<double> w(d, 0.0), grad(d);
    for (std::size_t it = 0; it < iterations; ++it) {
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto &x = features[i];
            double z = 0.0;
            for (std::size_t j = 0; j < d; ++j)
                z += w[j] * x[j];
            const double err = 1.0 / (1.0 + std::exp(-z)) - labels[i];
            for (std::size_t j = 0; j < d; ++j)
                grad[j] += err * x[j];
        }
        for (std::size_t j = 0; j < d; ++j)
            w[j] -= learning_rate * grad[j] / static_cast<double>(n);
    }
    return w;
}

namespace {

std::vector<std::vector<double>> feature_matrix(const std::vector<CrpRecord> &crps) {
    std::vector<std::vector<double>> x;
    x.reserve(crps.size());
    for (const auto &r : crps)
        x.push_back(parity_features(r.challenge));
    return x;
}

std::uint8_t predict(const std::vector<double> &w, const std::vector<double> &x) {
    double z = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j)
        z += w[j] * x[j];
    return z >= 0.0 ? 1 : 0;
}

} // namespace

ModelingAttackResult modeling_attack(const std::vector<CrpRecord> &train,
                                     const std::vector<CrpRecord> &test,
                                     const ModelingAttackConfig &config) {
    if (train.empty() || test.empty())
        throw ValidationError("modeling attack: training and test sets must be non-empty");
    const std::size_t width = train.front().challenge.size();
    std::size_t response_width = train.front().response.size();
    std::set<Bits> train_challenges;
    for (const auto &r : train) {
        if (r.challenge.size() != width)
            throw ValidationError("modeling attack: mixed challenge widths");
        response_width = std::min(response_width, r.response.size());
        train_challenges.insert(r.challenge.bits);
    }
    for (const auto &r : test) {
        if (r.challenge.size() != width)
            throw ValidationError("modeling attack: mixed challenge widths");
        response_width = std::min(response_width, r.response.size());
        if (train_challenges.count(r.challenge.bits))
            throw ValidationError("modeling attack: test challenge also in training set");
    }

    std::vector<std::size_t> targets = config.target_bits;
    if (targets.empty())
        for (std::size_t k = 0; k < std::min<std::size_t>(response_width, 16); ++k)
            targets.push_back(k);
    for (auto k : targets)
        if (k >= response_width)
            throw ValidationError("modeling attack: target bit " + std::to_string(k) +
                                  " beyond response width " + std::to_string(response_width));

    const auto x_train = feature_matrix(train);
    const auto x_test = feature_matrix(test);

    ModelingAttackResult result;
    result.train_size = train.size();
    result.test_size = test.size();
    result.iterations = config.iterations;
    for (auto k : targets) {
        std::vector<std::uint8_t> y(train.size());
        std::size_t ones = 0;
        for (std::size_t i = 0; i < train.size(); ++i)
            ones += y[i] = train[i].response[k] & 1u;

        BitAttackResult bit;
        bit.position = k;
        std::size_t train_hits = 0, test_hits = 0;
        if (ones == 0 || ones == train.size()) {
            bit.degenerate = true;
            result.status = AttackStatus::DegenerateTraining;
            const std::uint8_t constant = ones ? 1 : 0;
            train_hits = train.size();
            for (const auto &r : test)
                test_hits += (r.response[k] & 1u) == constant;
        } else {
            auto w = fit_linear_threshold(x_train, y, config.iterations, config.learning_rate);
            for (std::size_t i = 0; i < train.size(); ++i)
                train_hits += predict(w, x_train[i]) == y[i];
            for (std::size_t i = 0; i < test.size(); ++i)
                test_hits += predict(w, x_test[i]) == (test[i].response[k] & 1u);
        }
        bit.train_accuracy = static_cast<double>(train_hits) / static_cast<double>(train.size());
        bit.test_accuracy = static_cast<double>(test_hits) / static_cast<double>(test.size());
        result.mean_train_accuracy += bit.train_accuracy;
        result.mean_test_accuracy += bit.test_accuracy;
        result.bits.push_back(bit);
    }
    result.mean_train_accuracy /= static_cast<double>(targets.size());
    result.mean_test_accuracy /= static_cast<double>(targets.size());
    return result;
}

KeyValueDoc ModelingAttackResult::to_kv() const {
    KeyValueDoc doc;
    doc.set("model_kind", model_kind);
    doc.set("status", status == AttackStatus::Ok ? "ok" : "degenerate-training");
    doc.set("train_size", train_size);
    doc.set("test_size", test_size);
    doc.set("iterations", iterations);
    doc.set("mean_train_accuracy", mean_train_accuracy);
    doc.set("mean_test_accuracy", mean_test_accuracy);
    for (const auto &b : bits) {
        const std::string p = "bit." + std::to_string(b.position) + ".";
        doc.set(p + "train_accuracy", b.train_accuracy);
        doc.set(p + "test_accuracy", b.test_accuracy);
        if (b.degenerate)
            doc.set(p + "degenerate", "true");
    }
    return doc;
}

} // namespace puflab
