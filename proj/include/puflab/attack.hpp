// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "puflab/kv.hpp"
#include "puflab/metrics.hpp"
#include "puflab/puf.hpp"
#include "puflab/random.hpp"

namespace puflab {

/// Draws one challenge of the requested width.
using ChallengeSource = std::function<Challenge(std::size_t width, RandomStream &rng)>;

/// Uniform challenges.
ChallengeSource uniform_challenges();

struct HarvestOptions {
    ChallengeSource source = uniform_challenges();
    /// Skip challenges already harvested in this call.
    bool unique = true;
};

/// Records \p n noisy CRPs. Margins are the noisy analog values minus the
/// device thresholds. \p rng drives both the challenge source and the noise.
std::vector<CrpRecord> harvest_crps(const PufInstance &puf, std::size_t n, RandomStream &rng,
                                    const HarvestOptions &options = {});

/// CRPs observed at the interface of the SRAM-whitened composite device: the
/// recorded challenge is the external one, not the one the photonic core saw.
std::vector<CrpRecord> harvest_composite_crps(const PufInstance &photonic,
                                              const PufInstance &sram, std::size_t n,
                                              RandomStream &rng,
                                              const HarvestOptions &options = {});

struct ModelingAttackConfig {
    std::size_t iterations = 500;
    double learning_rate = 1.0;
    /// Response bit positions to attack. Empty selects the first
    /// min(response width, 16).
    std::vector<std::size_t> target_bits;
};

enum class AttackStatus { Ok, DegenerateTraining };

struct BitAttackResult {
    std::size_t position = 0;
    double train_accuracy = 0;
    double test_accuracy = 0;
    /// All training labels equal; the model is the constant classifier.
    bool degenerate = false;
};

struct ModelingAttackResult {
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    std::string model_kind = "logistic-linear-threshold/parity";
    std::size_t iterations = 0;
    std::vector<BitAttackResult> bits;
    double mean_train_accuracy = 0;
    double mean_test_accuracy = 0;
    AttackStatus status = AttackStatus::Ok;

    KeyValueDoc to_kv() const;
};

/// Fits one linear threshold model per target bit on parity features by
/// full-batch gradient descent on the logistic loss (weights start at zero).
///
/// Throws ValidationError when either set is empty, challenge widths differ,
/// a target bit is out of range, or a test challenge also occurs in the
/// training set.
ModelingAttackResult modeling_attack(const std::vector<CrpRecord> &train,
                                     const std::vector<CrpRecord> &test,
                                     const ModelingAttackConfig &config = {});

/// Weight vector of a single logistic fit, exposed for inspection.
std::vector<double> fit_linear_threshold(const std::vector<std::vector<double>> &features,
                                         const std::vector<std::uint8_t> &labels,
                                         std::size_t iterations, double learning_rate);

} // namespace puflab
