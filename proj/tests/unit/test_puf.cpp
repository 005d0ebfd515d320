// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include <numeric>
#include <thread>

#include <gtest/gtest.h>

#include "puflab/errors.hpp"
#include "puflab/puf.hpp"
#include "support.hpp"

namespace puflab {
namespace {

using fixtures::arbiter;
using fixtures::photonic;
using fixtures::sram;

Challenge random_c(RandomStream &rng, std::size_t L = 64) { return random_challenge(L, rng); }

TEST(Photonic, NoiselessEvaluationIsDeterministic) {
    auto a = photonic(1), b = photonic(1);
    RandomStream rng(3);
    for (int i = 0; i < 20; ++i) {
        auto c = random_c(rng);
        auto ra = a.evaluate_noiseless(c);
        EXPECT_EQ(ra.bits, a.evaluate_noiseless(c).bits);
        EXPECT_EQ(ra.analog, b.evaluate_noiseless(c).analog);
    }
    EXPECT_EQ(a.state_digest(), b.state_digest());
}

TEST(Photonic, QuantizationFollowsThresholds) {
    auto p = photonic(2);
    RandomStream rng(4);
    for (int i = 0; i < 20; ++i) {
        auto r = p.evaluate(random_c(rng), rng);
        ASSERT_EQ(r.bits.size(), 128u);
        for (std::size_t k = 0; k < r.bits.size(); ++k) {
            ASSERT_TRUE(std::isfinite(r.analog[k]));
            ASSERT_EQ(r.bits[k], r.analog[k] >= p.thresholds()[k] ? 1 : 0);
        }
    }
}

TEST(Photonic, DistinctSeedsDifferInAboutHalfTheBits) {
    RandomStream rng(11);
    const auto c = random_c(rng);
    double total = 0;
    const int pairs = 100;
    for (int i = 0; i < pairs; ++i) {
        auto a = photonic(1000 + 2 * i, 100), b = photonic(1001 + 2 * i, 100);
        total += fractional_hamming_distance(a.evaluate_noiseless(c).bits,
                                             b.evaluate_noiseless(c).bits);
    }
    EXPECT_NEAR(total / pairs, 0.5, 0.03);
}

TEST(Photonic, DifferentChallengesWithinOneDeviceDifferInAboutHalf) {
    auto p = photonic(5);
    RandomStream rng(6);
    double total = 0;
    for (int i = 0; i < 200; ++i)
        total += fractional_hamming_distance(p.evaluate_noiseless(random_c(rng)).bits,
                                             p.evaluate_noiseless(random_c(rng)).bits);
    EXPECT_NEAR(total / 200, 0.5, 0.05);
}

TEST(Photonic, RepeatedChallengeErrorRateIsSmallButNonzero) {
    auto p = photonic(7);
    RandomStream rng(8);
    double total = 0;
    int n = 0;
    for (int c = 0; c < 20; ++c) {
        auto ch = random_c(rng);
        auto golden = p.evaluate_noiseless(ch).bits;
        for (int t = 0; t < 100; ++t, ++n)
            total += fractional_hamming_distance(golden, p.evaluate(ch, rng).bits);
    }
    EXPECT_GE(total / n, 0.02);
    EXPECT_LE(total / n, 0.08);
}

TEST(Photonic, CalibrationBalancesResponses) {
    auto p = photonic(9, 1000);
    RandomStream rng(10);
    std::size_t ones = 0, bits = 0;
    for (int i = 0; i < 1000; ++i) {
        auto r = p.evaluate_noiseless(random_c(rng)).bits;
        ones += std::accumulate(r.begin(), r.end(), std::size_t{0});
        bits += r.size();
    }
    EXPECT_NEAR(static_cast<double>(ones) / bits, 0.5, 0.05);
}

TEST(Photonic, RecalibrationIsDeterministic) {
    auto p = photonic(12);
    auto before = p.thresholds();
    EXPECT_EQ(p.calibrate_thresholds(300), before);
    EXPECT_THROW(p.calibrate_thresholds(99), ValidationError);
}

TEST(Photonic, DeadTapThresholdIsItsConstantAndBitIsOne) {
    PufConfig c;
    c.seed = make_seed(13);
    c.photonic.calibration_samples = 100;
    c.photonic.dead_taps = {3};
    auto p = PufInstance::create(c);
    EXPECT_EQ(p.thresholds()[3], 0.0);
    RandomStream rng(1);
    for (int i = 0; i < 20; ++i) {
        auto r = p.evaluate_noiseless(random_c(rng));
        EXPECT_EQ(r.analog[3], 0.0);
        EXPECT_EQ(r.bits[3], 1);
    }
}

TEST(Photonic, DetectedPowerNeverExceedsInput) {
    for (double laser : {1.0, 0.3, 2.5}) {
        PufConfig c;
        c.seed = make_seed(14);
        c.photonic.calibration_samples = 100;
        c.photonic.laser_power = laser;
        auto p = PufInstance::create(c);
        RandomStream rng(2);
        for (int i = 0; i < 200; ++i)
            ASSERT_LE(p.detected_power(random_c(rng)), p.input_power() * (1 + 1e-12));
    }
}

TEST(Photonic, FlippingABitLeavesEarlierStagesUntouched) {
    auto p = photonic(15);
    RandomStream rng(3);
    auto c = random_c(rng);
    auto flipped = c;
    const std::size_t j = 20;
    flipped.bits[j] ^= 1;
    auto t0 = p.stage_trace(c), t1 = p.stage_trace(flipped);
    for (std::size_t s = 0; s < j; ++s)
        EXPECT_EQ(t0[s], t1[s]);
    EXPECT_NE(t0[j], t1[j]);
    EXPECT_NE(t0.back(), t1.back());
}

TEST(Photonic, ResonatorMemoryCarriesBitsIntoTheNextStage) {
    // With a = 0 the bus at stage s + 1 is the ring state stored before stage s
    // was mixed, so bit s cannot reach stage s + 1. Any a > 0 couples them.
    auto trace_delta = [](double a) {
        PufConfig c;
        c.seed = make_seed(16);
        c.photonic.calibration_samples = 100;
        c.photonic.mem_decay = a;
        auto p = PufInstance::create(c);
        RandomStream rng(4);
        double next_stage = 0;
        for (int i = 0; i < 20; ++i) {
            auto ch = random_c(rng);
            const std::size_t j = 10 + static_cast<std::size_t>(i);
            auto fl = ch;
            fl.bits[j] ^= 1;
            auto t0 = p.stage_trace(ch), t1 = p.stage_trace(fl);
            for (std::size_t k = 0; k < t0[j + 1].size(); ++k)
                next_stage += std::abs(t0[j + 1][k] - t1[j + 1][k]);
        }
        return next_stage;
    };
    EXPECT_LT(trace_delta(0.0), 1e-9);
    EXPECT_GT(trace_delta(0.6), 1e-3);
}

TEST(Photonic, SingleBitFlipAvalanche) {
    auto p = photonic(17);
    RandomStream rng(5);
    double total = 0;
    int n = 0;
    for (int i = 0; i < 20; ++i) {
        auto c = random_c(rng);
        auto base = p.evaluate_noiseless(c).bits;
        for (std::size_t j = 0; j < 64; j += 7, ++n) {
            auto f = c;
            f.bits[j] ^= 1;
            total += fractional_hamming_distance(base, p.evaluate_noiseless(f).bits);
        }
    }
    EXPECT_GE(total / n, 0.3);
}

TEST(Photonic, TemperatureShiftPerturbsResponses) {
    auto p = photonic(18);
    EnvironmentState hot = p.environment();
    hot.temperature_delta = 5.0;
    auto q = p.with_environment(hot);
    RandomStream rng(6);
    double d = 0;
    for (int i = 0; i < 50; ++i) {
        auto c = random_c(rng);
        d += fractional_hamming_distance(p.evaluate_noiseless(c).bits, q.evaluate_noiseless(c).bits);
    }
    EXPECT_GT(d / 50, 0.0);
    EXPECT_LT(d / 50, 0.5);
}

TEST(Photonic, EvaluationLeavesNoResidualState) {
    auto p = photonic(19);
    const auto before = p.state_digest();
    RandomStream rng(7);
    auto c = random_c(rng);
    auto first = p.evaluate_noiseless(c);
    for (int i = 0; i < 10; ++i)
        p.evaluate(random_c(rng), rng);
    EXPECT_EQ(p.state_digest(), before);
    EXPECT_EQ(p.evaluate_noiseless(c).analog, first.analog);
}

TEST(Photonic, ConcurrentEvaluatorsAgree) {
    const auto p = photonic(20);
    RandomStream rng(8);
    std::vector<Challenge> cs;
    for (int i = 0; i < 32; ++i)
        cs.push_back(random_c(rng));
    std::vector<Bits> expected;
    for (auto &c : cs)
        expected.push_back(p.evaluate_noiseless(c).bits);
    std::vector<std::vector<Bits>> got(4);
    std::vector<std::thread> pool;
    for (int t = 0; t < 4; ++t)
        pool.emplace_back([&, t] {
            for (auto &c : cs)
                got[t].push_back(p.evaluate_noiseless(c).bits);
        });
    for (auto &th : pool)
        th.join();
    for (auto &g : got)
        EXPECT_EQ(g, expected);
}

TEST(PufConfig, RejectsOutOfRangeParameters) {
    auto expect_named = [](PufConfig c, const std::string &name) {
        try {
            PufInstance::create(c);
            FAIL() << "accepted invalid " << name;
        } catch (const ValidationError &e) {
            EXPECT_NE(std::string(e.what()).find(name), std::string::npos) << e.what();
        }
    };
    PufConfig c;
    c.challenge_bits = 40;
    expect_named(c, "challenge_bits");
    c = {};
    c.response_bits = 0;
    expect_named(c, "response_bits");
    c = {};
    c.photonic.paths = 1;
    expect_named(c, "paths");
    c = {};
    c.photonic.mem_decay = 1.0;
    expect_named(c, "mem_decay");
    c = {};
    c.env.noise_sigma = -0.1;
    expect_named(c, "noise_sigma");
}

TEST(PufConfig, TextRoundTripGivesSameDevice) {
    PufConfig c;
    c.kind = PufKind::ArbiterLinear;
    c.seed = parse_seed("00000000000000000000000000000000000000000000000000000000deadbeef");
    c.response_bits = 16;
    auto text = c.to_kv().to_string();
    auto back = PufConfig::from_kv(KeyValueDoc::parse(text));
    EXPECT_EQ(back.to_kv().to_string(), text);
    EXPECT_EQ(PufInstance::create(back).state_digest(), PufInstance::create(c).state_digest());
    EXPECT_THROW(PufConfig::from_kv(KeyValueDoc::parse("seed = 01\nbogus = 1\n")), ValidationError);
}

TEST(Evaluate, ChallengeLengthMismatchIsShapeError) {
    auto p = arbiter(1);
    EXPECT_THROW(p.evaluate_noiseless(Challenge(Bits(63))), ShapeError);
    RandomStream rng(1);
    EXPECT_THROW(p.evaluate(Challenge(Bits(65)), rng), ShapeError);
}

TEST(Arbiter, WeightsRegenerateFromSeed) {
    const auto seed = make_seed(0x1234);
    PufConfig c;
    c.kind = PufKind::ArbiterLinear;
    c.seed = seed;
    auto p = PufInstance::create(c);
    auto w = p.replica_weights(0);
    ASSERT_EQ(w.size(), 65u);
    fixtures::OracleExpander x("arbiter/weights", Bytes(seed.begin(), seed.end()));
    for (double v : w)
        EXPECT_EQ(v, x.gaussian());
}

TEST(Arbiter, AllZeroChallengeIsSignOfWeightSum) {
    auto p = arbiter(21);
    auto r = p.evaluate_noiseless(Challenge(Bits(64, 0)));
    for (std::size_t k = 0; k < p.response_bits(); ++k) {
        auto w = p.replica_weights(k);
        double sum = std::accumulate(w.begin(), w.end(), 0.0);
        EXPECT_EQ(r.bits[k], sum >= 0 ? 1 : 0);
    }
}

TEST(Arbiter, ParityFeatures) {
    auto phi = parity_features(Challenge(Bits{1, 0, 1}));
    EXPECT_EQ(phi, (std::vector<double>{1, -1, -1, 1}));
    EXPECT_EQ(parity_features(Challenge(Bits(4, 0))), std::vector<double>(5, 1.0));
}

TEST(Arbiter, LinearlySeparableInParitySpace) {
    auto p = arbiter(22);
    RandomStream rng(9);
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (int i = 0; i < 500; ++i) {
        auto c = random_c(rng);
        x.push_back(parity_features(c));
        y.push_back(p.evaluate_noiseless(c).bits[0] ? 1 : -1);
    }
    // Perceptron: converges in finitely many updates iff the data are separable.
    std::vector<double> w(65, 0.0);
    bool clean = false;
    for (int epoch = 0; epoch < 20000 && !clean; ++epoch) {
        clean = true;
        for (std::size_t i = 0; i < x.size(); ++i) {
            double s = std::inner_product(w.begin(), w.end(), x[i].begin(), 0.0);
            if ((s >= 0 ? 1 : -1) != y[i]) {
                for (std::size_t k = 0; k < w.size(); ++k)
                    w[k] += y[i] * x[i][k];
                clean = false;
            }
        }
    }
    EXPECT_TRUE(clean);
}

TEST(Sram, IgnoresChallengeAndHasBoundedFlipRate) {
    auto s = sram(23);
    auto a = s.evaluate_noiseless(Challenge()).bits;
    EXPECT_EQ(a, s.evaluate_noiseless(Challenge(Bits(64, 1))).bits);
    RandomStream rng(10);
    double expected = 0;
    for (std::size_t k = 0; k < s.response_bits(); ++k)
        expected += s.flip_probability(k);
    expected /= static_cast<double>(s.response_bits());
    double observed = 0;
    for (int t = 0; t < 2000; ++t)
        observed += fractional_hamming_distance(a, s.evaluate(Challenge(), rng).bits);
    EXPECT_NEAR(observed / 2000, expected, 0.005);
}

TEST(Composite, ZeroWhiteningIsThePlainChallenge) {
    auto p = photonic(24);
    RandomStream rng(11);
    auto c = random_c(rng);
    EXPECT_EQ(composite_challenge(p, Bits(128, 0), c), c);
    auto s = sram(25);
    auto internal = composite_challenge(p, s.evaluate_noiseless(Challenge()).bits, c);
    EXPECT_EQ(composite_evaluate(p, s, c).bits, p.evaluate_noiseless(internal).bits);
    EXPECT_EQ(composite_evaluate(p, s, c).bits, composite_evaluate(p, s, c).bits);
    EXPECT_THROW(composite_evaluate(s, p, c), ValidationError);
}

TEST(Composite, DifferentSramDevicesDecorrelate) {
    auto p = photonic(26);
    RandomStream rng(12);
    auto c = random_c(rng);
    double total = 0;
    for (int i = 0; i < 100; ++i)
        total += fractional_hamming_distance(composite_evaluate(p, sram(500 + 2 * i), c).bits,
                                             composite_evaluate(p, sram(501 + 2 * i), c).bits);
    EXPECT_NEAR(total / 100, 0.5, 0.05);
}

} // namespace
} // namespace puflab
