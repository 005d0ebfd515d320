// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <bit>

#include <gtest/gtest.h>

#include "puflab/accelerator.hpp"
#include "puflab/errors.hpp"
#include "puflab/keys.hpp"
#include "support.hpp"

namespace puflab {
namespace {

SecretKey fresh_key(std::uint64_t seed) {
    RandomStream rng(seed);
    auto response = rng.bits(640);
    return fe_generate(response, rng).key;
}

bool contains(const Bytes &haystack, std::span<const std::uint8_t> needle) {
    return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) !=
           haystack.end();
}


TEST(FuzzyExtractor, DefaultGeometry) {
    FuzzyExtractor fe;
    EXPECT_EQ(fe.response_bits(), 640u);
    EXPECT_EQ(fe.code().k(), 128u);
    RepetitionCode code(5, 128);
    EXPECT_EQ(code.n(), 5u * 128u);
    EXPECT_EQ(code.correctable(), 2u);
    RandomStream rng(1);
    auto msg = rng.bits(128);
    EXPECT_EQ(code.decode(code.encode(msg)), msg);
}

TEST(FuzzyExtractor, GenerateIsDeterministic) {
    RandomStream src(2);
    auto response = src.bits(640);
    RandomStream r1(3), r2(3);
    auto a = fe_generate(response, r1), b = fe_generate(response, r2);
    EXPECT_TRUE(a.key == b.key);
    EXPECT_EQ(a.helper, b.helper);
}

TEST(FuzzyExtractor, HelperXorResponseIsACodeword) {
    RandomStream rng(4);
    auto response = rng.bits(640);
    auto e = fe_generate(response, rng);
    auto word = xor_bits(e.helper.code_offset, response);
    RepetitionCode code(5, 128);
    EXPECT_EQ(code.encode(code.decode(word)), word);
}

TEST(FuzzyExtractor, ExhaustiveCorrectionBoundaryOnOneBlock) {
    RandomStream rng(5);
    auto response = rng.bits(640);
    auto e = fe_generate(response, rng);
    const std::size_t block = rng.uniform_below(128);
    int reproduced = 0, detected = 0, patterns = 0;
    for (unsigned mask = 0; mask < 32; ++mask) {
        const int weight = std::popcount(mask);
        Bits noisy = response;
        for (std::size_t i = 0; i < 5; ++i)
            if (mask >> i & 1u)
                noisy[5 * block + i] ^= 1;
        auto r = fe_reproduce(noisy, e.helper);
        if (weight <= 2) {
            ++patterns;
            reproduced += r.ok() && *r.key == e.key;
        } else if (weight == 3) {
            detected += !r.ok();
        }
    }
    EXPECT_EQ(patterns, 16);  // 1 + C(5,1) + C(5,2)
    EXPECT_EQ(reproduced, 16);
    EXPECT_EQ(detected, 10);  // C(5,3)
}

TEST(FuzzyExtractor, TwoErrorsInEveryBlockStillReproduce) {
    RandomStream rng(6);
    auto response = rng.bits(640);
    auto e = fe_generate(response, rng);
    Bits noisy = response;
    for (std::size_t b = 0; b < 128; ++b) {
        noisy[5 * b + rng.uniform_below(5)] ^= 1;
        noisy[5 * b + (b % 5)] ^= 1;
    }
    auto r = fe_reproduce(noisy, e.helper);
    ASSERT_TRUE(r.ok());
    EXPECT_TRUE(*r.key == e.key);
}

TEST(FuzzyExtractor, LengthMismatchAndCorruptHelper) {
    RandomStream rng(7);
    EXPECT_THROW(fe_generate(rng.bits(639), rng), ValidationError);
    auto response = rng.bits(640);
    auto e = fe_generate(response, rng);
    EXPECT_THROW(fe_reproduce(rng.bits(641), e.helper), ValidationError);
    auto wire = e.helper.serialize();
    EXPECT_EQ(HelperData::parse(wire), e.helper);
    wire.push_back(0);
    EXPECT_THROW(HelperData::parse(wire), ValidationError);
    auto forged = e.helper;
    forged.key_check[0] ^= 1;
    EXPECT_FALSE(fe_reproduce(response, forged).ok());
}

TEST(FuzzyExtractor, DeviceKeyFromSramRecovers) {
    PufConfig c;
    c.kind = PufKind::SramWeak;
    c.seed = make_seed(8);
    c.response_bits = 640;
    auto s = PufInstance::create(c);
    FuzzyExtractor fe;
    RandomStream noise(9), randomness(10);
    auto e = enroll_device_key(s, fe, noise, randomness);
    int ok = 0;
    for (int i = 0; i < 20; ++i) {
        auto r = recover_device_key(s, fe, e.helper, noise);
        ok += r.ok() && *r.key == e.key;
    }
    EXPECT_EQ(ok, 20);
    auto small = fixtures::sram(11);
    EXPECT_THROW(enroll_device_key(small, fe, noise, randomness), ConfigError);
}

TEST(SecretKey, CloneComparesEqualAndFingerprintIsStable) {
    auto k = fresh_key(12);
    auto c = k.clone();
    EXPECT_TRUE(k == c);
    EXPECT_EQ(k.fingerprint(), c.fingerprint());
    EXPECT_FALSE(k == fresh_key(13));
}

// ---------------------------------------------------------------------------
// Encrypted accelerator

std::vector<double> reference_forward(const ToyNetwork &net, std::vector<double> x) {
    for (const auto &l : net.layers) {
        std::vector<double> y(l.rows);
        for (std::size_t r = 0; r < l.rows; ++r) {
            double acc = 0.0;
            for (std::size_t c = 0; c < l.cols; ++c)
                acc += l.weights[r * l.cols + c] * x[c];
            y[r] = acc > 0.0 ? acc : 0.0;
        }
        x = y;
    }
    return x;
}

bool bit_equal(const std::vector<double> &a, const std::vector<double> &b) {
    if (a.size() != b.size())
        return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i]))
            return false;
    return true;
}

ToyNetwork random_network(RandomStream &rng, std::vector<std::size_t> dims) {
    ToyNetwork net;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        DenseLayer l{dims[i + 1], dims[i], {}};
        for (std::size_t k = 0; k < l.rows * l.cols; ++k)
            l.weights.push_back(rng.gaussian());
        net.layers.push_back(l);
    }
    return net;
}

TEST(Accelerator, IdentityNetworkAppliesTheNonlinearity) {
    auto key = fresh_key(20);
    RandomStream rng(21);
    NeuralAccelerator acc(key.clone(), RandomStream(22));
    DenseLayer id{4, 4, std::vector<double>(16, 0.0)};
    for (int i = 0; i < 4; ++i)
        id.weights[i * 5] = 1.0;
    acc.load_network(seal_network(key, ToyNetwork{{id}}, rng));
    std::vector<double> v{1.5, -2.0, 0.0, 3.25};
    auto out = open_output(key, acc.execute_network(seal_input(key, v, rng)));
    EXPECT_EQ(out, (std::vector<double>{1.5, 0.0, 0.0, 3.25}));
}

TEST(Accelerator, TwoLayerNetworkMatchesPlaintextEvaluator) {
    auto key = fresh_key(23);
    RandomStream rng(24);
    auto net = random_network(rng, {4, 4, 4});
    NeuralAccelerator acc(key.clone(), RandomStream(25));
    acc.load_network(seal_network(key, net, rng));
    std::vector<double> v{0.25, -1.0, 2.0, 0.5};
    auto out = open_output(key, acc.execute_network(seal_input(key, v, rng)));
    EXPECT_TRUE(bit_equal(out, reference_forward(net, v)));
}

TEST(Accelerator, RepeatedExecutionUsesFreshNonces) {
    auto key = fresh_key(26);
    RandomStream rng(27);
    NeuralAccelerator acc(key.clone(), RandomStream(28));
    acc.load_network(seal_network(key, random_network(rng, {3, 2}), rng));
    auto input = seal_input(key, std::vector<double>{1, 2, 3}, rng);
    auto a = acc.execute_network(input), b = acc.execute_network(input);
    EXPECT_NE(a.nonce, b.nonce);
    EXPECT_NE(a.ciphertext, b.ciphertext);
    EXPECT_EQ(open_output(key, a), open_output(key, b));
}

TEST(Accelerator, TamperedNetworkIsRejectedAndNothingLoaded) {
    auto key = fresh_key(29);
    RandomStream rng(30);
    NeuralAccelerator acc(key.clone(), RandomStream(31));
    auto blob = seal_network(key, random_network(rng, {2, 2}), rng);
    for (std::size_t bit = 0; bit < blob.ciphertext.size() * 8; bit += 13) {
        auto bad = blob;
        bad.ciphertext[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        EXPECT_THROW(acc.load_network(bad), TamperError);
    }
    EXPECT_FALSE(acc.loaded());
    EXPECT_THROW(acc.execute_network(seal_input(key, std::vector<double>{1, 2}, rng)),
                 ProtocolStateError);
}

TEST(Accelerator, FailedLoadKeepsThePreviousNetwork) {
    auto key = fresh_key(32);
    RandomStream rng(33);
    NeuralAccelerator acc(key.clone(), RandomStream(34));
    auto net = random_network(rng, {2, 3});
    acc.load_network(seal_network(key, net, rng));
    auto bad = seal_network(key, random_network(rng, {2, 2}), rng);
    bad.tag[0] ^= 1;
    EXPECT_THROW(acc.load_network(bad), TamperError);
    std::vector<double> v{1.0, -0.5};
    EXPECT_TRUE(bit_equal(open_output(key, acc.execute_network(seal_input(key, v, rng))),
                          reference_forward(net, v)));
}

TEST(Accelerator, InputErrors) {
    auto key = fresh_key(35);
    RandomStream rng(36);
    NeuralAccelerator acc(key.clone(), RandomStream(37));
    acc.load_network(seal_network(key, random_network(rng, {3, 1}), rng));
    auto input = seal_input(key, std::vector<double>{1, 2, 3}, rng);
    auto bad = input;
    bad.ciphertext.back() ^= 0x80;
    EXPECT_THROW(acc.execute_network(bad), TamperError);
    EXPECT_THROW(acc.execute_network(seal_input(key, std::vector<double>{1, 2}, rng)),
                 ValidationError);
    // An input sealed under another key, or labeled as a network, never opens.
    EXPECT_THROW(acc.execute_network(seal_input(fresh_key(38), std::vector<double>{1, 2, 3}, rng)),
                 TamperError);
    EXPECT_THROW(acc.execute_network(seal_network(key, random_network(rng, {3, 1}), rng)),
                 TamperError);
}

TEST(Accelerator, MalformedSchemaIsAFormatError) {
    auto key = fresh_key(39);
    RandomStream rng(40);
    NeuralAccelerator acc(key.clone(), RandomStream(41));
    Bytes junk{0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 2, 1, 2, 3};
    std::array<std::uint8_t, 12> nonce{};
    auto blob = aead_seal(key, nonce, junk,
                          std::span(reinterpret_cast<const std::uint8_t *>(kNetworkAad.data()),
                                    kNetworkAad.size()));
    EXPECT_THROW(acc.load_network(blob), ValidationError);
    EXPECT_FALSE(acc.loaded());
}

TEST(Aead, AnySingleBitFlipFailsAuthentication) {
    auto key = fresh_key(42);
    std::array<std::uint8_t, 12> nonce{1, 2, 3};
    const Bytes msg{'p', 'u', 'f', 'l', 'a', 'b'};
    auto blob = aead_seal(key, nonce, msg);
    EXPECT_EQ(aead_open(key, blob), msg);
    auto wire = blob.serialize();
    EXPECT_EQ(CipheredBlob::parse(wire), blob);
    const std::size_t len_lo = 12, len_hi = 16;
    for (std::size_t bit = 0; bit < wire.size() * 8; ++bit) {
        const std::size_t byte = bit / 8;
        if (byte >= len_lo && byte < len_hi)
            continue; // length field: framing error rather than a forgery
        auto bad = wire;
        bad[byte] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        EXPECT_THROW(aead_open(key, CipheredBlob::parse(bad)), TamperError) << "bit " << bit;
    }
    auto framing = wire;
    framing[15] ^= 1;
    EXPECT_THROW(CipheredBlob::parse(framing), TamperError);
}

TEST(Aead, BlobWireLayout) {
    CipheredBlob b;
    b.nonce.fill(0xAA);
    b.ciphertext = {1, 2, 3};
    b.tag.fill(0xBB);
    auto w = b.serialize();
    ASSERT_EQ(w.size(), 12u + 4 + 3 + 16);
    EXPECT_EQ(to_hex(std::span(w).subspan(12, 7)), "00000003010203");
}

TEST(KeyConfidentiality, NoSerializedOutputContainsKeyBytes) {
    RandomStream rng(50);
    auto response = rng.bits(640);
    auto e = fe_generate(response, rng);
    const auto raw = detail::KeyAccess::bytes(e.key);
    const Bytes raw_copy(raw.begin(), raw.end());
    const auto stretched = crypto::kdf("puflab/aead/key", {raw_copy});

    std::vector<Bytes> outputs;
    outputs.push_back(e.helper.serialize());
    auto fp = e.key.fingerprint();
    outputs.emplace_back(fp.begin(), fp.end());
    outputs.emplace_back(e.helper.key_check.begin(), e.helper.key_check.end());
    NeuralAccelerator acc(e.key.clone(), RandomStream(51));
    auto net = random_network(rng, {4, 4, 2});
    auto sealed = seal_network(e.key, net, rng);
    outputs.push_back(sealed.serialize());
    acc.load_network(sealed);
    auto in = seal_input(e.key, std::vector<double>{1, 2, 3, 4}, rng);
    outputs.push_back(in.serialize());
    outputs.push_back(acc.execute_network(in).serialize());
    for (const auto &out : outputs) {
        EXPECT_FALSE(contains(out, raw_copy));
        EXPECT_FALSE(contains(out, std::span(stretched).first(16)));
        const auto hex = to_hex(raw_copy);
        const std::string text(out.begin(), out.end());
        EXPECT_EQ(text.find(hex), std::string::npos);
    }
}

} // namespace
} // namespace puflab
