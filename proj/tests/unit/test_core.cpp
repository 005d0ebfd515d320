// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "puflab/bits.hpp"
#include "puflab/crypto.hpp"
#include "puflab/errors.hpp"
#include "puflab/kv.hpp"
#include "puflab/random.hpp"
#include "support.hpp"

namespace puflab {
namespace {

using fixtures::ascii;

TEST(Bits, PackIsMostSignificantFirst) {
    Bits b{1, 0, 0, 0, 0, 0, 0, 1, 1};
    EXPECT_EQ(to_hex(pack_bits(b)), "8180");
    EXPECT_EQ(unpack_bits(pack_bits(b), 9), b);
}

TEST(Bits, HammingDistance) {
    Bits a{0, 1, 1, 0}, b{1, 1, 0, 0};
    EXPECT_EQ(hamming_distance(a, b), 2u);
    EXPECT_DOUBLE_EQ(fractional_hamming_distance(a, b), 0.5);
    EXPECT_EQ(xor_bits(a, b), (Bits{1, 0, 1, 0}));
}

TEST(Bits, HexRoundTripAndRejectsJunk) {
    EXPECT_EQ(to_hex(from_hex("00ff7a")), "00ff7a");
    EXPECT_THROW(from_hex("abc"), ValidationError);
    EXPECT_THROW(from_hex("zz"), ValidationError);
}

TEST(Bits, ByteReaderRejectsTruncation) {
    Bytes buf;
    put_be32(buf, 7);
    ByteReader r(buf);
    EXPECT_THROW(r.length_prefixed(), ValidationError);
}

TEST(Crypto, Sha256KnownAnswer) {
    EXPECT_EQ(to_hex(crypto::sha256(ascii("abc"))),
              "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    crypto::Sha256 h;
    h.update("a").update("bc");
    EXPECT_EQ(to_hex(h.finish()), to_hex(crypto::sha256(ascii("abc"))));
}

TEST(Crypto, HmacKnownAnswer) {
    auto mac = crypto::hmac_sha256(ascii("Jefe"), ascii("what do ya want for nothing?"));
    EXPECT_EQ(to_hex(mac), "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843");
}

TEST(Crypto, ExpanderMatchesOracle) {
    const Bytes seed{1, 2, 3};
    crypto::Expander x("domain", seed);
    fixtures::OracleExpander o("domain", seed);
    for (int i = 0; i < 100; ++i)
        ASSERT_EQ(x.next_u64(), o.u64());
    for (int i = 0; i < 100; ++i)
        ASSERT_EQ(x.gaussian(), o.gaussian());
    for (int i = 0; i < 100; ++i)
        ASSERT_EQ(x.uniform_below(7 + i), o.below(7 + i));
}

TEST(Crypto, KdfFramesParts) {
    const Bytes ab{'a', 'b'}, a{'a'}, b{'b'}, empty;
    EXPECT_NE(crypto::kdf("t", {ab, empty}), crypto::kdf("t", {a, b}));
    EXPECT_NE(crypto::kdf("t", {ab}), crypto::kdf("u", {ab}));
}

TEST(Random, ForkIsIndependentAndDoesNotAdvance) {
    RandomStream r(5);
    auto c1 = r.fork(1), c1b = r.fork(1), c2 = r.fork(2);
    EXPECT_EQ(c1.next_u64(), c1b.next_u64());
    EXPECT_NE(c1.next_u64(), c2.next_u64());
    RandomStream fresh(5);
    EXPECT_EQ(r.next_u64(), fresh.next_u64());
}

TEST(Random, GaussianMoments) {
    RandomStream r(9);
    double sum = 0, sq = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        double g = r.gaussian();
        sum += g;
        sq += g * g;
    }
    EXPECT_NEAR(sum / n, 0.0, 0.03);
    EXPECT_NEAR(sq / n, 1.0, 0.05);
}

TEST(KeyValue, RoundTripAndComments) {
    KeyValueDoc d;
    d.set("b", 2);
    d.set("a", 0.1);
    d.set("name", "x y");
    auto back = KeyValueDoc::parse("# header\n" + d.to_string());
    EXPECT_EQ(back.to_string(), d.to_string());
    EXPECT_EQ(back.get_uint("b"), 2u);
    EXPECT_DOUBLE_EQ(back.get_double("a"), 0.1);
    EXPECT_EQ(back.get("name"), "x y");
    EXPECT_THROW(back.get("missing"), ValidationError);
    EXPECT_THROW(back.get_uint("name"), ValidationError);
}

TEST(KeyValue, LoadMissingFileIsIoError) {
    EXPECT_THROW(KeyValueDoc::load("/nonexistent/dir/file.kv"), IoError);
}

} // namespace
} // namespace puflab
