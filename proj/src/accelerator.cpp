// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include "puflab/accelerator.hpp"

#include <bit>
#include <cmath>
#include <memory>

#include <openssl/evp.h>

#include "puflab/crypto.hpp"
#include "puflab/errors.hpp"

namespace puflab {

namespace {

struct CipherCtxDeleter {
    void operator()(EVP_CIPHER_CTX *c) const { EVP_CIPHER_CTX_free(c); }
};
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;

std::span<const std::uint8_t> as_bytes(std::string_view s) {
    return {reinterpret_cast<const std::uint8_t *>(s.data()), s.size()};
}

/// Buffer that is wiped when it goes out of scope.
struct WipedBytes {
    Bytes data;
    ~WipedBytes() { crypto::secure_zero(data.data(), data.size()); }
};

} // namespace

Bytes CipheredBlob::serialize() const {
    Bytes out;
    append(out, nonce);
    put_be32(out, static_cast<std::uint32_t>(ciphertext.size()));
    append(out, ciphertext);
    append(out, tag);
    return out;
}

CipheredBlob CipheredBlob::parse(std::span<const std::uint8_t> wire) {
    try {
        ByteReader r(wire);
        CipheredBlob b;
        auto n = r.take(b.nonce.size());
        std::copy(n.begin(), n.end(), b.nonce.begin());
        auto len = r.be32();
        auto ct = r.take(len);
        b.ciphertext.assign(ct.begin(), ct.end());
        auto t = r.take(b.tag.size());
        std::copy(t.begin(), t.end(), b.tag.begin());
        if (!r.done())
            throw TamperError("ciphered blob: trailing bytes");
        return b;
    } catch (const ValidationError &e) {
        throw TamperError(std::string("ciphered blob: ") + e.what());
    }
}

CipheredBlob aead_seal(const SecretKey &key, const std::array<std::uint8_t, 12> &nonce,
                       std::span<const std::uint8_t> plaintext,
                       std::span<const std::uint8_t> aad) {
    // ChaCha20 needs a 256-bit key; the 128-bit device key is stretched
    // through the KDF.
    auto k = crypto::kdf("puflab/aead/key", {detail::KeyAccess::bytes(key)});
    CipherCtx ctx(EVP_CIPHER_CTX_new());
    CipheredBlob blob;
    blob.nonce = nonce;
    blob.ciphertext.resize(plaintext.size());
    int len = 0;
    bool ok = ctx &&
              EVP_EncryptInit_ex(ctx.get(), EVP_chacha20_poly1305(), nullptr, nullptr, nullptr) == 1 &&
              EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_SET_IVLEN, 12, nullptr) == 1 &&
              EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, k.data(), nonce.data()) == 1 &&
              (aad.empty() || EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(),
                                                static_cast<int>(aad.size())) == 1) &&
              (plaintext.empty() ||
               EVP_EncryptUpdate(ctx.get(), blob.ciphertext.data(), &len, plaintext.data(),
                                 static_cast<int>(plaintext.size())) == 1) &&
              EVP_EncryptFinal_ex(ctx.get(), blob.ciphertext.data() + plaintext.size(), &len) == 1 &&
              EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_GET_TAG, 16, blob.tag.data()) == 1;
    crypto::secure_zero(k.data(), k.size());
    if (!ok)
        throw Error("openssl: ChaCha20-Poly1305 encryption failed");
    return blob;
}

Bytes aead_open(const SecretKey &key, const CipheredBlob &blob, std::span<const std::uint8_t> aad) {
    auto k = crypto::kdf("puflab/aead/key", {detail::KeyAccess::bytes(key)});
    CipherCtx ctx(EVP_CIPHER_CTX_new());
    Bytes plain(blob.ciphertext.size());
    auto tag = blob.tag;
    int len = 0;
    bool setup = ctx &&
                 EVP_DecryptInit_ex(ctx.get(), EVP_chacha20_poly1305(), nullptr, nullptr, nullptr) == 1 &&
                 EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_SET_IVLEN, 12, nullptr) == 1 &&
                 EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, k.data(), blob.nonce.data()) == 1;
    crypto::secure_zero(k.data(), k.size());
    if (!setup)
        throw Error("openssl: ChaCha20-Poly1305 setup failed");
    bool ok = (aad.empty() || EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(),
                                                static_cast<int>(aad.size())) == 1) &&
              (plain.empty() ||
               EVP_DecryptUpdate(ctx.get(), plain.data(), &len, blob.ciphertext.data(),
                                 static_cast<int>(blob.ciphertext.size())) == 1) &&
              EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_SET_TAG, 16, tag.data()) == 1 &&
              EVP_DecryptFinal_ex(ctx.get(), plain.data() + plain.size(), &len) == 1;
    if (!ok) {
        crypto::secure_zero(plain.data(), plain.size());
        throw TamperError("authentication failed");
    }
    return plain;
}

// ---------------------------------------------------------------------------

namespace {
void put_double(Bytes &out, double v) { put_be64(out, std::bit_cast<std::uint64_t>(v)); }
double get_double(ByteReader &r) { return std::bit_cast<double>(r.be64()); }
} // namespace

Bytes ToyNetwork::serialize() const {
    Bytes out;
    put_be32(out, static_cast<std::uint32_t>(layers.size()));
    for (const auto &l : layers) {
        put_be32(out, static_cast<std::uint32_t>(l.rows));
        put_be32(out, static_cast<std::uint32_t>(l.cols));
        for (double w : l.weights)
            put_double(out, w);
    }
    return out;
}

ToyNetwork ToyNetwork::parse(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    ToyNetwork net;
    const auto count = r.be32();
    if (count == 0 || count > 64)
        throw ValidationError("network: layer count must be in [1, 64]");
    for (std::uint32_t i = 0; i < count; ++i) {
        DenseLayer l;
        l.rows = r.be32();
        l.cols = r.be32();
        if (l.rows == 0 || l.cols == 0 || l.rows * l.cols > r.remaining() / 8)
            throw ValidationError("network: bad dimensions in layer " + std::to_string(i));
        if (i > 0 && l.cols != net.layers.back().rows)
            throw ValidationError("network: layer " + std::to_string(i) +
                                  " input width does not match previous output");
        l.weights.resize(l.rows * l.cols);
        for (auto &w : l.weights)
            w = get_double(r);
        net.layers.push_back(std::move(l));
    }
    if (!r.done())
        throw ValidationError("network: trailing bytes");
    return net;
}

Bytes encode_vector(std::span<const double> values) {
    Bytes out;
    put_be32(out, static_cast<std::uint32_t>(values.size()));
    for (double v : values)
        put_double(out, v);
    return out;
}

std::vector<double> decode_vector(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    const auto n = r.be32();
    if (n > r.remaining() / 8)
        throw ValidationError("vector: truncated");
    std::vector<double> out(n);
    for (auto &v : out)
        v = get_double(r);
    if (!r.done())
        throw ValidationError("vector: trailing bytes");
    return out;
}

namespace {
std::array<std::uint8_t, 12> random_nonce(RandomStream &rng) {
    std::array<std::uint8_t, 12> n{};
    auto b = rng.bytes(n.size());
    std::copy(b.begin(), b.end(), n.begin());
    return n;
}
} // namespace

CipheredBlob seal_network(const SecretKey &key, const ToyNetwork &net, RandomStream &rng) {
    WipedBytes plain{net.serialize()};
    return aead_seal(key, random_nonce(rng), plain.data, as_bytes(kNetworkAad));
}

CipheredBlob seal_input(const SecretKey &key, std::span<const double> input, RandomStream &rng) {
    WipedBytes plain{encode_vector(input)};
    return aead_seal(key, random_nonce(rng), plain.data, as_bytes(kInputAad));
}

std::vector<double> open_output(const SecretKey &key, const CipheredBlob &blob) {
    WipedBytes plain{aead_open(key, blob, as_bytes(kOutputAad))};
    return decode_vector(plain.data);
}

// ---------------------------------------------------------------------------

NeuralAccelerator::NeuralAccelerator(SecretKey key, RandomStream nonce_source)
    : key_(std::move(key)) {
    auto p = nonce_source.bytes(nonce_prefix_.size());
    std::copy(p.begin(), p.end(), nonce_prefix_.begin());
}

NeuralAccelerator::~NeuralAccelerator() { wipe_network(); }

void NeuralAccelerator::wipe_network() {
    for (auto &l : network_.layers)
        crypto::secure_zero(l.weights.data(), l.weights.size() * sizeof(double));
    network_.layers.clear();
}

void NeuralAccelerator::load_network(const CipheredBlob &ciphered_network) {
    WipedBytes plain{aead_open(key_, ciphered_network, as_bytes(kNetworkAad))};
    ToyNetwork net = ToyNetwork::parse(plain.data);
    wipe_network();
    network_ = std::move(net);
}

CipheredBlob NeuralAccelerator::execute_network(const CipheredBlob &ciphered_input) {
    if (!loaded())
        throw ProtocolStateError("execute_network: no network loaded");
    WipedBytes plain{aead_open(key_, ciphered_input, as_bytes(kInputAad))};
    std::vector<double> x = decode_vector(plain.data);
    if (x.size() != network_.input_size()) {
        crypto::secure_zero(x.data(), x.size() * sizeof(double));
        throw ValidationError("execute_network: input has " + std::to_string(x.size()) +
                              " values, network expects " +
                              std::to_string(network_.input_size()));
    }
    for (std::size_t li = 0; li < network_.layers.size(); ++li) {
        const auto &l = network_.layers[li];
        std::vector<double> y(l.rows, 0.0);
        for (std::size_t r = 0; r < l.rows; ++r) {
            double acc = 0.0;
            for (std::size_t c = 0; c < l.cols; ++c)
                acc += l.weights[r * l.cols + c] * x[c];
            y[r] = acc > 0.0 ? acc : 0.0;
        }
        crypto::secure_zero(x.data(), x.size() * sizeof(double));
        x = std::move(y);
    }
    std::array<std::uint8_t, 12> nonce{};
    std::copy(nonce_prefix_.begin(), nonce_prefix_.end(), nonce.begin());
    Bytes ctr;
    put_be64(ctr, nonce_counter_++);
    std::copy(ctr.begin(), ctr.end(), nonce.begin() + 4);
    WipedBytes out{encode_vector(x)};
    crypto::secure_zero(x.data(), x.size() * sizeof(double));
    return aead_seal(key_, nonce, out.data, as_bytes(kOutputAad));
}

} // namespace puflab
