// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "puflab/bits.hpp"
#include "puflab/keys.hpp"
#include "puflab/random.hpp"

namespace puflab {

/// ChaCha20-Poly1305 sealed payload.
struct CipheredBlob {
    std::array<std::uint8_t, 12> nonce{};
    Bytes ciphertext;
    std::array<std::uint8_t, 16> tag{};

    /// nonce || be32(|ciphertext|) || ciphertext || tag
    Bytes serialize() const;
    /// Throws TamperError on malformed framing.
    static CipheredBlob parse(std::span<const std::uint8_t> wire);
    bool operator==(const CipheredBlob &) const = default;
};

CipheredBlob aead_seal(const SecretKey &key, const std::array<std::uint8_t, 12> &nonce,
                       std::span<const std::uint8_t> plaintext,
                       std::span<const std::uint8_t> aad = {});
/// Throws TamperError when authentication fails.
Bytes aead_open(const SecretKey &key, const CipheredBlob &blob,
                std::span<const std::uint8_t> aad = {});

/// Toy network: y = relu(W_n(... relu(W_1 x))), ReLU after every layer.
struct DenseLayer {
    std::size_t rows = 0, cols = 0;
    std::vector<double> weights; // row-major rows x cols
};

struct ToyNetwork {
    std::vector<DenseLayer> layers;

    /// be32 layer count, then per layer be32 rows || be32 cols || rows*cols
    /// big-endian IEEE-754 doubles (row-major).
    Bytes serialize() const;
    static ToyNetwork parse(std::span<const std::uint8_t> bytes);
    std::size_t input_size() const { return layers.empty() ? 0 : layers.front().cols; }
    std::size_t output_size() const { return layers.empty() ? 0 : layers.back().rows; }
};

/// be32 count || big-endian IEEE-754 doubles.
Bytes encode_vector(std::span<const double> values);
std::vector<double> decode_vector(std::span<const std::uint8_t> bytes);

// Associated data binding each sealed blob to its role.
inline constexpr std::string_view kNetworkAad = "puflab/nn/network";
inline constexpr std::string_view kInputAad = "puflab/nn/input";
inline constexpr std::string_view kOutputAad = "puflab/nn/output";

// Model-owner side helpers.
CipheredBlob seal_network(const SecretKey &key, const ToyNetwork &net, RandomStream &rng);
CipheredBlob seal_input(const SecretKey &key, std::span<const double> input, RandomStream &rng);
std::vector<double> open_output(const SecretKey &key, const CipheredBlob &blob);

/// Simulated accelerator holding a device key. Network configuration and
/// data are only ever accepted or returned sealed; decrypted buffers are
/// wiped as soon as they have been consumed, and the loaded weights and key
/// are wiped when the accelerator is destroyed.
///
/// One operation in flight at a time; not thread-safe.
class NeuralAccelerator {
  public:
    NeuralAccelerator(SecretKey key, RandomStream nonce_source);
    ~NeuralAccelerator();
    NeuralAccelerator(const NeuralAccelerator &) = delete;
    NeuralAccelerator &operator=(const NeuralAccelerator &) = delete;

    /// Throws TamperError if the blob does not authenticate; the previously
    /// loaded network (if any) is kept in that case.
    void load_network(const CipheredBlob &ciphered_network);
    /// Throws ProtocolStateError when no network is loaded, TamperError on
    /// an unauthentic input, ValidationError on a size mismatch.
    CipheredBlob execute_network(const CipheredBlob &ciphered_input);
    bool loaded() const { return !network_.layers.empty(); }

  private:
    void wipe_network();

    SecretKey key_;
    std::array<std::uint8_t, 4> nonce_prefix_{};
    std::uint64_t nonce_counter_ = 0;
    ToyNetwork network_;
};

} // namespace puflab
