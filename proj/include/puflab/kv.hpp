// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <concepts>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace puflab {

/// Flat "key = value" text document. Lines starting with '#' are comments.
/// Keys keep insertion order so serialization is byte-stable.
class KeyValueDoc {
  public:
    static KeyValueDoc parse(const std::string &text);
    static KeyValueDoc load(const std::filesystem::path &path);

    void set(const std::string &key, const std::string &value);
    void set(const std::string &key, double value);
    template <std::integral T> void set(const std::string &key, T value) {
        set(key, std::to_string(value));
    }
    void set(const std::string &key, const char *value) { set(key, std::string(value)); }

    bool has(const std::string &key) const;
    std::optional<std::string> find(const std::string &key) const;
    std::string get(const std::string &key) const;
    std::string get_or(const std::string &key, const std::string &fallback) const;
    double get_double(const std::string &key) const;
    double get_double_or(const std::string &key, double fallback) const;
    std::uint64_t get_uint(const std::string &key) const;
    std::uint64_t get_uint_or(const std::string &key, std::uint64_t fallback) const;

    const std::vector<std::pair<std::string, std::string>> &entries() const { return entries_; }

    std::string to_string() const;
    void save(const std::filesystem::path &path) const;

  private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

/// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

} // namespace puflab
