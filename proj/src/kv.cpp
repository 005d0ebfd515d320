// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include "puflab/kv.hpp"

#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

#include "puflab/errors.hpp"

namespace puflab {

namespace {
std::string trim(const std::string &s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}
} // namespace

std::string format_double(double v) {
    if (v == std::numeric_limits<double>::infinity())
        return "inf";
    if (v == -std::numeric_limits<double>::infinity())
        return "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

KeyValueDoc KeyValueDoc::parse(const std::string &text) {
    KeyValueDoc doc;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = trim(line);
        if (t.empty() || t[0] == '#')
            continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ValidationError("line " + std::to_string(lineno) + ": expected 'key = value'");
        auto key = trim(t.substr(0, eq));
        if (key.empty())
            throw ValidationError("line " + std::to_string(lineno) + ": empty key");
        if (doc.has(key))
            throw ValidationError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        doc.entries_.emplace_back(key, trim(t.substr(eq + 1)));
    }
    return doc;
}

KeyValueDoc KeyValueDoc::load(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError(path.string(), "cannot open for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse(ss.str());
    } catch (const ValidationError &e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void KeyValueDoc::set(const std::string &key, const std::string &value) {
    for (auto &[k, v] : entries_) {
        if (k == key) {
            v = value;
            return;
        }
    }
    entries_.emplace_back(key, value);
}

void KeyValueDoc::set(const std::string &key, double value) { set(key, format_double(value)); }

bool KeyValueDoc::has(const std::string &key) const { return find(key).has_value(); }

std::optional<std::string> KeyValueDoc::find(const std::string &key) const {
    for (const auto &[k, v] : entries_)
        if (k == key)
            return v;
    return std::nullopt;
}

std::string KeyValueDoc::get(const std::string &key) const {
    auto v = find(key);
    if (!v)
        throw ValidationError("missing key '" + key + "'");
    return *v;
}

std::string KeyValueDoc::get_or(const std::string &key, const std::string &fallback) const {
    return find(key).value_or(fallback);
}

double KeyValueDoc::get_double(const std::string &key) const {
    auto s = get(key);
    if (s == "inf")
        return std::numeric_limits<double>::infinity();
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ValidationError("key '" + key + "': '" + s + "' is not a number");
    return v;
}

double KeyValueDoc::get_double_or(const std::string &key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

std::uint64_t KeyValueDoc::get_uint(const std::string &key) const {
    auto s = get(key);
    std::uint64_t v = 0;
    int base = 10;
    const char *b = s.data();
    if (s.starts_with("0x")) {
        base = 16;
        b += 2;
    }
    auto res = std::from_chars(b, s.data() + s.size(), v, base);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || b == s.data() + s.size())
        throw ValidationError("key '" + key + "': '" + s + "' is not a non-negative integer");
    return v;
}

std::uint64_t KeyValueDoc::get_uint_or(const std::string &key, std::uint64_t fallback) const {
    return has(key) ? get_uint(key) : fallback;
}

std::string KeyValueDoc::to_string() const {
    std::string out;
    for (const auto &[k, v] : entries_)
        out += k + " = " + v + "\n";
    return out;
}

void KeyValueDoc::save(const std::filesystem::path &path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError(path.string(), "cannot open for writing");
    out << to_string();
    if (!out)
        throw IoError(path.string(), "write failed");
}

} // namespace puflab
