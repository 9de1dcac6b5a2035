// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rastp/core/error.hpp"

namespace rastp::bench {

/// A recognised setting: name, default value (as text) and a help string.
struct KeySpec {
    std::string name;
    std::string fallback;
    std::string help;
};

/// Every key accepted in config files and as `--key value` overrides.
const std::vector<KeySpec>& known_keys();

/// Flat `key = value` settings. Lines starting with '#' and blank lines are
/// ignored; values may be wrapped in double quotes. Unknown keys are rejected
/// so that typos fail loudly.
class Settings {
public:
    /// All known keys at their defaults.
    Settings();

    /// Defaults overlaid with the file contents.
    static Settings load(const std::filesystem::path& path);

    void set(std::string_view key, std::string value);
    const std::string& get(std::string_view key) const;

    std::string text(std::string_view key) const { return get(key); }
    int integer(std::string_view key) const;
    double real(std::string_view key) const;
    bool flag(std::string_view key) const;
    std::uint64_t seed(std::string_view key) const;
    std::vector<std::string> list(std::string_view key) const;

    nlohmann::json to_json() const;
    /// Serializes back into the file format, keys sorted.
    std::string to_text() const;

private:
    std::map<std::string, std::string, std::less<>> values_;
};

/// Splits on commas, trimming whitespace and dropping empty parts.
std::vector<std::string> split_list(std::string_view text);

}  // namespace rastp::bench
