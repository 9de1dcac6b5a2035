// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#include "rastp/core/blob.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "rastp/core/error.hpp"

namespace rastp {

static_assert(std::endian::native == std::endian::little, "payloads are written in host order");

namespace {

std::vector<char> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

void write_blob(const std::filesystem::path& path, const Blob& blob) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), "cannot write " + path.string());
    const std::string manifest = blob.manifest.dump();
    const auto length = static_cast<std::uint32_t>(manifest.size());
    out.put(static_cast<char>(blob.version));
    out.write(reinterpret_cast<const char*>(&length), sizeof(length));
    out.write(manifest.data(), static_cast<std::streamsize>(manifest.size()));
    out.write(reinterpret_cast<const char*>(blob.payload.data()),
              static_cast<std::streamsize>(blob.payload.size() * sizeof(float)));
    require(static_cast<bool>(out), "short write to " + path.string());
}

Blob read_blob(const std::filesystem::path& path, std::uint8_t expected_version) {
    const auto bytes = slurp(path);
    require(bytes.size() >= 5, path.string() + ": truncated header");
    Blob blob;
    blob.version = static_cast<std::uint8_t>(bytes[0]);
    require(blob.version == expected_version,
            path.string() + ": unsupported version " + std::to_string(blob.version));
    std::uint32_t length = 0;
    std::memcpy(&length, bytes.data() + 1, sizeof(length));
    require(bytes.size() >= 5 + static_cast<std::size_t>(length), path.string() + ": truncated manifest");
    blob.manifest = nlohmann::json::parse(bytes.begin() + 5, bytes.begin() + 5 + length);
    const std::size_t rest = bytes.size() - 5 - length;
    require(rest % sizeof(float) == 0, path.string() + ": payload is not a float32 array");
    blob.payload.resize(rest / sizeof(float));
    std::memcpy(blob.payload.data(), bytes.data() + 5 + length, rest);
    return blob;
}

void write_f32_le(const std::filesystem::path& path, const std::vector<float>& values) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(float)));
}

std::vector<float> read_f32_le(const std::filesystem::path& path) {
    const auto bytes = slurp(path);
    require(bytes.size() % sizeof(float) == 0, path.string() + ": size is not a multiple of 4");
    std::vector<float> values(bytes.size() / sizeof(float));
    std::memcpy(values.data(), bytes.data(), bytes.size());
    return values;
}

}  // namespace rastp
