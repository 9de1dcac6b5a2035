// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

namespace rastp {

/// On-disk layout shared by codebook and checkpoint files:
///   u8 version | u32 LE manifest byte length | JSON manifest | f32 LE payload
struct Blob {
    std::uint8_t version = 1;
    nlohmann::json manifest;
    std::vector<float> payload;
};

void write_blob(const std::filesystem::path& path, const Blob& blob);
Blob read_blob(const std::filesystem::path& path, std::uint8_t expected_version);

/// Raw little-endian float32 matrix, no header.
void write_f32_le(const std::filesystem::path& path, const std::vector<float>& values);
std::vector<float> read_f32_le(const std::filesystem::path& path);

}  // namespace rastp
