// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>

#include "rastp/model/transformer.hpp"

namespace rastp::model {

struct Checkpoint {
    ModelConfig config;
    Params<float> params;
    long long step = 0;
    std::uint64_t seed = 0;
};

/// Versioned file: JSON manifest (config, step, seed, tensor shapes) followed
/// by every tensor as little-endian float32 in Params::for_each order.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace rastp::model
