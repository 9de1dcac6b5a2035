// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rastp/core/tensor.hpp"

namespace rastp::sid {

/// Dense feature vector for one catalogue item.
struct ItemEmbedding {
    std::string item_id;
    std::vector<float> vector;
};

/// Hierarchical semantic id: one code per quantization level.
struct SidSequence {
    std::vector<int> codes;

    std::size_t size() const { return codes.size(); }
    auto operator<=>(const SidSequence&) const = default;
};

/// L residual codebooks of W centroids each.
struct SidCodebooks {
    int levels = 0;
    int width = 0;
    int dim = 0;
    std::uint64_t seed = 0;
    std::string fingerprint;
    std::vector<Mat<float>> centroids;  // one W x dim matrix per level
};

/// Residual k-means: level l clusters what is left after subtracting the
/// assigned centroids of levels < l. Deterministic for a given seed.
SidCodebooks fit_codebooks(std::span<const ItemEmbedding> embeddings, int levels, int width, int iters,
                           std::uint64_t seed);

/// Nearest-centroid code per level (squared Euclidean, lowest index on ties).
SidSequence encode_item(const SidCodebooks& codebooks, std::span<const float> embedding);

/// Mean squared residual norm before quantization (entry 0) and after each level.
std::vector<double> residual_profile(const SidCodebooks& codebooks, std::span<const ItemEmbedding> embeddings);

/// FNV-1a over ids and raw vector bytes, hex encoded.
std::string corpus_fingerprint(std::span<const ItemEmbedding> embeddings);

void save_codebooks(const std::filesystem::path& path, const SidCodebooks& codebooks);
SidCodebooks load_codebooks(const std::filesystem::path& path);

}  // namespace rastp::sid
