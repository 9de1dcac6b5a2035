// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <vector>

#include "rastp/sid/codebooks.hpp"

namespace rastp::sid {

// Text: "d_feat N" header, then N lines "item_id v1 ... v_dfeat".
std::vector<ItemEmbedding> load_embeddings_text(const std::filesystem::path& path);
void save_embeddings_text(const std::filesystem::path& path, const std::vector<ItemEmbedding>& items);

// Binary: raw little-endian float32 [N, d_feat] plus a "<path>.json" sidecar
// holding {"d_feat", "n", "item_ids"}.
std::vector<ItemEmbedding> load_embeddings_binary(const std::filesystem::path& path);
void save_embeddings_binary(const std::filesystem::path& path, const std::vector<ItemEmbedding>& items);

/// Dispatches on extension: ".f32"/".bin" are binary, anything else text.
std::vector<ItemEmbedding> load_embeddings(const std::filesystem::path& path);

}  // namespace rastp::sid
