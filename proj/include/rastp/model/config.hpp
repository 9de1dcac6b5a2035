// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

namespace rastp::model {

/// Reserved token ids. Semantic-id tokens start at kNumSpecials.
inline constexpr int kPadToken = 0;
inline constexpr int kBosToken = 1;
inline constexpr int kNumSpecials = 2;

/// Token id of code `code` at quantization level `level` (0-based).
constexpr int sid_token(int level, int code, int width) { return level * width + code + kNumSpecials; }
constexpr int token_level(int token, int width) { return (token - kNumSpecials) / width; }
constexpr int token_code(int token, int width) { return (token - kNumSpecials) % width; }
constexpr int vocab_size_for(int levels, int width) { return levels * width + kNumSpecials; }

struct ModelConfig {
    int vocab_size = 0;
    int d_model = 64;
    int n_heads = 4;
    int d_mlp = 256;
    int n_enc_layers = 2;
    int n_dec_layers = 2;
    double dropout = 0.0;
    int max_seq = 120;
    int max_target = 3;  // decoder positions, one per semantic-id level

    int head_dim() const { return d_model / n_heads; }
    void validate() const;

    bool operator==(const ModelConfig&) const = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

}  // namespace rastp::model
