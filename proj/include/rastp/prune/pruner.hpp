// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "rastp/core/tensor.hpp"

namespace rastp::prune {

enum class Kind { none, rastp, l2norm, max_pool, avg_pool };

/// Parses `rastp | l2norm | maxpool | avgpool | none`.
Kind parse_kind(std::string_view name);
std::string_view to_string(Kind kind);
inline bool is_pooling(Kind kind) { return kind == Kind::max_pool || kind == Kind::avg_pool; }

struct PruneStrategy {
    Kind kind = Kind::none;
    double rho = 0.7;     // fraction of positions kept by the selection kinds
    int pool_window = 2;  // pooling kinds only

    /// Throws unless rho is in (0, 1], floor(rho * seq_len) >= 1 and the
    /// pooling window is >= 2 for pooling kinds.
    void validate(int seq_len) const;
};

/// K = floor(rho * seq_len), clamped to [1, seq_len].
int keep_count(int seq_len, double rho);

/// Per-token importance I = centrality * saliency. Masked positions hold -inf.
template <typename T>
struct ImportanceScores {
    int batch = 0;
    int seq = 0;
    std::vector<T> scores;
    std::vector<T> saliency;    // l1 norm of the hidden state
    std::vector<T> centrality;  // attention received, summed over heads and real queries

    T at(int b, int s) const { return scores[static_cast<std::size_t>(b) * seq + s]; }
};

/// Output of any strategy: a shorter (or equal) sequence plus the bookkeeping
/// needed to route gradients back to the source positions.
template <typename T>
struct PruneResult {
    Kind kind = Kind::none;
    int keep_count = 0;
    // Selection kinds: kept source positions per row, strictly ascending.
    // Pooling kinds: first source position of every output window.
    std::vector<std::vector<int>> kept_indices;
    HiddenStates<T> hidden;
    Mask mask;
    int window = 0;  // pooling kinds only
};

template <typename T>
ImportanceScores<T> score_tokens(const HiddenStates<T>& hidden, const AttentionTensor<T>& attention,
                                 const Mask& mask);

/// Keeps the K highest-scoring positions per row (lower index wins ties) and
/// gathers them in ascending position order.
template <typename T>
PruneResult<T> select_and_gather(const HiddenStates<T>& hidden, const Mask& mask, const std::vector<T>& scores,
                                 double rho);

/// Same selection rule with scores = ||h||_2 and no attention term.
template <typename T>
PruneResult<T> baseline_l2_select(const HiddenStates<T>& hidden, const Mask& mask, double rho);

/// Non-overlapping windows of `window` positions collapse to their elementwise
/// max or mean over real members. Windows with no real member produce a
/// masked output that pools over all of its members.
template <typename T>
PruneResult<T> baseline_pool(const HiddenStates<T>& hidden, const Mask& mask, Kind kind, int window);

/// Dispatches on strategy.kind. `attention` is only read for Kind::rastp.
template <typename T>
PruneResult<T> apply_strategy(const PruneStrategy& strategy, const HiddenStates<T>& hidden,
                              const AttentionTensor<T>& attention, const Mask& mask);

/// Maps a gradient on the pruned states back onto the source positions.
template <typename T>
Mat<T> backprop(const PruneResult<T>& result, const HiddenStates<T>& source, const Mask& source_mask,
                const Mat<T>& grad_pruned);

/// Per source row (batch*seq), 1 when that row contributes to the output.
template <typename T>
std::vector<std::uint8_t> contributing_rows(const PruneResult<T>& result, const Mask& source_mask);

}  // namespace rastp::prune
