// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "rastp/core/tensor.hpp"
#include "rastp/data/interactions.hpp"
#include "rastp/model/transformer.hpp"
#include "rastp/sid/sid_index.hpp"

namespace rastp::data {

enum class Phase { train, valid, test };
Phase parse_phase(std::string_view name);

/// A history of semantic-id tokens (oldest first) and the item to predict.
/// `history_begin`/`target_pos` index into the owning UserSplit, so the
/// history covers items [history_begin, target_pos) of that user.
struct SequenceExample {
    int user = 0;
    int history_begin = 0;
    int target_pos = 0;
    std::vector<int> input_tokens;
    sid::SidSequence target;
    int target_item = 0;
};

/// Token ids for one item: one token per index level.
std::vector<int> item_tokens(const sid::SidIndex& index, int item);

/// Builds examples for `phase`. Histories keep the most recent
/// floor(max_seq / levels) items. Training emits one example per prefix
/// (n - 1 per user with n training items) unless `single_target` is set, in
/// which case only the final training item is predicted.
std::vector<SequenceExample> make_examples(const std::vector<UserSplit>& splits, const sid::SidIndex& index,
                                           int max_seq, Phase phase, bool single_target = false);

/// Packs examples into a right-padded token batch plus decoder targets.
struct Batch {
    TokenBatch tokens;
    model::TargetTokens targets;
};
Batch collate(std::span<const SequenceExample> examples, std::span<const int> rows, int width);

}  // namespace rastp::data
