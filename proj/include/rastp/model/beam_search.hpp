// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "rastp/model/transformer.hpp"
#include "rastp/sid/sid_index.hpp"

namespace rastp::model {

struct Hypothesis {
    sid::SidSequence sid;
    double log_prob = 0.0;
};

/// Trie-constrained beam search over exactly index.levels() decoder steps.
/// Each row's hypotheses are sorted by log-probability (descending), ties by
/// code sequence (ascending); every returned sequence exists in `index`.
template <typename T>
std::vector<std::vector<Hypothesis>> generate(const Seq2Seq<T>& model, const HiddenStates<T>& enc_out,
                                              const Mask& enc_mask, const sid::SidIndex& index, int beam);

}  // namespace rastp::model
