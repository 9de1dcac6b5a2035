// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#include "rastp/data/examples.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "rastp/core/error.hpp"
#include "rastp/model/config.hpp"

namespace rastp::data {

Phase parse_phase(std::string_view name) {
    if (name == "train") return Phase::train;
    if (name == "valid") return Phase::valid;
    if (name == "test") return Phase::test;
    throw Error(fmt::format("unknown phase '{}' (expected train|valid|test)", name));
}

std::vector<int> item_tokens(const sid::SidIndex& index, int item) {
    const auto& codes = index.sid_of(item).codes;
    std::vector<int> out(codes.size());
    for (std::size_t l = 0; l < codes.size(); ++l) {
        out[l] = model::sid_token(static_cast<int>(l), codes[l], index.width());
    }
    return out;
}

std::vector<SequenceExample> make_examples(const std::vector<UserSplit>& splits, const sid::SidIndex& index,
                                           int max_seq, Phase phase, bool single_target) {
    const int levels = index.levels();
    require(levels >= 1, "semantic id index has no levels");
    const int max_items = max_seq / levels;
    require(max_items >= 1, fmt::format("max_seq {} cannot hold one item of {} tokens", max_seq, levels));

    std::vector<SequenceExample> out;
    for (std::size_t u = 0; u < splits.size(); ++u) {
        const auto& s = splits[u];
        std::vector<int> ids(s.items.size());
        for (std::size_t i = 0; i < s.items.size(); ++i) {
            const auto found = index.find_item(s.items[i]);
            require(found.has_value(),
                    fmt::format("user '{}' references item '{}' missing from the semantic id index", s.user_id,
                                s.items[i]));
            ids[i] = *found;
        }
        const int n = static_cast<int>(s.items.size());
        int first = 0, last = 0;  // target positions [first, last]
        switch (phase) {
            case Phase::train:
                first = single_target ? n - 3 : 1;
                last = n - 3;
                break;
            case Phase::valid: first = last = n - 2; break;
            case Phase::test: first = last = n - 1; break;
        }
        for (int t = std::max(first, 1); t <= last; ++t) {
            SequenceExample ex;
            ex.user = static_cast<int>(u);
            ex.target_pos = t;
            ex.history_begin = std::max(0, t - max_items);
            ex.input_tokens.reserve(static_cast<std::size_t>(t - ex.history_begin) * levels);
            for (int p = ex.history_begin; p < t; ++p) {
                const auto toks = item_tokens(index, ids[p]);
                ex.input_tokens.insert(ex.input_tokens.end(), toks.begin(), toks.end());
            }
            ex.target_item = ids[t];
            ex.target = index.sid_of(ids[t]);
            out.push_back(std::move(ex));
        }
    }
    return out;
}

Batch collate(std::span<const SequenceExample> examples, std::span<const int> rows, int width) {
    require(!rows.empty(), "cannot collate an empty batch");
    int seq = 0;
    for (int r : rows) seq = std::max(seq, static_cast<int>(examples[r].input_tokens.size()));
    Batch b{TokenBatch(static_cast<int>(rows.size()), seq), model::TargetTokens(rows.size())};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& ex = examples[rows[i]];
        for (std::size_t s = 0; s < ex.input_tokens.size(); ++s) {
            b.tokens.id(static_cast<int>(i), static_cast<int>(s)) = ex.input_tokens[s];
            b.tokens.mask.at(static_cast<int>(i), static_cast<int>(s)) = 1;
        }
        auto& tgt = b.targets[i];
        tgt.resize(ex.target.codes.size());
        for (std::size_t l = 0; l < tgt.size(); ++l) tgt[l] = model::sid_token(static_cast<int>(l), ex.target.codes[l], width);
    }
    return b;
}

}  // namespace rastp::data
