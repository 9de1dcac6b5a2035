// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rastp/sid/codebooks.hpp"

namespace rastp::sid {

/// Item <-> semantic id maps plus a prefix trie over the codes in use.
///
/// Items that quantize to the same sequence share a collision bucket ordered
/// by popularity (descending; insertion order breaks ties). With
/// `disambiguate` an extra level holding the rank inside the bucket is
/// appended, so every sequence names exactly one item.
class SidIndex {
public:
    static SidIndex build(const SidCodebooks& codebooks, std::span<const ItemEmbedding> embeddings,
                          std::span<const double> popularity = {}, bool disambiguate = false);

    /// Builds directly from precomputed codes (one sequence per item).
    static SidIndex from_codes(std::vector<std::string> item_ids, std::vector<SidSequence> codes, int width,
                               std::span<const double> popularity = {});

    int levels() const { return levels_; }
    int width() const { return width_; }
    std::size_t num_items() const { return item_ids_.size(); }
    std::size_t num_sequences() const { return buckets_.size(); }

    const std::string& item_id(int item) const { return item_ids_.at(static_cast<std::size_t>(item)); }
    std::optional<int> find_item(std::string_view item_id) const;
    const SidSequence& sid_of(int item) const { return codes_.at(static_cast<std::size_t>(item)); }

    /// Items sharing `seq`, most popular first; empty if no item maps to it.
    const std::vector<int>& bucket(const SidSequence& seq) const;
    const std::map<SidSequence, std::vector<int>>& buckets() const { return buckets_; }

    /// Valid next codes after `prefix`, ascending. Empty for unknown or full-length prefixes.
    std::vector<int> children(std::span<const int> prefix) const;
    /// Number of root-to-leaf paths in the trie.
    std::size_t trie_paths() const;

private:
    struct Node {
        std::map<int, int> next;
    };

    void insert_path(const SidSequence& seq);

    int levels_ = 0;
    int width_ = 0;
    std::vector<std::string> item_ids_;
    std::unordered_map<std::string, int> lookup_;
    std::vector<SidSequence> codes_;
    std::map<SidSequence, std::vector<int>> buckets_;
    std::vector<Node> trie_{Node{}};
};

}  // namespace rastp::sid
