// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#include "rastp/sid/sid_index.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

namespace rastp::sid {

namespace {

void order_bucket(std::vector<int>& bucket, std::span<const double> popularity) {
    if (popularity.empty()) return;
    std::stable_sort(bucket.begin(), bucket.end(), [&](int a, int b) { return popularity[a] > popularity[b]; });
}

}  // namespace

SidIndex SidIndex::build(const SidCodebooks& codebooks, std::span<const ItemEmbedding> embeddings,
                         std::span<const double> popularity, bool disambiguate) {
    require(popularity.empty() || popularity.size() == embeddings.size(),
            "popularity must have one entry per item");
    std::vector<std::string> ids;
    std::vector<SidSequence> codes;
    ids.reserve(embeddings.size());
    codes.reserve(embeddings.size());
    for (const auto& e : embeddings) {
        ids.push_back(e.item_id);
        codes.push_back(encode_item(codebooks, e.vector));
    }
    if (disambiguate) {
        std::map<SidSequence, std::vector<int>> groups;
        for (int i = 0; i < static_cast<int>(codes.size()); ++i) groups[codes[i]].push_back(i);
        for (auto& [seq, members] : groups) {
            order_bucket(members, popularity);
            require(static_cast<int>(members.size()) <= codebooks.width,
                    fmt::format("collision bucket of {} items exceeds codebook width {}", members.size(),
                                codebooks.width));
            for (int rank = 0; rank < static_cast<int>(members.size()); ++rank) {
                codes[members[rank]].codes.push_back(rank);
            }
        }
    }
    return from_codes(std::move(ids), std::move(codes), codebooks.width, popularity);
}

SidIndex SidIndex::from_codes(std::vector<std::string> item_ids, std::vector<SidSequence> codes, int width,
                              std::span<const double> popularity) {
    require(item_ids.size() == codes.size(), "one code sequence per item is required");
    require(popularity.empty() || popularity.size() == item_ids.size(), "popularity must have one entry per item");
    SidIndex index;
    index.width_ = width;
    index.levels_ = codes.empty() ? 0 : static_cast<int>(codes.front().size());
    index.item_ids_ = std::move(item_ids);
    index.codes_ = std::move(codes);
    for (int i = 0; i < static_cast<int>(index.item_ids_.size()); ++i) {
        const auto& seq = index.codes_[i];
        require(static_cast<int>(seq.size()) == index.levels_, "all sequences must have the same length");
        for (int c : seq.codes) require(c >= 0 && c < width, fmt::format("code {} outside [0, {})", c, width));
        const auto [it, inserted] = index.lookup_.emplace(index.item_ids_[i], i);
        require(inserted, fmt::format("duplicate item id '{}'", index.item_ids_[i]));
        auto& bucket = index.buckets_[seq];
        if (bucket.empty()) index.insert_path(seq);
        bucket.push_back(i);
    }
    for (auto& [seq, bucket] : index.buckets_) order_bucket(bucket, popularity);
    return index;
}

void SidIndex::insert_path(const SidSequence& seq) {
    int node = 0;
    for (int code : seq.codes) {
        auto it = trie_[node].next.find(code);
        if (it == trie_[node].next.end()) {
            trie_.push_back(Node{});
            const int child = static_cast<int>(trie_.size()) - 1;
            trie_[node].next.emplace(code, child);
            node = child;
        } else {
            node = it->second;
        }
    }
}

std::optional<int> SidIndex::find_item(std::string_view item_id) const {
    auto it = lookup_.find(std::string(item_id));
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
}

const std::vector<int>& SidIndex::bucket(const SidSequence& seq) const {
    static const std::vector<int> empty;
    auto it = buckets_.find(seq);
    return it == buckets_.end() ? empty : it->second;
}

std::vector<int> SidIndex::children(std::span<const int> prefix) const {
    int node = 0;
    for (int code : prefix) {
        auto it = trie_[node].next.find(code);
        if (it == trie_[node].next.end()) return {};
        node = it->second;
    }
    std::vector<int> out;
    out.reserve(trie_[node].next.size());
    for (const auto& [code, child] : trie_[node].next) out.push_back(code);
    return out;
}

std::size_t SidIndex::trie_paths() const {
    std::size_t leaves = 0;
    for (const auto& node : trie_) leaves += node.next.empty() ? 1 : 0;
    return item_ids_.empty() ? 0 : leaves;
}

}  // namespace rastp::sid
