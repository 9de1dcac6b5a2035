// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace rastp::data {

struct Interaction {
    std::string user_id;
    std::string item_id;
    std::int64_t timestamp = 0;

    auto operator<=>(const Interaction&) const = default;
};

/// Records sorted by (user_id, timestamp, item_id) with exact duplicates removed.
struct InteractionLog {
    std::vector<Interaction> records;

    /// Sorts into canonical order and drops repeated (user, item, timestamp) triples.
    static InteractionLog from_records(std::vector<Interaction> records);
    std::size_t size() const { return records.size(); }
};

/// Reads `user_id<TAB>item_id<TAB>timestamp` lines. Blank lines are skipped;
/// anything else malformed raises an error carrying the 1-based line number.
InteractionLog load_interactions(const std::filesystem::path& path);
void save_interactions(const std::filesystem::path& path, const InteractionLog& log);

/// One user's chronological history. The final entry is the test target and
/// the one before it the validation target; everything earlier is training.
struct UserSplit {
    std::string user_id;
    std::vector<std::string> items;
    std::vector<std::int64_t> timestamps;

    std::size_t num_train() const { return items.size() - 2; }
    const std::string& valid_item() const { return items[items.size() - 2]; }
    const std::string& test_item() const { return items.back(); }
};

/// Iterative k-core filter over users and items, then leave-one-out splitting.
/// Users are returned sorted by id; users left with fewer than three
/// interactions produce no split.
std::vector<UserSplit> split_leave_one_out(const InteractionLog& log, int min_interactions = 5);

/// Only the k-core filtering step, exposed for auditing.
InteractionLog core_filter(const InteractionLog& log, int min_interactions);

/// Summary of a split for audit files.
nlohmann::json split_manifest(const InteractionLog& raw, const std::vector<UserSplit>& splits, int min_interactions);

/// Per-item interaction counts over the training portion of every split.
std::vector<std::pair<std::string, std::size_t>> train_item_counts(const std::vector<UserSplit>& splits);

}  // namespace rastp::data
