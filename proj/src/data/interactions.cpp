// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#include "rastp/data/interactions.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <unordered_map>

#include <fmt/format.h>

#include "rastp/core/error.hpp"

namespace rastp::data {

namespace {

bool less_canonical(const Interaction& a, const Interaction& b) {
    if (a.user_id != b.user_id) return a.user_id < b.user_id;
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.item_id < b.item_id;
}

bool same_triple(const Interaction& a, const Interaction& b) {
    return a.user_id == b.user_id && a.item_id == b.item_id && a.timestamp == b.timestamp;
}

}  // namespace

InteractionLog InteractionLog::from_records(std::vector<Interaction> records) {
    std::sort(records.begin(), records.end(), less_canonical);
    records.erase(std::unique(records.begin(), records.end(), same_triple), records.end());
    return InteractionLog{std::move(records)};
}

InteractionLog load_interactions(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), fmt::format("cannot open interaction file '{}'", path.string()));
    std::vector<Interaction> records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fail = [&](std::string_view why) {
            throw Error(fmt::format("{}:{}: {}", path.string(), line_no, why));
        };
        const auto t1 = line.find('\t');
        const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos) {
            fail("expected user_id<TAB>item_id<TAB>timestamp");
        }
        Interaction rec{line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1), 0};
        if (rec.user_id.empty() || rec.item_id.empty()) fail("empty user or item id");
        const char* first = line.data() + t2 + 1;
        const char* last = line.data() + line.size();
        const auto [ptr, ec] = std::from_chars(first, last, rec.timestamp);
        if (ec != std::errc() || ptr != last || first == last) fail("timestamp is not an integer");
        records.push_back(std::move(rec));
    }
    return InteractionLog::from_records(std::move(records));
}

void save_interactions(const std::filesystem::path& path, const InteractionLog& log) {
    std::ofstream out(path);
    require(out.good(), fmt::format("cannot write interaction file '{}'", path.string()));
    for (const auto& r : log.records) out << r.user_id << '\t' << r.item_id << '\t' << r.timestamp << '\n';
    require(out.good(), fmt::format("failed writing '{}'", path.string()));
}

InteractionLog core_filter(const InteractionLog& log, int min_interactions) {
    require(min_interactions >= 1, "min_interactions must be >= 1");
    // Integer ids plus per-record liveness; each removal decrements counts on
    // the other side and queues entities that drop below the threshold.
    std::unordered_map<std::string, int> user_ix, item_ix;
    std::vector<int> rec_user(log.size()), rec_item(log.size());
    for (std::size_t r = 0; r < log.size(); ++r) {
        rec_user[r] = user_ix.try_emplace(log.records[r].user_id, static_cast<int>(user_ix.size())).first->second;
        rec_item[r] = item_ix.try_emplace(log.records[r].item_id, static_cast<int>(item_ix.size())).first->second;
    }
    const auto n_users = user_ix.size(), n_items = item_ix.size();
    std::vector<int> user_count(n_users, 0), item_count(n_items, 0);
    std::vector<std::vector<int>> user_recs(n_users), item_recs(n_items);
    for (std::size_t r = 0; r < log.size(); ++r) {
        ++user_count[rec_user[r]];
        ++item_count[rec_item[r]];
        user_recs[rec_user[r]].push_back(static_cast<int>(r));
        item_recs[rec_item[r]].push_back(static_cast<int>(r));
    }
    std::vector<char> alive(log.size(), 1), user_dead(n_users, 0), item_dead(n_items, 0);
    // Queue entries: id >= 0 is a user, id < 0 encodes item (-id - 1).
    std::vector<int> queue;
    for (std::size_t u = 0; u < n_users; ++u) {
        if (user_count[u] < min_interactions) queue.push_back(static_cast<int>(u));
    }
    for (std::size_t i = 0; i < n_items; ++i) {
        if (item_count[i] < min_interactions) queue.push_back(-static_cast<int>(i) - 1);
    }
    while (!queue.empty()) {
        const int e = queue.back();
        queue.pop_back();
        const bool is_user = e >= 0;
        const int id = is_user ? e : -e - 1;
        auto& dead = is_user ? user_dead[id] : item_dead[id];
        if (dead) continue;
        dead = 1;
        for (int r : is_user ? user_recs[id] : item_recs[id]) {
            if (!alive[r]) continue;
            alive[r] = 0;
            if (is_user) {
                if (--item_count[rec_item[r]] < min_interactions && !item_dead[rec_item[r]]) {
                    queue.push_back(-rec_item[r] - 1);
                }
            } else if (--user_count[rec_user[r]] < min_interactions && !user_dead[rec_user[r]]) {
                queue.push_back(rec_user[r]);
            }
        }
    }
    InteractionLog out;
    for (std::size_t r = 0; r < log.size(); ++r) {
        if (alive[r]) out.records.push_back(log.records[r]);
    }
    return out;
}

std::vector<UserSplit> split_leave_one_out(const InteractionLog& log, int min_interactions) {
    const auto filtered = core_filter(log, min_interactions);
    std::vector<UserSplit> splits;
    // Records are already grouped by user in chronological order.
    for (std::size_t r = 0; r < filtered.size();) {
        std::size_t end = r;
        UserSplit s;
        s.user_id = filtered.records[r].user_id;
        while (end < filtered.size() && filtered.records[end].user_id == s.user_id) {
            s.items.push_back(filtered.records[end].item_id);
            s.timestamps.push_back(filtered.records[end].timestamp);
            ++end;
        }
        if (s.items.size() >= 3) splits.push_back(std::move(s));
        r = end;
    }
    return splits;
}

std::vector<std::pair<std::string, std::size_t>> train_item_counts(const std::vector<UserSplit>& splits) {
    std::map<std::string, std::size_t> counts;
    for (const auto& s : splits) {
        for (std::size_t i = 0; i < s.num_train(); ++i) ++counts[s.items[i]];
    }
    return {counts.begin(), counts.end()};
}

nlohmann::json split_manifest(const InteractionLog& raw, const std::vector<UserSplit>& splits, int min_interactions) {
    std::size_t kept = 0, train = 0;
    std::map<std::string, int> items;
    for (const auto& s : splits) {
        kept += s.items.size();
        train += s.num_train();
        for (const auto& it : s.items) items[it] = 1;
    }
    std::map<std::string, int> raw_users;
    for (const auto& r : raw.records) raw_users[r.user_id] = 1;
    return {
        {"min_interactions", min_interactions},
        {"raw_records", raw.size()},
        {"raw_users", raw_users.size()},
        {"kept_records", kept},
        {"users", splits.size()},
        {"items", items.size()},
        {"train_interactions", train},
        {"valid_rows", splits.size()},
        {"test_rows", splits.size()},
    };
}

}  // namespace rastp::data
