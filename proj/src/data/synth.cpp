// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#include "rastp/data/synth.hpp"

#include <random>

#include <fmt/format.h>

#include "rastp/core/error.hpp"

namespace rastp::data {

SynthCorpus synth_corpus(int n_users, int n_items, int n_clusters, int d_feat, std::uint64_t seed,
                         const SynthOptions& opt) {
    require(n_users >= 0, "n_users must be >= 0");
    require(n_clusters >= 1, "n_clusters must be >= 1");
    require(n_items >= n_clusters, fmt::format("n_items ({}) must be >= n_clusters ({})", n_items, n_clusters));
    require(d_feat >= 1, "d_feat must be >= 1");
    require(opt.min_length >= 1 && opt.min_length <= opt.max_length, "invalid synthetic length range");
    require(opt.in_cluster >= 0.0 && opt.in_cluster <= 1.0, "in_cluster must lie in [0, 1]");
    require(opt.max_stride >= 1, "max_stride must be >= 1");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<std::vector<double>> centers(n_clusters, std::vector<double>(d_feat));
    for (auto& c : centers) {
        for (auto& v : c) v = opt.center_scale * normal(rng);
    }

    SynthCorpus corpus;
    std::vector<std::vector<int>> members(n_clusters);
    corpus.item_cluster.resize(n_items);
    const int digits = static_cast<int>(fmt::format("{}", n_items - 1).size());
    for (int i = 0; i < n_items; ++i) {
        const int c = i % n_clusters;
        corpus.item_cluster[i] = c;
        members[c].push_back(i);
        sid::ItemEmbedding e{fmt::format("i{:0{}}", i, digits), std::vector<float>(d_feat)};
        for (int j = 0; j < d_feat; ++j) {
            e.vector[j] = static_cast<float>(centers[c][j] + opt.cluster_spread * normal(rng));
        }
        corpus.embeddings.push_back(std::move(e));
    }

    const int user_digits = static_cast<int>(fmt::format("{}", std::max(n_users - 1, 0)).size());
    std::uniform_int_distribution<int> pick_cluster(0, n_clusters - 1);
    std::uniform_int_distribution<int> pick_item(0, n_items - 1);
    std::uniform_int_distribution<int> pick_length(opt.min_length, opt.max_length);
    std::uniform_int_distribution<int> pick_stride(1, opt.max_stride);
    std::uniform_int_distribution<int> pick_gap(1, 3600);
    std::bernoulli_distribution stay(opt.in_cluster);

    std::vector<Interaction> records;
    for (int u = 0; u < n_users; ++u) {
        const auto user = fmt::format("u{:0{}}", u, user_digits);
        const auto& pool = members[pick_cluster(rng)];
        const int len = pick_length(rng);
        std::size_t pos = std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng);
        std::int64_t ts = 1'600'000'000 + std::uniform_int_distribution<int>(0, 86'400)(rng);
        for (int k = 0; k < len; ++k) {
            int item;
            if (stay(rng)) {
                item = pool[pos];
                pos = (pos + static_cast<std::size_t>(pick_stride(rng))) % pool.size();
            } else {
                item = pick_item(rng);
            }
            records.push_back({user, corpus.embeddings[item].item_id, ts});
            ts += pick_gap(rng);
        }
    }
    corpus.log = InteractionLog::from_records(std::move(records));
    return corpus;
}

}  // namespace rastp::data
