// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "rastp/data/interactions.hpp"
#include "rastp/sid/codebooks.hpp"

namespace rastp::data {

struct SynthOptions {
    double cluster_spread = 1.0;  // std-dev of items around their cluster center
    double center_scale = 4.0;    // std-dev of cluster centers
    double in_cluster = 0.8;      // probability that a step stays in the preferred cluster
    int max_stride = 1;           // in-cluster walk advances by 1..max_stride items
    int min_length = 8;
    int max_length = 40;
};

struct SynthCorpus {
    InteractionLog log;
    std::vector<sid::ItemEmbedding> embeddings;
    std::vector<int> item_cluster;
};

/// Clustered synthetic corpus. Item i belongs to cluster i mod n_clusters and
/// its embedding is drawn around that cluster's center. Each user picks a
/// preferred cluster and walks through its items in order; with probability
/// 1 - in_cluster a step is replaced by a uniformly random item.
/// Timestamps strictly increase per user. Deterministic in `seed`.
SynthCorpus synth_corpus(int n_users, int n_items, int n_clusters, int d_feat, std::uint64_t seed,
                         const SynthOptions& options = {});

}  // namespace rastp::data
