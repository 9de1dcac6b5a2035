// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <span>
#include <vector>

#include <json.hpp>

namespace rastp::train {

inline const std::vector<int> kDefaultKs = {5, 10};

struct MetricsReport {
    std::map<int, double> recall;
    std::map<int, double> ndcg;
    double wall_step_ms_mean = 0.0;
    double wall_step_ms_std = 0.0;
    long long steps_run = 0;
    long long users = 0;

    /// Checks 0 <= ndcg@K <= recall@K <= 1 and monotone recall in K.
    bool consistent() const;
};

/// Metric fields only; timing lives under a separate "timing" key so runs can
/// be compared byte-for-byte after dropping it.
nlohmann::json to_json(const MetricsReport& report);

/// Recall@K and NDCG@K from 1-based hit ranks (0 means the target was not
/// retrieved). Sums are accumulated in input order and divided once.
MetricsReport ranking_metrics(std::span<const int> ranks, std::span<const int> ks = kDefaultKs);

/// Mean, sample standard deviation and median-of-window-means of per-step
/// timings after dropping `warmup` leading steps. With fewer than one full
/// window after warmup the whole tail forms a single window.
struct TimingSummary {
    double mean = 0.0;
    double stddev = 0.0;
    double median_of_means = 0.0;
    std::size_t samples = 0;
};
TimingSummary summarize_steps(std::span<const double> step_ms, int warmup = 50, int window = 50);

}  // namespace rastp::train
