// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#include "rastp/train/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rastp::train {

bool MetricsReport::consistent() const {
    double prev_recall = 0.0;
    for (const auto& [k, r] : recall) {
        const auto it = ndcg.find(k);
        if (it == ndcg.end()) return false;
        if (!(0.0 <= it->second && it->second <= r + 1e-12 && r <= 1.0)) return false;
        if (r + 1e-12 < prev_recall) return false;
        prev_recall = r;
    }
    return true;
}

nlohmann::json to_json(const MetricsReport& report) {
    nlohmann::json recall = nlohmann::json::object(), ndcg = nlohmann::json::object();
    for (const auto& [k, v] : report.recall) recall[std::to_string(k)] = v;
    for (const auto& [k, v] : report.ndcg) ndcg[std::to_string(k)] = v;
    return {
        {"recall", recall},
        {"ndcg", ndcg},
        {"steps_run", report.steps_run},
        {"users", report.users},
        {"timing", {{"wall_step_ms_mean", report.wall_step_ms_mean}, {"wall_step_ms_std", report.wall_step_ms_std}}},
    };
}

MetricsReport ranking_metrics(std::span<const int> ranks, std::span<const int> ks) {
    MetricsReport out;
    out.users = static_cast<long long>(ranks.size());
    for (int k : ks) {
        double hits = 0.0, gain = 0.0;
        for (int r : ranks) {
            if (r >= 1 && r <= k) {
                hits += 1.0;
                gain += 1.0 / std::log2(static_cast<double>(r) + 1.0);
            }
        }
        const double n = ranks.empty() ? 1.0 : static_cast<double>(ranks.size());
        out.recall[k] = hits / n;
        out.ndcg[k] = gain / n;
    }
    return out;
}

TimingSummary summarize_steps(std::span<const double> step_ms, int warmup, int window) {
    TimingSummary s;
    const auto skip = std::min<std::size_t>(static_cast<std::size_t>(std::max(warmup, 0)), step_ms.size());
    const auto tail = step_ms.subspan(skip);
    s.samples = tail.size();
    if (tail.empty()) return s;
    double sum = 0.0;
    for (double v : tail) sum += v;
    s.mean = sum / static_cast<double>(tail.size());
    if (tail.size() > 1) {
        double sq = 0.0;
        for (double v : tail) sq += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(sq / static_cast<double>(tail.size() - 1));
    }
    const auto w = static_cast<std::size_t>(std::max(window, 1));
    std::vector<double> means;
    for (std::size_t start = 0; start + w <= tail.size(); start += w) {
        double m = 0.0;
        for (std::size_t i = start; i < start + w; ++i) m += tail[i];
        means.push_back(m / static_cast<double>(w));
    }
    if (means.empty()) means.push_back(s.mean);
    std::sort(means.begin(), means.end());
    const auto n = means.size();
    s.median_of_means = n % 2 == 1 ? means[n / 2] : 0.5 * (means[n / 2 - 1] + means[n / 2]);
    return s;
}

}  // namespace rastp::train
