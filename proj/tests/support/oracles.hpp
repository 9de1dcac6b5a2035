// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

// Brute-force references shared by unit and acceptance tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "rastp/data/interactions.hpp"
#include "rastp/prune/pruner.hpp"
#include "rastp/sid/codebooks.hpp"

namespace rastp::testing {

using data::Interaction;
using sid::SidCodebooks;

struct Case {
    HiddenStates<double> hidden;
    AttentionTensor<double> attention;
    Mask mask;
};

// Random hidden states, right-aligned padding and softmax attention over real keys.
inline Case random_case(std::mt19937_64& rng, int B, int H, int S, int d) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_int_distribution<int> len(1, S);
    Case c{HiddenStates<double>(B, S, d), AttentionTensor<double>(B, H, S), Mask(B, S, 0)};
    for (Eigen::Index i = 0; i < c.hidden.values.size(); ++i) c.hidden.values.data()[i] = g(rng);
    for (int b = 0; b < B; ++b) {
        const int n = len(rng);
        for (int s = 0; s < n; ++s) c.mask.at(b, s) = 1;
        for (int h = 0; h < H; ++h) {
            auto A = c.attention.block(b, h);
            for (int q = 0; q < S; ++q) {
                double sum = 0.0;
                for (int k = 0; k < S; ++k) {
                    A(q, k) = c.mask.at(b, k) ? std::exp(g(rng)) : 0.0;
                    sum += A(q, k);
                }
                A.row(q) /= sum;
            }
        }
    }
    return c;
}

// Independent reference for the scores: plain nested loops over every index.
inline std::vector<double> naive_scores(const Case& c) {
    const int B = c.hidden.batch, S = c.hidden.seq, d = c.hidden.dim, H = c.attention.heads;
    std::vector<double> out(static_cast<std::size_t>(B) * S, -std::numeric_limits<double>::infinity());
    for (int b = 0; b < B; ++b) {
        for (int k = 0; k < S; ++k) {
            if (!c.mask.at(b, k)) continue;
            double l1 = 0.0;
            for (int i = 0; i < d; ++i) l1 += std::abs(c.hidden.values(b * S + k, i));
            double received = 0.0;
            for (int h = 0; h < H; ++h) {
                for (int q = 0; q < S; ++q) {
                    if (c.mask.at(b, q)) received += c.attention.at(b, h, q, k);
                }
            }
            out[static_cast<std::size_t>(b) * S + k] = received * l1;
        }
    }
    return out;
}

// Reference selection: fully sort (score desc, index asc), take K, re-sort ascending.
inline std::vector<int> sort_oracle(const std::vector<double>& row, int K) {
    std::vector<int> idx(row.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return row[a] > row[b]; });
    idx.resize(K);
    std::sort(idx.begin(), idx.end());
    return idx;
}

// Independent reference: exhaustive scan per level, strict '<' keeps the lowest index.
inline std::vector<int> brute_force_codes(const SidCodebooks& books, const std::vector<float>& x) {
    std::vector<double> r(x.begin(), x.end());
    std::vector<int> codes;
    for (int level = 0; level < books.levels; ++level) {
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int c = 0; c < books.width; ++c) {
            double d = 0.0;
            for (int j = 0; j < books.dim; ++j) {
                const double diff = r[j] - static_cast<double>(books.centroids[level](c, j));
                d += diff * diff;
            }
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        for (int j = 0; j < books.dim; ++j) r[j] -= books.centroids[level](best, j);
        codes.push_back(best);
    }
    return codes;
}

// Naive fixpoint: recount everything from scratch until nothing changes.
inline std::vector<Interaction> brute_force_core(std::vector<Interaction> recs, int k) {
    for (bool changed = true; changed;) {
        std::map<std::string, int> uc, ic;
        for (const auto& r : recs) {
            ++uc[r.user_id];
            ++ic[r.item_id];
        }
        std::vector<Interaction> next;
        for (const auto& r : recs) {
            if (uc[r.user_id] >= k && ic[r.item_id] >= k) next.push_back(r);
        }
        changed = next.size() != recs.size();
        recs = std::move(next);
    }
    return recs;
}

}  // namespace rastp::testing
