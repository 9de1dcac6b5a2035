// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#include "rastp/prune/pruner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

namespace rastp::prune {

Kind parse_kind(std::string_view name) {
    if (name == "rastp") return Kind::rastp;
    if (name == "l2norm") return Kind::l2norm;
    if (name == "maxpool") return Kind::max_pool;
    if (name == "avgpool") return Kind::avg_pool;
    if (name == "none") return Kind::none;
    throw Error(fmt::format("unknown prune strategy '{}' (expected rastp|l2norm|maxpool|avgpool|none)", name));
}

std::string_view to_string(Kind kind) {
    switch (kind) {
        case Kind::rastp: return "rastp";
        case Kind::l2norm: return "l2norm";
        case Kind::max_pool: return "maxpool";
        case Kind::avg_pool: return "avgpool";
        case Kind::none: return "none";
    }
    return "none";
}

int keep_count(int seq_len, double rho) {
    require(rho > 0.0 && rho <= 1.0, fmt::format("rho must be in (0, 1], got {}", rho));
    // the epsilon absorbs products such as 0.7 * 120 landing just below an integer
    const int k = static_cast<int>(std::floor(rho * seq_len + 1e-9));
    return std::clamp(k, 1, std::max(seq_len, 1));
}

void PruneStrategy::validate(int seq_len) const {
    if (kind == Kind::none) return;
    if (is_pooling(kind)) {
        require(pool_window >= 2, fmt::format("pool_window must be >= 2, got {}", pool_window));
        return;
    }
    require(rho > 0.0 && rho <= 1.0, fmt::format("rho must be in (0, 1], got {}", rho));
    require(std::floor(rho * seq_len + 1e-9) >= 1.0,
            fmt::format("rho {} keeps no token of a length-{} sequence", rho, seq_len));
}

template <typename T>
ImportanceScores<T> score_tokens(const HiddenStates<T>& hidden, const AttentionTensor<T>& attention,
                                 const Mask& mask) {
    require(attention.batch == hidden.batch && attention.seq == hidden.seq, "attention and hidden shapes differ");
    require(mask.batch == hidden.batch && mask.seq == hidden.seq, "mask and hidden shapes differ");
    require(hidden.values.allFinite(), "hidden states contain non-finite values");

    const int B = hidden.batch;
    const int S = hidden.seq;
    ImportanceScores<T> out;
    out.batch = B;
    out.seq = S;
    out.scores.assign(static_cast<std::size_t>(B) * S, -std::numeric_limits<T>::infinity());
    out.saliency.assign(out.scores.size(), T(0));
    out.centrality.assign(out.scores.size(), T(0));

    Vec<T> received(S);
    for (int b = 0; b < B; ++b) {
        received.setZero();
        for (int h = 0; h < attention.heads; ++h) {
            const auto A = attention.block(b, h);
            for (int q = 0; q < S; ++q) {
                if (mask.at(b, q)) received += A.row(q);
            }
        }
        for (int s = 0; s < S; ++s) {
            const std::size_t i = static_cast<std::size_t>(b) * S + s;
            out.saliency[i] = hidden.row(b, s).cwiseAbs().sum();
            out.centrality[i] = received(s);
            if (mask.at(b, s)) out.scores[i] = out.centrality[i] * out.saliency[i];
        }
    }
    return out;
}

namespace {

template <typename T>
PruneResult<T> gather(const HiddenStates<T>& hidden, const Mask& mask, std::vector<std::vector<int>> kept,
                      Kind kind) {
    const int B = hidden.batch;
    const int K = kept.empty() ? 0 : static_cast<int>(kept.front().size());
    PruneResult<T> out;
    out.kind = kind;
    out.keep_count = K;
    out.hidden = HiddenStates<T>(B, K, hidden.dim);
    out.mask = Mask(B, K, 0);
    for (int b = 0; b < B; ++b) {
        for (int k = 0; k < K; ++k) {
            const int src = kept[b][k];
            out.hidden.row(b, k) = hidden.row(b, src);
            out.mask.at(b, k) = mask.at(b, src);
        }
    }
    out.kept_indices = std::move(kept);
    return out;
}

template <typename T>
PruneResult<T> select_by_scores(const HiddenStates<T>& hidden, const Mask& mask, const std::vector<T>& scores,
                                double rho, Kind kind) {
    const int S = hidden.seq;
    require(scores.size() == static_cast<std::size_t>(hidden.batch) * S, "scores shape differs from hidden");
    const int K = keep_count(S, rho);
    std::vector<std::vector<int>> kept(hidden.batch);
    std::vector<int> order(S);
    for (int b = 0; b < hidden.batch; ++b) {
        const T* row = scores.data() + static_cast<std::size_t>(b) * S;
        std::iota(order.begin(), order.end(), 0);
        std::partial_sort(order.begin(), order.begin() + K, order.end(), [row](int x, int y) {
            if (row[x] != row[y]) return row[x] > row[y];
            return x < y;
        });
        kept[b].assign(order.begin(), order.begin() + K);
        std::sort(kept[b].begin(), kept[b].end());
    }
    return gather(hidden, mask, std::move(kept), kind);
}

}  // namespace

template <typename T>
PruneResult<T> select_and_gather(const HiddenStates<T>& hidden, const Mask& mask, const std::vector<T>& scores,
                                 double rho) {
    return select_by_scores(hidden, mask, scores, rho, Kind::rastp);
}

template <typename T>
PruneResult<T> baseline_l2_select(const HiddenStates<T>& hidden, const Mask& mask, double rho) {
    const int S = hidden.seq;
    std::vector<T> scores(static_cast<std::size_t>(hidden.batch) * S, -std::numeric_limits<T>::infinity());
    for (int b = 0; b < hidden.batch; ++b) {
        for (int s = 0; s < S; ++s) {
            if (mask.at(b, s)) scores[static_cast<std::size_t>(b) * S + s] = hidden.row(b, s).norm();
        }
    }
    return select_by_scores(hidden, mask, scores, rho, Kind::l2norm);
}

template <typename T>
PruneResult<T> baseline_pool(const HiddenStates<T>& hidden, const Mask& mask, Kind kind, int window) {
    require(is_pooling(kind), "baseline_pool needs a pooling kind");
    require(window >= 1, "pool window must be >= 1");
    const int B = hidden.batch;
    const int S = hidden.seq;
    const int P = (S + window - 1) / window;
    PruneResult<T> out;
    out.kind = kind;
    out.keep_count = P;
    out.window = window;
    out.hidden = HiddenStates<T>(B, P, hidden.dim);
    out.mask = Mask(B, P, 0);
    out.kept_indices.assign(B, {});
    for (int b = 0; b < B; ++b) {
        for (int p = 0; p < P; ++p) {
            const int lo = p * window;
            const int hi = std::min(S, lo + window);
            int real = 0;
            for (int s = lo; s < hi; ++s) real += mask.at(b, s);
            const bool all_members = real == 0;
            auto dst = out.hidden.row(b, p);
            int n = 0;
            for (int s = lo; s < hi; ++s) {
                if (!all_members && !mask.at(b, s)) continue;
                if (kind == Kind::max_pool) {
                    dst = n == 0 ? Vec<T>(hidden.row(b, s)) : Vec<T>(dst.cwiseMax(hidden.row(b, s)));
                } else {
                    dst += hidden.row(b, s);
                }
                ++n;
            }
            if (kind == Kind::avg_pool) dst /= static_cast<T>(n);
            out.mask.at(b, p) = all_members ? 0 : 1;
            out.kept_indices[b].push_back(lo);
        }
    }
    return out;
}

template <typename T>
PruneResult<T> apply_strategy(const PruneStrategy& strategy, const HiddenStates<T>& hidden,
                              const AttentionTensor<T>& attention, const Mask& mask) {
    switch (strategy.kind) {
        case Kind::rastp: {
            const auto scores = score_tokens(hidden, attention, mask);
            return select_and_gather(hidden, mask, scores.scores, strategy.rho);
        }
        case Kind::l2norm: return baseline_l2_select(hidden, mask, strategy.rho);
        case Kind::max_pool:
        case Kind::avg_pool: return baseline_pool(hidden, mask, strategy.kind, strategy.pool_window);
        case Kind::none: break;
    }
    std::vector<std::vector<int>> all(hidden.batch, std::vector<int>(hidden.seq));
    for (auto& row : all) std::iota(row.begin(), row.end(), 0);
    return gather(hidden, mask, std::move(all), Kind::none);
}

template <typename T>
Mat<T> backprop(const PruneResult<T>& result, const HiddenStates<T>& source, const Mask& source_mask,
                const Mat<T>& grad_pruned) {
    const int B = source.batch;
    const int S = source.seq;
    const int K = result.hidden.seq;
    Mat<T> grad = Mat<T>::Zero(source.values.rows(), source.values.cols());
    if (!is_pooling(result.kind)) {
        for (int b = 0; b < B; ++b) {
            for (int k = 0; k < K; ++k) {
                grad.row(static_cast<Eigen::Index>(b) * S + result.kept_indices[b][k]) +=
                    grad_pruned.row(static_cast<Eigen::Index>(b) * K + k);
            }
        }
        return grad;
    }
    const int w = result.window;
    for (int b = 0; b < B; ++b) {
        for (int p = 0; p < K; ++p) {
            const int lo = p * w;
            const int hi = std::min(S, lo + w);
            const bool all_members = result.mask.at(b, p) == 0;
            const auto g = grad_pruned.row(static_cast<Eigen::Index>(b) * K + p);
            std::vector<int> members;
            for (int s = lo; s < hi; ++s) {
                if (all_members || source_mask.at(b, s)) members.push_back(s);
            }
            if (result.kind == Kind::avg_pool) {
                for (int s : members) grad.row(static_cast<Eigen::Index>(b) * S + s) += g / static_cast<T>(members.size());
                continue;
            }
            // max pool: each feature routes to the first member attaining the max
            for (Eigen::Index j = 0; j < source.values.cols(); ++j) {
                int arg = members.front();
                for (int s : members) {
                    if (source.row(b, s)(j) > source.row(b, arg)(j)) arg = s;
                }
                grad(static_cast<Eigen::Index>(b) * S + arg, j) += g(j);
            }
        }
    }
    return grad;
}

template <typename T>
std::vector<std::uint8_t> contributing_rows(const PruneResult<T>& result, const Mask& source_mask) {
    const int B = source_mask.batch;
    const int S = source_mask.seq;
    std::vector<std::uint8_t> used(static_cast<std::size_t>(B) * S, 0);
    if (!is_pooling(result.kind)) {
        for (int b = 0; b < B; ++b) {
            for (int s : result.kept_indices[b]) used[static_cast<std::size_t>(b) * S + s] = 1;
        }
        return used;
    }
    for (int b = 0; b < B; ++b) {
        for (int p = 0; p < result.hidden.seq; ++p) {
            const int lo = p * result.window;
            const int hi = std::min(S, lo + result.window);
            const bool all_members = result.mask.at(b, p) == 0;
            for (int s = lo; s < hi; ++s) {
                if (all_members || source_mask.at(b, s)) used[static_cast<std::size_t>(b) * S + s] = 1;
            }
        }
    }
    return used;
}

#define RASTP_INSTANTIATE(T)                                                                                   \
    template ImportanceScores<T> score_tokens(const HiddenStates<T>&, const AttentionTensor<T>&, const Mask&); \
    template PruneResult<T> select_and_gather(const HiddenStates<T>&, const Mask&, const std::vector<T>&,      \
                                              double);                                                         \
    template PruneResult<T> baseline_l2_select(const HiddenStates<T>&, const Mask&, double);                   \
    template PruneResult<T> baseline_pool(const HiddenStates<T>&, const Mask&, Kind, int);                     \
    template PruneResult<T> apply_strategy(const PruneStrategy&, const HiddenStates<T>&,                       \
                                           const AttentionTensor<T>&, const Mask&);                            \
    template Mat<T> backprop(const PruneResult<T>&, const HiddenStates<T>&, const Mask&, const Mat<T>&);       \
    template std::vector<std::uint8_t> contributing_rows(const PruneResult<T>&, const Mask&);

RASTP_INSTANTIATE(float)
RASTP_INSTANTIATE(double)
#undef RASTP_INSTANTIATE

}  // namespace rastp::prune
