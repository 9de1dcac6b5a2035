// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "rastp/prune/pruner.hpp"

#include "oracles.hpp"

using namespace rastp;
using namespace rastp::testing;
using namespace rastp::prune;

TEST_CASE("score_tokens matches the nested-loop reference") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 100; ++trial) {
        const auto c = random_case(rng, 3, 4, 9, 5);
        const auto scores = score_tokens(c.hidden, c.attention, c.mask);
        const auto ref = naive_scores(c);
        for (std::size_t i = 0; i < ref.size(); ++i) {
            if (std::isinf(ref[i])) {
                CHECK(std::isinf(scores.scores[i]));
                CHECK(scores.scores[i] < 0);
            } else {
                CHECK(std::abs(scores.scores[i] - ref[i]) <= 1e-6);
                CHECK(scores.scores[i] == doctest::Approx(scores.saliency[i] * scores.centrality[i]));
            }
        }
    }
}

TEST_CASE("uniform attention gives every real token centrality equal to the head count") {
    const int B = 1, H = 3, S = 6, U = 4;
    HiddenStates<double> hidden(B, S, 2);
    for (int s = 0; s < S; ++s) hidden.row(0, s) << s + 1.0, -(s + 1.0);
    Mask mask(B, S, 0);
    for (int s = 0; s < U; ++s) mask.at(0, s) = 1;
    AttentionTensor<double> attention(B, H, S);
    for (int h = 0; h < H; ++h) {
        for (int q = 0; q < S; ++q) {
            for (int k = 0; k < U; ++k) attention.block(0, h)(q, k) = 1.0 / U;
        }
    }
    const auto scores = score_tokens(hidden, attention, mask);
    for (int s = 0; s < U; ++s) {
        CHECK(scores.centrality[s] == doctest::Approx(H));
        CHECK(scores.at(0, s) == doctest::Approx(H * 2.0 * (s + 1)));
    }
    const auto kept = select_and_gather(hidden, mask, scores.scores, 0.5);
    CHECK(kept.kept_indices[0] == std::vector<int>{1, 2, 3});
}

TEST_CASE("an all-zero hidden row scores zero") {
    std::mt19937_64 rng(3);
    auto c = random_case(rng, 1, 2, 5, 4);
    c.mask = Mask(1, 5, 1);
    c.hidden.row(0, 2).setZero();
    const auto scores = score_tokens(c.hidden, c.attention, c.mask);
    CHECK(scores.at(0, 2) == 0.0);
}

TEST_CASE("non-finite hidden states are rejected") {
    std::mt19937_64 rng(3);
    auto c = random_case(rng, 1, 2, 5, 4);
    c.hidden.values(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(score_tokens(c.hidden, c.attention, c.mask), Error);
}

TEST_CASE("select_and_gather worked example and identity") {
    HiddenStates<double> hidden(1, 4, 2);
    for (int s = 0; s < 4; ++s) hidden.row(0, s) << s, 10.0 * s;
    const Mask mask(1, 4, 1);
    const std::vector<double> scores = {0.1, 0.9, 0.9, 0.2};
    const auto half = select_and_gather(hidden, mask, scores, 0.5);
    CHECK(half.keep_count == 2);
    CHECK(half.kept_indices[0] == std::vector<int>{1, 2});
    CHECK(half.hidden.row(0, 0)(1) == 10.0);

    const auto all = select_and_gather(hidden, mask, scores, 1.0);
    CHECK(all.kept_indices[0] == std::vector<int>{0, 1, 2, 3});
    CHECK(all.hidden.values == hidden.values);

    CHECK_THROWS_AS(select_and_gather(hidden, mask, scores, 0.0), Error);
    CHECK_THROWS_AS(select_and_gather(hidden, mask, scores, 1.5), Error);
}

TEST_CASE("selection matches the full-sort reference on random score vectors") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> coarse(0, 5);  // coarse values force ties
    std::uniform_real_distribution<double> rho_dist(0.05, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int S = 3 + trial % 17;
        HiddenStates<double> hidden(1, S, 3);
        hidden.values.setRandom();
        Mask mask(1, S, 1);
        std::vector<double> scores(S);
        for (auto& v : scores) v = trial % 2 ? coarse(rng) : std::uniform_real_distribution<double>(0, 1)(rng);
        const double rho = rho_dist(rng);
        const auto out = select_and_gather(hidden, mask, scores, rho);
        const int K = keep_count(S, rho);
        CHECK(out.kept_indices[0] == sort_oracle(scores, K));
        for (int k = 0; k < K; ++k) {
            CHECK(out.hidden.row(0, k) == hidden.row(0, out.kept_indices[0][k]));  // bit-identical copy
        }
    }
}

TEST_CASE("masked positions are never kept while real tokens remain and only fill short rows") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto c = random_case(rng, 4, 2, 10, 3);
        const auto scores = score_tokens(c.hidden, c.attention, c.mask);
        const auto out = select_and_gather(c.hidden, c.mask, scores.scores, 0.6);
        for (int b = 0; b < 4; ++b) {
            const auto& kept = out.kept_indices[b];
            CHECK(std::is_sorted(kept.begin(), kept.end()));
            CHECK(std::adjacent_find(kept.begin(), kept.end()) == kept.end());
            const int real = c.mask.count(b);
            int kept_real = 0;
            for (int s : kept) kept_real += c.mask.at(b, s);
            CHECK(kept_real == std::min(real, out.keep_count));
            for (int k = 0; k < out.keep_count; ++k) CHECK(out.mask.at(b, k) == c.mask.at(b, kept[k]));
        }
    }
}

TEST_CASE("scaling a row by a positive constant leaves the selection unchanged") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        auto c = random_case(rng, 2, 3, 12, 4);
        const auto base = select_and_gather(c.hidden, c.mask, score_tokens(c.hidden, c.attention, c.mask).scores, 0.5);
        c.hidden.values.topRows(12) *= 3.7;
        const auto scaled =
            select_and_gather(c.hidden, c.mask, score_tokens(c.hidden, c.attention, c.mask).scores, 0.5);
        CHECK(base.kept_indices == scaled.kept_indices);
    }
}

TEST_CASE("l2 selection keeps the largest-norm tokens") {
    HiddenStates<double> hidden(1, 3, 3);
    hidden.row(0, 0) << 3, 0, 0;
    hidden.row(0, 1) << 0, 1, 0;
    hidden.row(0, 2) << 0, 0, 2;
    const Mask mask(1, 3, 1);
    CHECK(baseline_l2_select(hidden, mask, 2.0 / 3.0).kept_indices[0] == std::vector<int>{0, 2});
    CHECK(baseline_l2_select(hidden, mask, 1.0).hidden.values == hidden.values);

    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        HiddenStates<double> h(1, 15, 4);
        h.values = Mat<double>::Random(15, 4);
        std::vector<double> norms(15);
        for (int s = 0; s < 15; ++s) norms[s] = h.row(0, s).norm();
        CHECK(baseline_l2_select(h, Mask(1, 15, 1), 0.4).kept_indices[0] == sort_oracle(norms, 6));
    }
}

TEST_CASE("pooling baselines") {
    HiddenStates<double> hidden(1, 6, 2);
    for (int s = 0; s < 6; ++s) hidden.row(0, s) << (s % 2 ? s : -s), 2.0 * s;
    const Mask full(1, 6, 1);

    const auto id = baseline_pool(hidden, full, Kind::max_pool, 1);
    CHECK(id.hidden.values == hidden.values);

    const auto mx = baseline_pool(hidden, full, Kind::max_pool, 2);
    const auto av = baseline_pool(hidden, full, Kind::avg_pool, 2);
    REQUIRE(mx.hidden.seq == 3);
    for (int p = 0; p < 3; ++p) {
        const auto a = hidden.row(0, 2 * p);
        const auto b = hidden.row(0, 2 * p + 1);
        for (int j = 0; j < 2; ++j) {
            CHECK(mx.hidden.row(0, p)(j) == std::max(a(j), b(j)));
            CHECK(av.hidden.row(0, p)(j) == doctest::Approx((a(j) + b(j)) / 2));
        }
        CHECK(mx.mask.at(0, p) == 1);
    }

    Mask partial(1, 6, 0);
    for (int s = 0; s < 4; ++s) partial.at(0, s) = 1;
    const auto whole = baseline_pool(hidden, partial, Kind::avg_pool, 6);
    REQUIRE(whole.hidden.seq == 1);
    for (int j = 0; j < 2; ++j) {
        double mean = 0;
        for (int s = 0; s < 4; ++s) mean += hidden.row(0, s)(j) / 4;
        CHECK(whole.hidden.row(0, 0)(j) == doctest::Approx(mean));
    }

    const auto trailing = baseline_pool(hidden, partial, Kind::max_pool, 3);
    REQUIRE(trailing.hidden.seq == 2);
    CHECK(trailing.mask.at(0, 1) == 1);  // window {3,4,5} has one real member
    CHECK(trailing.hidden.row(0, 1) == hidden.row(0, 3));
}

TEST_CASE("backprop equals the finite-difference gradient of a linear read-out") {
    std::mt19937_64 rng(4);
    for (Kind kind : {Kind::rastp, Kind::l2norm, Kind::max_pool, Kind::avg_pool}) {
        auto c = random_case(rng, 2, 2, 7, 3);
        PruneStrategy strategy{kind, 0.6, 3};
        auto result = apply_strategy(strategy, c.hidden, c.attention, c.mask);
        Mat<double> w = Mat<double>::Random(result.hidden.values.rows(), result.hidden.values.cols());
        const Mat<double> grad = backprop(result, c.hidden, c.mask, w);
        const double eps = 1e-6;
        for (Eigen::Index i = 0; i < c.hidden.values.size(); ++i) {
            auto plus = c.hidden;
            auto minus = c.hidden;
            plus.values.data()[i] += eps;
            minus.values.data()[i] -= eps;
            // hold the selection fixed, as the training pass does
            auto fp = apply_strategy(strategy, plus, c.attention, c.mask);
            auto fm = apply_strategy(strategy, minus, c.attention, c.mask);
            if (fp.kept_indices != result.kept_indices || fm.kept_indices != result.kept_indices) continue;
            const double fd =
                ((fp.hidden.values.array() * w.array()).sum() - (fm.hidden.values.array() * w.array()).sum()) /
                (2 * eps);
            CHECK(grad.data()[i] == doctest::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("strategy names and validation") {
    CHECK(parse_kind("rastp") == Kind::rastp);
    CHECK(parse_kind("l2norm") == Kind::l2norm);
    CHECK(parse_kind("maxpool") == Kind::max_pool);
    CHECK(parse_kind("avgpool") == Kind::avg_pool);
    CHECK(parse_kind("none") == Kind::none);
    CHECK(to_string(Kind::max_pool) == "maxpool");
    CHECK_THROWS_AS(parse_kind("topk"), Error);
    CHECK(keep_count(120, 0.7) == 84);
    CHECK(keep_count(4, 0.1) == 1);
    CHECK_THROWS_AS((PruneStrategy{Kind::rastp, 0.1, 2}.validate(4)), Error);
    CHECK_THROWS_AS((PruneStrategy{Kind::avg_pool, 0.7, 1}.validate(4)), Error);
    CHECK_NOTHROW((PruneStrategy{Kind::rastp, 0.25, 2}.validate(4)));
}
