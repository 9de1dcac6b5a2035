// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "model_oracles.hpp"
#include "rastp/model/adam.hpp"
#include "rastp/model/checkpoint.hpp"

using namespace rastp;
using namespace rastp::model;
using rastp::testing::random_batch;
using rastp::testing::random_targets;
using rastp::testing::tiny_config;

TEST_CASE("attention rows are normalized over real keys and zero on pads") {
    std::mt19937_64 rng(1);
    const auto m = Seq2Seq<float>::create(tiny_config(), 3);
    const auto batch = random_batch(rng, 5, 10, m.config().vocab_size);
    for (int layer = 1; layer <= 2; ++layer) {
        const auto out = m.encode_until(batch, layer);
        for (int b = 0; b < 5; ++b) {
            for (int h = 0; h < m.config().n_heads; ++h) {
                for (int q = 0; q < 10; ++q) {
                    if (!batch.mask.at(b, q)) continue;
                    double sum = 0.0;
                    for (int k = 0; k < 10; ++k) {
                        if (batch.mask.at(b, k)) {
                            sum += out.attention.at(b, h, q, k);
                        } else {
                            CHECK(out.attention.at(b, h, q, k) == 0.0f);
                        }
                    }
                    CHECK(std::abs(sum - 1.0) <= 1e-5);
                }
            }
        }
    }
}

TEST_CASE("a single real token attends only to itself") {
    const auto m = Seq2Seq<double>::create(tiny_config(), 4);
    TokenBatch batch(2, 5);
    batch.id(0, 0) = 3;
    batch.mask.at(0, 0) = 1;
    batch.id(1, 0) = 7;
    batch.mask.at(1, 0) = 1;
    const auto out = m.encode_until(batch, 1);
    for (int b = 0; b < 2; ++b) {
        for (int h = 0; h < 2; ++h) CHECK(out.attention.at(b, h, 0, 0) == 1.0);
    }
}

TEST_CASE("identical rows produce identical hidden states") {
    const auto m = Seq2Seq<double>::create(tiny_config(), 5);
    std::mt19937_64 rng(2);
    const auto one = random_batch(rng, 1, 8, m.config().vocab_size, 8);
    TokenBatch batch(3, 8);
    for (int b = 0; b < 3; ++b) {
        for (int s = 0; s < 8; ++s) {
            batch.id(b, s) = one.id(0, s);
            batch.mask.at(b, s) = 1;
        }
    }
    const auto h = m.encode(batch);
    CHECK(h.values.middleRows(0, 8) == h.values.middleRows(8, 8));
    CHECK(h.values.middleRows(0, 8) == h.values.middleRows(16, 8));
}

TEST_CASE("split forward equals the monolithic encoder at every layer") {
    auto cfg = tiny_config();
    cfg.n_enc_layers = 4;
    const auto m = Seq2Seq<float>::create(cfg, 6);
    std::mt19937_64 rng(3);
    const auto batch = random_batch(rng, 4, 12, cfg.vocab_size);
    const auto full = m.encode(batch);
    for (int p = 1; p <= 4; ++p) {
        const auto stage = m.encode_until(batch, p);
        const auto resumed = m.encode_resume(stage.hidden, batch.mask, p + 1);
        CHECK((resumed.values - full.values).cwiseAbs().maxCoeff() <= 1e-6f);
    }
    const auto last = m.encode_until(batch, 4);
    CHECK(m.encode_resume(last.hidden, batch.mask, 5).values == last.hidden.values);

    CHECK_THROWS_AS(m.encode_until(batch, 0), Error);
    CHECK_THROWS_AS(m.encode_until(batch, 5), Error);
    CHECK_THROWS_AS(m.encode_resume(last.hidden, Mask(4, 11, 1), 5), Error);
}

TEST_CASE("pruned sequences keep their shape through the remaining layers") {
    const auto m = Seq2Seq<double>::create(tiny_config(), 7);
    std::mt19937_64 rng(4);
    const auto batch = random_batch(rng, 3, 10, m.config().vocab_size);
    const auto enc = encode_with_strategy(m, batch, {prune::Kind::rastp, 0.5, 2}, 1);
    CHECK(enc.hidden.batch == 3);
    CHECK(enc.hidden.seq == 5);
    CHECK(enc.hidden.values.rows() == 15);
    CHECK(enc.hidden.values.cols() == 8);
}

TEST_CASE("appending pads leaves real positions untouched") {
    const auto m = Seq2Seq<double>::create(tiny_config(), 8);
    std::mt19937_64 rng(5);
    const auto batch = random_batch(rng, 3, 6, m.config().vocab_size);
    TokenBatch padded(3, 11);
    for (int b = 0; b < 3; ++b) {
        for (int s = 0; s < 6; ++s) {
            padded.id(b, s) = batch.id(b, s);
            padded.mask.at(b, s) = batch.mask.at(b, s);
        }
    }
    const auto a = m.encode(batch);
    const auto b = m.encode(padded);
    for (int r = 0; r < 3; ++r) {
        for (int s = 0; s < 6; ++s) {
            if (batch.mask.at(r, s)) CHECK((a.row(r, s) - b.row(r, s)).cwiseAbs().maxCoeff() <= 1e-6);
        }
    }
}

TEST_CASE("uniform logits give L * ln(V) per row") {
    auto cfg = tiny_config(3, 4);
    auto m = Seq2Seq<double>::create(cfg, 9);
    m.params().out_proj.setZero();
    std::mt19937_64 rng(6);
    const auto batch = random_batch(rng, 4, 8, cfg.vocab_size);
    const auto targets = random_targets(rng, 4, 3, 4);
    const auto enc = m.encode(batch);
    CHECK(m.decode_loss(enc, batch.mask, targets) == doctest::Approx(3 * std::log(cfg.vocab_size)).epsilon(1e-12));
}

TEST_CASE("mean loss is invariant to row order") {
    const auto m = Seq2Seq<double>::create(tiny_config(), 10);
    std::mt19937_64 rng(7);
    const auto batch = random_batch(rng, 4, 9, m.config().vocab_size);
    const auto targets = random_targets(rng, 4, 2, 4);
    const std::vector<int> perm = {2, 0, 3, 1};
    TokenBatch shuffled(4, 9);
    TargetTokens shuffled_targets(4);
    for (int r = 0; r < 4; ++r) {
        for (int s = 0; s < 9; ++s) {
            shuffled.id(r, s) = batch.id(perm[r], s);
            shuffled.mask.at(r, s) = batch.mask.at(perm[r], s);
        }
        shuffled_targets[r] = targets[perm[r]];
    }
    const double a = m.decode_loss(m.encode(batch), batch.mask, targets);
    const double b = m.decode_loss(m.encode(shuffled), shuffled.mask, shuffled_targets);
    CHECK(std::abs(a - b) <= 1e-9);
}

TEST_CASE("decode_loss rejects out-of-vocabulary targets") {
    const auto m = Seq2Seq<double>::create(tiny_config(), 11);
    std::mt19937_64 rng(8);
    const auto batch = random_batch(rng, 1, 4, m.config().vocab_size);
    CHECK_THROWS_AS(m.decode_loss(m.encode(batch), batch.mask, {{2, m.config().vocab_size}}), Error);
}

TEST_CASE("analytic gradients match central differences for every parameter group") {
    auto cfg = tiny_config();
    const auto m = Seq2Seq<double>::create(cfg, 12);
    std::mt19937_64 rng(9);
    const auto batch = random_batch(rng, 3, 10, cfg.vocab_size, 4);
    const auto targets = random_targets(rng, 3, 2, 4);
    const std::vector<std::pair<prune::PruneStrategy, int>> variants = {
        {{prune::Kind::none, 1.0, 2}, 1},
        {{prune::Kind::rastp, 0.6, 2}, 1},
        {{prune::Kind::rastp, 0.5, 2}, 2},
        {{prune::Kind::l2norm, 0.7, 2}, 1},
        {{prune::Kind::avg_pool, 1.0, 2}, 1},
        {{prune::Kind::max_pool, 1.0, 3}, 1},
    };
    for (const auto& [strategy, layer] : variants) {
        CAPTURE(prune::to_string(strategy.kind));
        CAPTURE(layer);
        const auto errors = testing::gradient_check(m, batch, targets, strategy, layer, 20, 1e-4, 13);
        for (const auto& [name, err] : errors) {
            CAPTURE(name);
            CHECK(err < 1e-3);
        }
    }
}

TEST_CASE("training loss equals the composed inference loss") {
    const auto m = Seq2Seq<double>::create(tiny_config(), 14);
    std::mt19937_64 rng(10);
    const auto batch = random_batch(rng, 4, 10, m.config().vocab_size);
    const auto targets = random_targets(rng, 4, 2, 4);
    for (auto kind : {prune::Kind::none, prune::Kind::rastp, prune::Kind::max_pool}) {
        const prune::PruneStrategy s{kind, 0.5, 2};
        auto grads = Params<double>::zeros(m.config());
        const double train = loss_and_grad(m, batch, targets, s, 1, nullptr, grads);
        CHECK(train == doctest::Approx(strategy_loss(m, batch, targets, s, 1)).epsilon(1e-12));
    }
}

TEST_CASE("rho = 1 pruning reproduces the unpruned loss and gradients exactly") {
    const auto m = Seq2Seq<float>::create(tiny_config(), 15);
    std::mt19937_64 rng(11);
    const auto batch = random_batch(rng, 4, 10, m.config().vocab_size);
    const auto targets = random_targets(rng, 4, 2, 4);
    auto g0 = Params<float>::zeros(m.config());
    auto g1 = Params<float>::zeros(m.config());
    const float a = loss_and_grad(m, batch, targets, {prune::Kind::none, 1.0, 2}, 1, nullptr, g0);
    const float b = loss_and_grad(m, batch, targets, {prune::Kind::rastp, 1.0, 2}, 1, nullptr, g1);
    CHECK(a == b);
    std::vector<Mat<float>> x, y;
    g0.for_each([&](const std::string&, const Mat<float>& t) { x.push_back(t); });
    g1.for_each([&](const std::string&, const Mat<float>& t) { y.push_back(t); });
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(x[i] == y[i]);
}

TEST_CASE("fixed seeds give bit-identical training losses") {
    auto cfg = tiny_config();
    cfg.dropout = 0.15;
    auto run = [&cfg] {
        auto m = Seq2Seq<float>::create(cfg, 16);
        Adam<float> opt(cfg, {});
        std::mt19937_64 data_rng(12);
        std::mt19937_64 drop_rng(13);
        std::vector<float> losses;
        for (int step = 0; step < 5; ++step) {
            const auto batch = random_batch(data_rng, 4, 10, cfg.vocab_size);
            const auto targets = random_targets(data_rng, 4, 2, 4);
            auto g = Params<float>::zeros(cfg);
            losses.push_back(loss_and_grad(m, batch, targets, {prune::Kind::rastp, 0.7, 2}, 1, &drop_rng, g));
            opt.step(m.params(), g);
        }
        return losses;
    };
    CHECK(run() == run());
}

TEST_CASE("beam search: single path, exhaustive ranking and greedy") {
    auto cfg = tiny_config(2, 4);
    const auto m = Seq2Seq<double>::create(cfg, 17);
    std::mt19937_64 rng(14);
    const auto batch = random_batch(rng, 3, 8, cfg.vocab_size);
    const auto enc = m.encode(batch);

    const auto single = sid::SidIndex::from_codes({"only"}, {sid::SidSequence{{2, 1}}}, 4);
    for (const auto& row : generate(m, enc, batch.mask, single, 5)) {
        REQUIRE(row.size() == 1);
        CHECK(row[0].sid.codes == std::vector<int>{2, 1});
    }

    const auto full = testing::full_index(2, 4);
    const int beam = cfg.vocab_size * cfg.vocab_size;
    const auto ranked = generate(m, enc, batch.mask, full, beam);
    for (int b = 0; b < 3; ++b) {
        const auto oracle = testing::exhaustive_ranking(m, enc, batch.mask, b, full);
        REQUIRE(ranked[b].size() == oracle.size());
        for (std::size_t i = 0; i < oracle.size(); ++i) {
            CHECK(ranked[b][i].sid == oracle[i].sid);
            CHECK(ranked[b][i].log_prob == doctest::Approx(oracle[i].log_prob).epsilon(1e-9));
        }
    }

    const auto greedy = generate(m, enc, batch.mask, full, 1);
    for (int b = 0; b < 3; ++b) {
        std::vector<int> prefix;
        for (int step = 0; step < 2; ++step) {
            const auto lp = m.next_token_logprobs(enc, batch.mask, {prefix}, {b});
            int best = 0;
            for (int c = 1; c < 4; ++c) {
                if (lp(0, sid_token(step, c, 4)) > lp(0, sid_token(step, best, 4))) best = c;
            }
            CHECK(greedy[b][0].sid.codes[step] == best);
            prefix.push_back(sid_token(step, best, 4));
        }
    }

    const auto empty = sid::SidIndex::from_codes({}, {}, 4);
    CHECK_THROWS_AS(generate(m, enc, batch.mask, empty, 3), Error);
}

TEST_CASE("checkpoints round-trip parameters exactly") {
    const auto m = Seq2Seq<float>::create(tiny_config(), 18);
    const auto path = std::filesystem::temp_directory_path() / "rastp_test_ckpt.bin";
    save_checkpoint(path, {m.config(), m.params(), 42, 7});
    const auto back = load_checkpoint(path);
    CHECK(back.config == m.config());
    CHECK(back.step == 42);
    CHECK(back.seed == 7);
    std::vector<Mat<float>> a, b;
    m.params().for_each([&](const std::string&, const Mat<float>& t) { a.push_back(t); });
    back.params.for_each([&](const std::string&, const Mat<float>& t) { b.push_back(t); });
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}
