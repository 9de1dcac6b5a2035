// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "rastp/data/synth.hpp"
#include "rastp/model/config.hpp"
#include "rastp/train/pipeline.hpp"

using namespace rastp;
using namespace rastp::train;

namespace {

struct Fixture {
    DataConfig data_cfg;
    PreparedData data;
    model::ModelConfig model_cfg;
};

Fixture make_fixture(int clusters = 4, std::uint64_t seed = 3) {
    data::SynthOptions opt;
    opt.min_length = 6;
    opt.max_length = 12;
    const auto corpus = data::synth_corpus(80, 48, clusters, 6, seed, opt);
    Fixture f;
    f.data_cfg.levels = 2;
    f.data_cfg.width = 8;
    f.data_cfg.kmeans_iters = 10;
    f.data_cfg.max_seq = 24;
    f.data = prepare_data(corpus.log, corpus.embeddings, f.data_cfg);
    model::ModelConfig base;
    base.d_model = 16;
    base.n_heads = 2;
    base.d_mlp = 32;
    base.n_enc_layers = 2;
    base.n_dec_layers = 1;
    f.model_cfg = model_config_for(f.data, f.data_cfg, base);
    return f;
}

TrainConfig quick_config() {
    TrainConfig c;
    c.batch_size = 16;
    c.max_steps = 40;
    c.valid_interval = 20;
    c.dropout = 0.0;
    c.prune_layer = 1;
    c.lr = 3e-3;
    c.seed = 5;
    return c;
}

sid::SidIndex toy_index() {
    // Four sequences; (0,0) holds two items, the second more popular.
    const std::vector<std::string> ids = {"a", "b", "c", "d", "e"};
    const std::vector<sid::SidSequence> codes = {{{0, 0}}, {{0, 0}}, {{0, 1}}, {{1, 0}}, {{1, 1}}};
    const std::vector<double> pop = {1.0, 5.0, 0.0, 0.0, 0.0};
    return sid::SidIndex::from_codes(ids, codes, 2, pop);
}

}  // namespace

TEST_CASE("ranking metrics on hand-enumerated fixtures") {
    const std::vector<int> top = {1};
    auto m = ranking_metrics(top);
    CHECK(m.recall[5] == 1.0);
    CHECK(m.ndcg[5] == 1.0);

    const std::vector<int> third = {3};
    CHECK(ranking_metrics(third).ndcg[5] == 0.5);

    // Ten users; values computed independently with a calculator script.
    const std::vector<int> ranks = {1, 3, 0, 2, 11, 10, 5, 6, 4, 7};
    m = ranking_metrics(ranks);
    CHECK(m.recall[5] == 0.5);
    CHECK(m.recall[10] == 0.8);
    CHECK(std::abs(m.ndcg[5] - 0.29484591188793924) <= 1e-15);
    CHECK(std::abs(m.ndcg[10] - 0.39270644656386355) <= 1e-15);
    CHECK(m.users == 10);
    CHECK(m.consistent());

    MetricsReport broken = m;
    broken.ndcg[5] = 0.9;
    CHECK_FALSE(broken.consistent());
}

TEST_CASE("generated sequences expand into popularity-ordered buckets") {
    const auto index = toy_index();
    const std::vector<model::Hypothesis> hyps = {{{{1, 1}}, -0.1}, {{{0, 0}}, -0.5}, {{{0, 1}}, -0.9}};
    const auto ranked = expand_ranking(hyps, index, 10);
    CHECK(ranked == std::vector<int>{4, 1, 0, 2});
    CHECK(expand_ranking(hyps, index, 2) == std::vector<int>{4, 1});
    CHECK(rank_of(ranked, 0) == 3);
    CHECK(rank_of(ranked, 3) == 0);
}

TEST_CASE("popularity baseline ranks by training counts") {
    const std::vector<double> counts = {3, 9, 9, 1};
    std::vector<data::SequenceExample> ex(3);
    ex[0].target_item = 1;
    ex[1].target_item = 2;
    ex[2].target_item = 3;
    const std::vector<int> ks = {1, 2};
    const auto m = popularity_baseline(counts, ex, ks);
    CHECK(m.recall.at(1) == doctest::Approx(1.0 / 3));
    CHECK(m.recall.at(2) == doctest::Approx(2.0 / 3));
}

TEST_CASE("timing summary uses warmup and median of window means") {
    std::vector<double> t = {100, 100, 1, 2, 3, 10, 20, 30, 5, 5, 5};
    const auto s = summarize_steps(t, 2, 3);
    CHECK(s.samples == 9);
    CHECK(s.median_of_means == doctest::Approx(5.0));
    CHECK(s.mean == doctest::Approx(81.0 / 9));
    CHECK(summarize_steps(t, 100, 3).samples == 0);
    const std::vector<double> few = {4, 6};
    CHECK(summarize_steps(few, 0, 50).median_of_means == doctest::Approx(5.0));
}

TEST_CASE("rho = 1 pruning trains and evaluates exactly like no pruning") {
    const auto f = make_fixture();
    auto a_cfg = quick_config();
    auto b_cfg = a_cfg;
    b_cfg.strategy = {prune::Kind::rastp, 1.0, 2};
    const auto a = run_experiment(f.data, f.model_cfg, a_cfg);
    const auto b = run_experiment(f.data, f.model_cfg, b_cfg);
    CHECK(a.trained.losses == b.trained.losses);
    CHECK(a.test.recall == b.test.recall);
    CHECK(a.test.ndcg == b.test.ndcg);
    CHECK(a.test.consistent());
}

TEST_CASE("patience 1 with a frozen model stops after two validations") {
    const auto f = make_fixture();
    auto cfg = quick_config();
    cfg.lr = 1e-30;
    cfg.weight_decay = 0.0;
    cfg.patience = 1;
    cfg.max_steps = 200;
    cfg.valid_interval = 10;
    std::vector<ValidationRecord> seen;
    const auto r = run_experiment(f.data, f.model_cfg, cfg, [&](const ValidationRecord& v) { seen.push_back(v); });
    REQUIRE(r.trained.run_log.size() == 2);
    CHECK(seen.size() == 2);
    CHECK(r.trained.report.steps_run == 20);
    CHECK(r.trained.best_step == 10);
}

TEST_CASE("best checkpoint dominates later validations and round-trips") {
    const auto f = make_fixture();
    auto cfg = quick_config();
    cfg.max_steps = 60;
    cfg.valid_interval = 10;
    cfg.patience = 2;
    cfg.strategy = {prune::Kind::rastp, 0.7, 2};
    const auto r = run_experiment(f.data, f.model_cfg, cfg);
    double best = -1.0;
    for (const auto& v : r.trained.run_log) {
        if (v.step == r.trained.best_step) best = v.recall5;
    }
    REQUIRE(best >= 0.0);
    for (const auto& v : r.trained.run_log) {
        if (v.step > r.trained.best_step) CHECK(v.recall5 <= best);
    }
    CHECK(r.trained.report.recall.at(5) == best);
    CHECK(r.trained.run_log.back().wall_step_ms_mean > 0.0);

    const auto path = std::filesystem::temp_directory_path() / "rastp_train_ckpt.bin";
    model::save_checkpoint(path, r.trained.checkpoint);
    const auto back = model::load_checkpoint(path);
    const model::Seq2Seq<float> reloaded(back.config, back.params);
    const auto eval_cfg = eval_config_for(cfg);
    const auto again = evaluate(reloaded, f.data.test, f.data.index, eval_cfg);
    CHECK(again.recall == r.test.recall);
    CHECK(again.ndcg == r.test.ndcg);
}

TEST_CASE("training on a single-cluster corpus beats the uniform loss") {
    const auto f = make_fixture(1, 8);
    auto cfg = quick_config();
    cfg.max_steps = 500;
    cfg.valid_interval = 500;
    const auto r = run_experiment(f.data, f.model_cfg, cfg);
    double tail = 0.0;
    for (std::size_t i = r.trained.losses.size() - 50; i < r.trained.losses.size(); ++i) tail += r.trained.losses[i];
    CHECK(tail / 50 < f.data_cfg.levels * std::log(static_cast<double>(f.model_cfg.vocab_size)));
}

TEST_CASE("divergence and bad settings are reported") {
    const auto f = make_fixture();
    auto m = model::Seq2Seq<float>::create(f.model_cfg, 1);
    m.params().out_proj(0, 0) = std::numeric_limits<float>::quiet_NaN();
    auto cfg = quick_config();
    CHECK_THROWS_WITH_AS(train::train(cfg, m, {&f.data.index, f.data.train, f.data.valid}), doctest::Contains("step 1"),
                         Error);

    auto bad = quick_config();
    bad.prune_layer = 3;
    CHECK_THROWS_AS(bad.validate(f.model_cfg), Error);
    bad = quick_config();
    bad.patience = 0;
    CHECK_THROWS_AS(bad.validate(f.model_cfg), Error);

    EvalConfig ec;
    ec.beam = 5;
    const model::Seq2Seq<float> fresh = model::Seq2Seq<float>::create(f.model_cfg, 2);
    CHECK_THROWS_AS(evaluate(fresh, f.data.test, f.data.index, ec), Error);
}
