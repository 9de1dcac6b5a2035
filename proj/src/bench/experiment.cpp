// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#include "rastp/bench/experiment.hpp"

#include <fmt/format.h>

#include "rastp/sid/embedding_io.hpp"

namespace rastp::bench {

train::DataConfig data_config(const Settings& s) {
    train::DataConfig c;
    c.levels = s.integer("levels");
    c.width = s.integer("width");
    c.kmeans_iters = s.integer("kmeans_iters");
    c.tokenizer_seed = s.seed("tokenizer_seed");
    c.max_seq = s.integer("max_seq");
    c.min_interactions = s.integer("min_interactions");
    c.single_target = s.flag("single_target");
    c.disambiguate = s.flag("disambiguate");
    return c;
}

model::ModelConfig model_base(const Settings& s) {
    model::ModelConfig c;
    c.d_model = s.integer("d_model");
    c.n_heads = s.integer("n_heads");
    c.d_mlp = s.integer("d_mlp");
    c.n_enc_layers = s.integer("n_enc_layers");
    c.n_dec_layers = s.integer("n_dec_layers");
    return c;
}

train::TrainConfig train_config(const Settings& s) {
    train::TrainConfig c;
    c.strategy.kind = prune::parse_kind(s.text("strategy"));
    c.strategy.rho = s.real("rho");
    c.strategy.pool_window = s.integer("pool_window");
    c.prune_layer = s.integer("prune_layer");
    c.lr = s.real("lr");
    c.weight_decay = s.real("weight_decay");
    c.dropout = s.real("dropout");
    c.batch_size = s.integer("batch_size");
    c.max_steps = s.integer("max_steps");
    c.valid_interval = s.integer("valid_interval");
    c.patience = s.integer("patience");
    c.seed = s.seed("seed");
    c.beam = s.integer("beam");
    c.eval_prune = s.flag("eval_prune");
    c.valid_subsample = s.integer("valid_subsample");
    c.eval_batch = s.integer("eval_batch");
    return c;
}

data::SynthOptions synth_options(const Settings& s) {
    data::SynthOptions o;
    o.cluster_spread = s.real("synth_spread");
    o.in_cluster = s.real("synth_in_cluster");
    o.max_stride = s.integer("synth_max_stride");
    o.min_length = s.integer("synth_min_length");
    o.max_length = s.integer("synth_max_length");
    return o;
}

Corpus load_corpus(const Settings& s) {
    const auto& log_path = s.text("interactions");
    const auto& item_path = s.text("items");
    require(log_path.empty() == item_path.empty(), "set both 'interactions' and 'items', or neither to synthesize");
    if (!log_path.empty()) {
        return {data::load_interactions(log_path), sid::load_embeddings(item_path),
                fmt::format("{} + {}", log_path, item_path)};
    }
    auto synth = data::synth_corpus(s.integer("synth_users"), s.integer("synth_items"), s.integer("synth_clusters"),
                                    s.integer("synth_d_feat"), s.seed("synth_seed"), synth_options(s));
    return {std::move(synth.log), std::move(synth.embeddings), "synthetic"};
}

train::PreparedData prepare(const Corpus& corpus, const Settings& s) {
    const auto cfg = data_config(s);
    const auto& books = s.text("codebooks");
    if (books.empty()) return train::prepare_data(corpus.log, corpus.items, cfg);
    auto loaded = sid::load_codebooks(books);
    require(loaded.fingerprint == sid::corpus_fingerprint(corpus.items),
            fmt::format("codebooks '{}' were fitted on a different item corpus", books));
    return train::prepare_data(corpus.log, corpus.items, cfg, std::move(loaded));
}

RunSummary run_once(const train::PreparedData& data, const Settings& s, const train::ValidationHook& hook,
                    std::optional<train::ExperimentResult>* full) {
    const auto model_cfg = train::model_config_for(data, data_config(s), model_base(s));
    auto result = train::run_experiment(data, model_cfg, train_config(s), hook);
    RunSummary out;
    out.test = result.test;
    out.valid = result.trained.report;
    out.popularity = result.popularity;
    out.timing = train::summarize_steps(result.trained.step_ms, s.integer("timing_warmup"), s.integer("timing_window"));
    out.best_step = result.trained.best_step;
    if (full != nullptr) full->emplace(std::move(result));
    return out;
}

nlohmann::json metrics_json(const RunSummary& run) {
    auto strip = [](const train::MetricsReport& r) {
        auto j = train::to_json(r);
        j.erase("timing");
        j.erase("steps_run");
        return j;
    };
    return {
        {"test", strip(run.test)},
        {"best_valid", strip(run.valid)},
        {"popularity_baseline", strip(run.popularity)},
        {"best_step", run.best_step},
        {"steps_run", run.test.steps_run},
        {"timing",
         {{"wall_step_ms", run.timing.median_of_means},
          {"wall_step_ms_mean", run.timing.mean},
          {"wall_step_ms_std", run.timing.stddev},
          {"timed_steps", run.timing.samples}}},
    };
}

}  // namespace rastp::bench
