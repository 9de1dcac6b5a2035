// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#include "rastp/train/pipeline.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "rastp/core/error.hpp"
#include "rastp/model/config.hpp"

namespace rastp::train {

PreparedData prepare_data(const data::InteractionLog& log, const std::vector<sid::ItemEmbedding>& embeddings,
                          const DataConfig& config) {
    auto books = sid::fit_codebooks(embeddings, config.levels, config.width, config.kmeans_iters,
                                    config.tokenizer_seed);
    return prepare_data(log, embeddings, config, std::move(books));
}

PreparedData prepare_data(const data::InteractionLog& log, const std::vector<sid::ItemEmbedding>& embeddings,
                          const DataConfig& config, sid::SidCodebooks codebooks) {
    require(codebooks.levels == config.levels && codebooks.width == config.width,
            fmt::format("codebooks are {}x{} but the run asks for {}x{}", codebooks.levels, codebooks.width,
                        config.levels, config.width));
    PreparedData out;
    out.splits = data::split_leave_one_out(log, config.min_interactions);
    require(!out.splits.empty(), "no users survive the interaction filter");

    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < embeddings.size(); ++i) position.emplace(embeddings[i].item_id, i);
    out.popularity.assign(embeddings.size(), 0.0);
    for (const auto& [item, count] : data::train_item_counts(out.splits)) {
        const auto it = position.find(item);
        require(it != position.end(), fmt::format("item '{}' has no embedding", item));
        out.popularity[it->second] = static_cast<double>(count);
    }
    out.codebooks = std::move(codebooks);
    out.index = sid::SidIndex::build(out.codebooks, embeddings, out.popularity, config.disambiguate);
    out.train = data::make_examples(out.splits, out.index, config.max_seq, data::Phase::train, config.single_target);
    out.valid = data::make_examples(out.splits, out.index, config.max_seq, data::Phase::valid);
    out.test = data::make_examples(out.splits, out.index, config.max_seq, data::Phase::test);
    require(!out.train.empty(), "no training examples after splitting");

    out.manifest = data::split_manifest(log, out.splits, config.min_interactions);
    out.manifest["train_examples"] = out.train.size();
    out.manifest["valid_examples"] = out.valid.size();
    out.manifest["test_examples"] = out.test.size();
    out.manifest["sid_sequences"] = out.index.num_sequences();
    out.manifest["sid_items"] = out.index.num_items();
    out.manifest["codebook_fingerprint"] = out.codebooks.fingerprint;
    return out;
}

model::ModelConfig model_config_for(const PreparedData& data, const DataConfig& config, model::ModelConfig base) {
    base.vocab_size = model::vocab_size_for(data.index.levels(), data.index.width());
    base.max_target = data.index.levels();
    base.max_seq = (config.max_seq / data.index.levels()) * data.index.levels();
    return base;
}

ExperimentResult run_experiment(const PreparedData& data, const model::ModelConfig& model_config,
                                const TrainConfig& config, const ValidationHook& on_validation) {
    auto model = model::Seq2Seq<float>::create(model_config, config.seed);
    ExperimentResult out{train(config, std::move(model), {&data.index, data.train, data.valid}, on_validation), {}, {}};
    auto eval_cfg = eval_config_for(config);
    out.test = evaluate(out.trained.model, data.test, data.index, eval_cfg);
    out.test.wall_step_ms_mean = out.trained.report.wall_step_ms_mean;
    out.test.wall_step_ms_std = out.trained.report.wall_step_ms_std;
    out.test.steps_run = out.trained.report.steps_run;
    out.popularity = popularity_baseline(data.popularity, data.test, eval_cfg.ks);
    return out;
}

}  // namespace rastp::train
