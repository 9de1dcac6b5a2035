// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "rastp/data/examples.hpp"
#include "rastp/data/interactions.hpp"
#include "rastp/sid/codebooks.hpp"
#include "rastp/sid/sid_index.hpp"
#include "rastp/train/trainer.hpp"

namespace rastp::train {

struct DataConfig {
    int levels = 3;
    int width = 32;
    int kmeans_iters = 25;
    std::uint64_t tokenizer_seed = 7;
    int max_seq = 120;
    int min_interactions = 5;
    bool single_target = false;
    bool disambiguate = false;
};

/// Everything derived from a log and item embeddings before training.
struct PreparedData {
    std::vector<data::UserSplit> splits;
    sid::SidCodebooks codebooks;
    sid::SidIndex index;
    std::vector<double> popularity;  // training interaction count per index item
    std::vector<data::SequenceExample> train;
    std::vector<data::SequenceExample> valid;
    std::vector<data::SequenceExample> test;
    nlohmann::json manifest;
};

/// Fits codebooks on the embeddings, splits the log and builds all examples.
PreparedData prepare_data(const data::InteractionLog& log, const std::vector<sid::ItemEmbedding>& embeddings,
                          const DataConfig& config);

/// Same as prepare_data but reuses already fitted codebooks.
PreparedData prepare_data(const data::InteractionLog& log, const std::vector<sid::ItemEmbedding>& embeddings,
                          const DataConfig& config, sid::SidCodebooks codebooks);

/// Copies `base` and fills the fields determined by the data.
model::ModelConfig model_config_for(const PreparedData& data, const DataConfig& config, model::ModelConfig base);

struct ExperimentResult {
    TrainResult trained;
    MetricsReport test;
    MetricsReport popularity;
};

/// Initializes a model from config.seed, trains it and scores the test rows.
ExperimentResult run_experiment(const PreparedData& data, const model::ModelConfig& model_config,
                                const TrainConfig& config, const ValidationHook& on_validation = {});

}  // namespace rastp::train
