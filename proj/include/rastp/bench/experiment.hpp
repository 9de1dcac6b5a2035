// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rastp/bench/config.hpp"
#include "rastp/data/synth.hpp"
#include "rastp/train/pipeline.hpp"

namespace rastp::bench {

train::DataConfig data_config(const Settings& s);
model::ModelConfig model_base(const Settings& s);
train::TrainConfig train_config(const Settings& s);
data::SynthOptions synth_options(const Settings& s);

struct Corpus {
    data::InteractionLog log;
    std::vector<sid::ItemEmbedding> items;
    std::string source;  // "synthetic" or the input paths
};

/// Loads `interactions` and `items` when both are set, otherwise synthesizes.
Corpus load_corpus(const Settings& s);

/// Tokenizes (or loads `codebooks`), splits and builds examples.
train::PreparedData prepare(const Corpus& corpus, const Settings& s);

struct RunSummary {
    train::MetricsReport test;
    train::MetricsReport valid;  // best validation
    train::MetricsReport popularity;
    train::TimingSummary timing;  // after warmup, median of window means
    long long best_step = 0;
};

/// Trains and evaluates once with the settings as given.
RunSummary run_once(const train::PreparedData& data, const Settings& s, const train::ValidationHook& hook = {},
                    std::optional<train::ExperimentResult>* full = nullptr);

/// Metric record for a run. Timing values sit under "timing" so two runs can
/// be compared after removing that key.
nlohmann::json metrics_json(const RunSummary& run);

}  // namespace rastp::bench
