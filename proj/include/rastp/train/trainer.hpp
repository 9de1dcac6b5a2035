// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "rastp/data/examples.hpp"
#include "rastp/model/adam.hpp"
#include "rastp/model/beam_search.hpp"
#include "rastp/model/checkpoint.hpp"
#include "rastp/model/transformer.hpp"
#include "rastp/prune/pruner.hpp"
#include "rastp/sid/sid_index.hpp"
#include "rastp/train/metrics.hpp"

namespace rastp::train {

struct TrainConfig {
    prune::PruneStrategy strategy;
    int prune_layer = 2;
    double lr = 1e-3;
    double weight_decay = 1e-4;
    double dropout = 0.1;
    int batch_size = 64;
    int max_steps = 2000;
    int valid_interval = 200;
    int patience = 10;
    std::uint64_t seed = 42;
    int beam = 20;
    bool eval_prune = true;     // keep the strategy active when generating
    int valid_subsample = 1000;  // validation rows drawn once per run (seeded)
    int eval_batch = 64;

    void validate(const model::ModelConfig& model) const;
};

/// Settings for the generation-based evaluation.
struct EvalConfig {
    prune::PruneStrategy strategy;
    int prune_layer = 1;
    int beam = 20;
    int batch = 64;
    std::vector<int> ks = kDefaultKs;
};
EvalConfig eval_config_for(const TrainConfig& config);

/// Ranked item list for one user: generated sequences in order, each
/// expanded into its collision bucket (most popular first), cut at `limit`.
std::vector<int> expand_ranking(std::span<const model::Hypothesis> hypotheses, const sid::SidIndex& index,
                                std::size_t limit);

/// 1-based rank of `target` inside `ranking`, or 0 when absent.
int rank_of(std::span<const int> ranking, int target);

/// Beam-generation evaluation; evaluates rows in order and aggregates by
/// summing then dividing.
MetricsReport evaluate(const model::Seq2Seq<float>& model, std::span<const data::SequenceExample> examples,
                       const sid::SidIndex& index, const EvalConfig& config);

/// Same list for everyone: items ordered by training interaction count
/// (descending, item index ascending on ties).
MetricsReport popularity_baseline(std::span<const double> item_counts, std::span<const data::SequenceExample> examples,
                                  std::span<const int> ks = kDefaultKs);

struct ValidationRecord {
    long long step = 0;
    double recall5 = 0.0;
    double wall_step_ms_mean = 0.0;
};
nlohmann::json to_json(const ValidationRecord& record);

struct TrainData {
    const sid::SidIndex* index = nullptr;
    std::span<const data::SequenceExample> train;
    std::span<const data::SequenceExample> valid;
};

struct TrainResult {
    model::Seq2Seq<float> model;     // parameters of the best validation checkpoint
    model::Checkpoint checkpoint;
    MetricsReport report;            // best validation metrics plus step timing
    std::vector<double> losses;      // per step
    std::vector<double> step_ms;     // per step, validation excluded
    std::vector<ValidationRecord> run_log;
    long long best_step = 0;
};

/// One optimizer step at a time over a shuffled, cycling training set. Batch
/// order and dropout draw from separate streams seeded by `config.seed`, so two
/// runners with the same seed see the same batches whatever their strategy.
class StepRunner {
public:
    StepRunner(const TrainConfig& config, model::Seq2Seq<float> initial,
               std::span<const data::SequenceExample> train, int sid_width);

    /// Runs one step and returns its loss. Throws naming the step on divergence.
    double step();
    double last_step_ms() const { return last_ms_; }
    long long steps_done() const { return steps_; }
    const model::Seq2Seq<float>& model() const { return model_; }

private:
    TrainConfig config_;
    model::Seq2Seq<float> model_;
    model::Adam<float> optimizer_;
    std::span<const data::SequenceExample> train_;
    int width_;
    std::mt19937_64 order_rng_;
    std::mt19937_64 dropout_rng_;
    std::vector<int> order_;
    std::size_t cursor_;
    model::Params<float> grads_;
    std::vector<int> rows_;
    double last_ms_ = 0.0;
    long long steps_ = 0;
};

using ValidationHook = std::function<void(const ValidationRecord&)>;

/// Mini-batch Adam training with periodic validation and early stopping on
/// Recall@5. A validation counts as an improvement only when Recall@5 strictly
/// exceeds the best so far; `patience` consecutive non-improvements stop the
/// run. A final validation is run at max_steps when it is not on the interval.
/// Throws naming the step when the loss becomes non-finite.
TrainResult train(const TrainConfig& config, model::Seq2Seq<float> model, const TrainData& data,
                  const ValidationHook& on_validation = {});

}  // namespace rastp::train
