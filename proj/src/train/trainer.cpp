// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#include "rastp/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "rastp/core/error.hpp"
#include "rastp/model/adam.hpp"
#include "rastp/model/beam_search.hpp"

namespace rastp::train {

void TrainConfig::validate(const model::ModelConfig& model) const {
    require(prune_layer >= 1 && prune_layer <= model.n_enc_layers,
            fmt::format("prune_layer {} outside [1, {}]", prune_layer, model.n_enc_layers));
    require(patience >= 1, "patience must be >= 1");
    require(batch_size >= 1, "batch_size must be >= 1");
    require(max_steps >= 1, "max_steps must be >= 1");
    require(valid_interval >= 1, "valid_interval must be >= 1");
    require(beam >= 10, fmt::format("beam {} must cover the largest cutoff (10)", beam));
    require(eval_batch >= 1, "eval_batch must be >= 1");
    require(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0, 1)");
    require(lr > 0.0 && std::isfinite(lr), "lr must be positive");
    require(weight_decay >= 0.0, "weight_decay must be >= 0");
    if (strategy.kind != prune::Kind::none) {
        require(strategy.rho > 0.0 && strategy.rho <= 1.0, fmt::format("rho {} outside (0, 1]", strategy.rho));
        if (prune::is_pooling(strategy.kind)) require(strategy.pool_window >= 2, "pool_window must be >= 2");
    }
}

EvalConfig eval_config_for(const TrainConfig& config) {
    EvalConfig e;
    e.strategy = config.eval_prune ? config.strategy : prune::PruneStrategy{prune::Kind::none, 1.0, 2};
    e.prune_layer = config.prune_layer;
    e.beam = config.beam;
    e.batch = config.eval_batch;
    return e;
}

std::vector<int> expand_ranking(std::span<const model::Hypothesis> hypotheses, const sid::SidIndex& index,
                                std::size_t limit) {
    std::vector<int> out;
    for (const auto& h : hypotheses) {
        for (int item : index.bucket(h.sid)) {
            if (out.size() >= limit) return out;
            out.push_back(item);
        }
    }
    return out;
}

int rank_of(std::span<const int> ranking, int target) {
    const auto it = std::find(ranking.begin(), ranking.end(), target);
    return it == ranking.end() ? 0 : static_cast<int>(it - ranking.begin()) + 1;
}

MetricsReport evaluate(const model::Seq2Seq<float>& model, std::span<const data::SequenceExample> examples,
                       const sid::SidIndex& index, const EvalConfig& config) {
    require(!config.ks.empty(), "no cutoffs requested");
    const int kmax = *std::max_element(config.ks.begin(), config.ks.end());
    require(config.beam >= kmax, fmt::format("beam {} is smaller than the largest cutoff {}", config.beam, kmax));
    std::vector<int> ranks;
    ranks.reserve(examples.size());
    for (std::size_t start = 0; start < examples.size(); start += static_cast<std::size_t>(config.batch)) {
        const auto stop = std::min(examples.size(), start + static_cast<std::size_t>(config.batch));
        std::vector<int> rows(stop - start);
        std::iota(rows.begin(), rows.end(), static_cast<int>(start));
        const auto batch = data::collate(examples, rows, index.width());
        const auto enc = model::encode_with_strategy(model, batch.tokens, config.strategy, config.prune_layer);
        const auto beams = model::generate(model, enc.hidden, enc.mask, index, config.beam);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const auto ranking = expand_ranking(beams[r], index, static_cast<std::size_t>(kmax));
            ranks.push_back(rank_of(ranking, examples[rows[r]].target_item));
        }
    }
    return ranking_metrics(ranks, config.ks);
}

MetricsReport popularity_baseline(std::span<const double> item_counts, std::span<const data::SequenceExample> examples,
                                  std::span<const int> ks) {
    std::vector<int> order(item_counts.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return item_counts[a] > item_counts[b]; });
    const int kmax = ks.empty() ? 0 : *std::max_element(ks.begin(), ks.end());
    order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(kmax)));
    std::vector<int> ranks;
    for (const auto& ex : examples) ranks.push_back(rank_of(order, ex.target_item));
    return ranking_metrics(ranks, ks);
}

nlohmann::json to_json(const ValidationRecord& record) {
    return {{"step", record.step}, {"recall5", record.recall5}, {"wall_step_ms_mean", record.wall_step_ms_mean}};
}

namespace {

std::vector<data::SequenceExample> subsample(std::span<const data::SequenceExample> rows, int limit, std::uint64_t seed) {
    if (limit <= 0 || rows.size() <= static_cast<std::size_t>(limit)) return {rows.begin(), rows.end()};
    std::vector<int> pick(rows.size());
    std::iota(pick.begin(), pick.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(pick.begin(), pick.end(), rng);
    pick.resize(static_cast<std::size_t>(limit));
    std::sort(pick.begin(), pick.end());
    std::vector<data::SequenceExample> out;
    for (int i : pick) out.push_back(rows[i]);
    return out;
}

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

StepRunner::StepRunner(const TrainConfig& config, model::Seq2Seq<float> initial,
                       std::span<const data::SequenceExample> train, int sid_width)
    : config_(config),
      model_([&] {
          auto cfg = initial.config();
          cfg.dropout = config.dropout;
          return model::Seq2Seq<float>(cfg, std::move(initial.params()));
      }()),
      optimizer_(model_.config(), {config.lr, config.weight_decay}),
      train_(train),
      width_(sid_width),
      order_rng_(config.seed),
      // Independent streams so that batch order does not depend on dropout use.
      dropout_rng_(config.seed ^ 0x9e3779b97f4a7c15ULL),
      order_(train.size()),
      cursor_(train.size()),
      grads_(model::Params<float>::zeros(model_.config())) {
    require(!train.empty(), "no training examples");
    config.validate(model_.config());
    std::iota(order_.begin(), order_.end(), 0);
}

double StepRunner::step() {
    const auto t0 = std::chrono::steady_clock::now();
    const long long step = ++steps_;
    rows_.clear();
    while (static_cast<int>(rows_.size()) < config_.batch_size) {
        if (cursor_ == order_.size()) {
            std::shuffle(order_.begin(), order_.end(), order_rng_);
            cursor_ = 0;
        }
        rows_.push_back(order_[cursor_++]);
        if (static_cast<std::size_t>(config_.batch_size) > order_.size() && rows_.size() == order_.size()) break;
    }
    const auto batch = data::collate(train_, rows_, width_);
    grads_.for_each([](const std::string&, Mat<float>& g) { g.setZero(); });
    float loss = 0.0f;
    try {
        loss = model::loss_and_grad(model_, batch.tokens, batch.targets, config_.strategy, config_.prune_layer,
                                    &dropout_rng_, grads_);
    } catch (const Error& e) {
        throw Error(fmt::format("training diverged at step {}: {}", step, e.what()));
    }
    require(std::isfinite(loss), fmt::format("training diverged at step {}: non-finite loss", step));
    optimizer_.step(model_.params(), grads_);
    last_ms_ = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return loss;
}

TrainResult train(const TrainConfig& config, model::Seq2Seq<float> initial, const TrainData& data,
                  const ValidationHook& on_validation) {
    require(data.index != nullptr, "training needs a semantic id index");
    require(!data.train.empty(), "no training examples");
    require(!data.valid.empty(), "no validation examples");
    config.validate(initial.config());

    const auto initial_dropout = initial.config().dropout;
    StepRunner runner(config, std::move(initial), data.train, data.index->width());
    const auto valid = subsample(data.valid, config.valid_subsample, config.seed + 1);
    const auto eval_cfg = eval_config_for(config);

    TrainResult result{runner.model(), {}, {}, {}, {}, {}, 0};
    double best_recall = -1.0;
    int bad_validations = 0;

    auto validate_now = [&](long long step) {
        model::Seq2Seq<float> eval_model(runner.model().config(), runner.model().params());
        const auto metrics = evaluate(eval_model, valid, *data.index, eval_cfg);
        const ValidationRecord rec{step, metrics.recall.at(5), mean_of(result.step_ms)};
        result.run_log.push_back(rec);
        if (on_validation) on_validation(rec);
        if (rec.recall5 > best_recall) {
            best_recall = rec.recall5;
            result.best_step = step;
            result.model = runner.model();
            result.report = metrics;
            bad_validations = 0;
            return false;
        }
        return ++bad_validations >= config.patience;
    };

    for (long long step = 1; step <= config.max_steps; ++step) {
        const double loss = runner.step();
        result.step_ms.push_back(runner.last_step_ms());
        result.losses.push_back(loss);

        const bool on_interval = step % config.valid_interval == 0;
        if ((on_interval || step == config.max_steps) && validate_now(step)) break;
    }

    const auto timing = summarize_steps(result.step_ms, 0, 50);
    result.report.wall_step_ms_mean = timing.mean;
    result.report.wall_step_ms_std = timing.stddev;
    result.report.steps_run = static_cast<long long>(result.step_ms.size());
    auto best_cfg = result.model.config();
    best_cfg.dropout = initial_dropout;
    result.model = model::Seq2Seq<float>(best_cfg, result.model.params());
    result.checkpoint = {best_cfg, result.model.params(), result.best_step, config.seed};
    return result;
}

}  // namespace rastp::train
