// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line driver: synth, tokenize, run, sweep and report.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "rastp/bench/config.hpp"
#include "rastp/bench/experiment.hpp"
#include "rastp/bench/sweep.hpp"
#include "rastp/core/runtime.hpp"
#include "rastp/model/checkpoint.hpp"
#include "rastp/sid/codebooks.hpp"
#include "rastp/sid/embedding_io.hpp"

namespace fs = std::filesystem;
using namespace rastp;
using nlohmann::json;

namespace {

constexpr int kExitModuleError = 1;
constexpr int kExitUsage = 2;

/// Raised for problems the user must fix before anything runs.
struct UsageError : Error {
    using Error::Error;
};

struct CommonArgs {
    std::string config;
    std::string out_dir;
    std::map<std::string, std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_settings = true) {
    cmd->add_option("--out-dir", args.out_dir, "directory receiving every output")->required();
    if (!with_settings) return;
    cmd->add_option("--config", args.config, "key = value settings file");
    for (const auto& key : bench::known_keys()) {
        cmd->add_option("--" + key.name, args.overrides[key.name],
                        fmt::format("{} (default: {})", key.help, key.fallback.empty() ? "unset" : key.fallback));
    }
}

bench::Settings resolve(const CLI::App* cmd, const CommonArgs& args) {
    bench::Settings s;
    if (!args.config.empty()) {
        if (!fs::exists(args.config)) throw UsageError(fmt::format("config file not found: {}", args.config));
        s = bench::Settings::load(args.config);
    }
    for (const auto& key : bench::known_keys()) {
        if (cmd->count("--" + key.name) > 0) s.set(key.name, args.overrides.at(key.name));
    }
    return s;
}

fs::path prepare_out_dir(const std::string& dir) {
    fs::path out(dir);
    fs::create_directories(out);
    return out;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    require(out.good(), fmt::format("cannot write '{}'", path.string()));
    out << j.dump(2) << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    require(out.good(), fmt::format("cannot write '{}'", path.string()));
    out << text;
}

void write_manifest(const fs::path& dir, const std::string& command, const bench::Settings* settings,
                    const std::vector<std::string>& outputs, json extra = json::object()) {
    json m = {{"command", command}, {"outputs", outputs}};
    if (settings != nullptr) m["settings"] = settings->to_json();
    for (auto& [k, v] : extra.items()) m[k] = v;
    write_json(dir / "manifest.json", m);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_synth(const CLI::App* cmd, const CommonArgs& args) {
    const auto s = resolve(cmd, args);
    const auto dir = prepare_out_dir(args.out_dir);
    const auto corpus = data::synth_corpus(s.integer("synth_users"), s.integer("synth_items"),
                                           s.integer("synth_clusters"), s.integer("synth_d_feat"),
                                           s.seed("synth_seed"), bench::synth_options(s));
    data::save_interactions(dir / "interactions.tsv", corpus.log);
    sid::save_embeddings_text(dir / "items.txt", corpus.embeddings);
    write_text(dir / "config.txt", s.to_text());
    write_manifest(dir, "synth", &s, {"interactions.tsv", "items.txt", "config.txt"},
                   {{"records", corpus.log.size()}, {"items", corpus.embeddings.size()}});
    fmt::print("wrote {} interactions and {} items to {}\n", corpus.log.size(), corpus.embeddings.size(), dir.string());
    return 0;
}

int cmd_tokenize(const CLI::App* cmd, const CommonArgs& args) {
    const auto s = resolve(cmd, args);
    const auto dir = prepare_out_dir(args.out_dir);
    const auto corpus = bench::load_corpus(s);
    const auto cfg = bench::data_config(s);
    const auto books = sid::fit_codebooks(corpus.items, cfg.levels, cfg.width, cfg.kmeans_iters, cfg.tokenizer_seed);
    sid::save_codebooks(dir / "codebooks.bin", books);
    const auto index = sid::SidIndex::build(books, corpus.items, {}, cfg.disambiguate);
    std::ofstream sids(dir / "sids.tsv");
    for (std::size_t i = 0; i < index.num_items(); ++i) {
        sids << index.item_id(static_cast<int>(i));
        for (int c : index.sid_of(static_cast<int>(i)).codes) sids << '\t' << c;
        sids << '\n';
    }
    std::size_t largest = 0;
    for (const auto& [seq, bucket] : index.buckets()) largest = std::max(largest, bucket.size());
    json residuals = sid::residual_profile(books, corpus.items);
    write_text(dir / "config.txt", s.to_text());
    write_manifest(dir, "tokenize", &s, {"codebooks.bin", "sids.tsv", "config.txt"},
                   {{"items", index.num_items()},
                    {"distinct_sids", index.num_sequences()},
                    {"largest_bucket", largest},
                    {"mean_residual_by_level", residuals},
                    {"fingerprint", books.fingerprint},
                    {"source", corpus.source}});
    fmt::print("{} items -> {} distinct semantic ids (largest bucket {})\n", index.num_items(), index.num_sequences(),
               largest);
    return 0;
}

int cmd_run(const CLI::App* cmd, const CommonArgs& args) {
    const auto s = resolve(cmd, args);
    (void)bench::train_config(s);  // surface bad values before the data work
    const auto dir = prepare_out_dir(args.out_dir);
    const auto t0 = std::chrono::steady_clock::now();
    const auto corpus = bench::load_corpus(s);
    const auto data = bench::prepare(corpus, s);
    write_json(dir / "split_manifest.json", data.manifest);

    std::ofstream run_log(dir / "run_log.jsonl");
    std::optional<train::ExperimentResult> full;
    const auto summary = bench::run_once(
        data, s,
        [&run_log](const train::ValidationRecord& rec) {
            run_log << train::to_json(rec).dump() << '\n';
            run_log.flush();
            fmt::print("step {:>6}  valid recall@5 {:.4f}  {:.2f} ms/step\n", rec.step, rec.recall5,
                       rec.wall_step_ms_mean);
        },
        &full);
    model::save_checkpoint(dir / "checkpoint.bin", full->trained.checkpoint);
    write_json(dir / "metrics.json", bench::metrics_json(summary));
    {
        std::ofstream steps(dir / "steps.csv");
        steps << "step,loss,step_ms\n";
        for (std::size_t i = 0; i < full->trained.losses.size(); ++i) {
            steps << fmt::format("{},{},{}\n", i + 1, full->trained.losses[i], full->trained.step_ms[i]);
        }
    }
    write_text(dir / "config.txt", s.to_text());
    write_manifest(dir, "run", &s,
                   {"metrics.json", "run_log.jsonl", "checkpoint.bin", "split_manifest.json", "steps.csv", "config.txt"},
                   {{"source", corpus.source}, {"elapsed_s", seconds_since(t0)}});
    fmt::print("test recall@5 {:.4f} recall@10 {:.4f} ndcg@5 {:.4f} ndcg@10 {:.4f} ({:.2f} ms/step)\n",
               summary.test.recall.at(5), summary.test.recall.at(10), summary.test.ndcg.at(5),
               summary.test.ndcg.at(10), summary.timing.median_of_means);
    return 0;
}

int cmd_sweep(const CLI::App* cmd, const CommonArgs& args) {
    const auto s = resolve(cmd, args);
    const auto axis = bench::parse_axis(s.text("axis"));
    const auto values = s.list("values");
    const auto seeds = s.list("seeds");
    bench::validate_sweep(s, axis, values, seeds);
    const auto dir = prepare_out_dir(args.out_dir);
    const auto t0 = std::chrono::steady_clock::now();
    const auto corpus = bench::load_corpus(s);
    const auto data = bench::prepare(corpus, s);
    const auto rows = bench::run_sweep(data, s, axis, values, seeds, [](const bench::SweepRow& r) {
        fmt::print("{}={} seed={} recall@10 {:.4f} {:.2f} ms/step speedup {:+.3f}\n", r.axis, r.value, r.seed,
                   r.recall10, r.wall_step_ms, r.speedup_vs_baseline);
    });
    bench::write_sweep_csv(dir / "sweep.csv", rows);
    write_text(dir / "config.txt", s.to_text());
    write_manifest(dir, "sweep", &s, {"sweep.csv", "config.txt"},
                   {{"source", corpus.source}, {"elapsed_s", seconds_since(t0)}});
    return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const CommonArgs& args) {
    std::vector<fs::path> paths(inputs.begin(), inputs.end());
    const auto rows = bench::build_report(paths);
    const auto dir = prepare_out_dir(args.out_dir);
    bench::write_report_csv(dir / "report.csv", rows);
    write_manifest(dir, "report", nullptr, {"report.csv"}, {{"inputs", inputs}});
    fmt::print("wrote {} rows to {}\n", rows.size(), (dir / "report.csv").string());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    tune_allocator();
    CLI::App app{"Token pruning for generative recommendation: tokenize, train, sweep and report."};
    app.require_subcommand(1);

    CommonArgs synth_args, tok_args, run_args, sweep_args, report_args;
    auto* synth = app.add_subcommand("synth", "write a clustered synthetic corpus");
    add_common(synth, synth_args);
    auto* tokenize = app.add_subcommand("tokenize", "fit residual k-means codebooks and assign semantic ids");
    add_common(tokenize, tok_args);
    auto* run = app.add_subcommand("run", "tokenize, train and evaluate one configuration");
    add_common(run, run_args);
    auto* sweep = app.add_subcommand("sweep", "run a value x seed grid against the no-pruning baseline");
    add_common(sweep, sweep_args);
    auto* report = app.add_subcommand("report", "merge sweep tables into a long-format summary");
    add_common(report, report_args, false);
    std::vector<std::string> report_inputs;
    report->add_option("inputs", report_inputs, "sweep.csv files")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*synth) return cmd_synth(synth, synth_args);
        if (*tokenize) return cmd_tokenize(tokenize, tok_args);
        if (*run) return cmd_run(run, run_args);
        if (*sweep) return cmd_sweep(sweep, sweep_args);
        if (*report) return cmd_report(report_inputs, report_args);
    } catch (const UsageError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitModuleError;
    }
    return kExitUsage;
}
