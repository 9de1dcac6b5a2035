// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>
#include <sys/wait.h>

#include "rastp/bench/config.hpp"
#include "rastp/bench/experiment.hpp"
#include "rastp/bench/sweep.hpp"

using namespace rastp;
using namespace rastp::bench;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "rastp_bench_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

Settings tiny_settings() {
    Settings s;
    s.set("synth_users", "90");
    s.set("synth_items", "48");
    s.set("synth_clusters", "4");
    s.set("synth_max_length", "10");
    s.set("levels", "2");
    s.set("width", "8");
    s.set("d_model", "16");
    s.set("n_heads", "2");
    s.set("d_mlp", "32");
    s.set("n_enc_layers", "4");
    s.set("n_dec_layers", "1");
    s.set("max_steps", "12");
    s.set("valid_interval", "6");
    s.set("batch_size", "8");
    s.set("dropout", "0");
    s.set("prune_layer", "1");
    s.set("timing_warmup", "2");
    s.set("timing_window", "5");
    return s;
}

std::string read_all(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args, const fs::path& log) {
    const auto cmd = fmt::format("{} {} > {} 2>&1", RASTP_CLI_PATH, args, log.string());
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("settings files parse comments, quotes and reject unknown keys") {
    const auto dir = scratch("settings");
    std::ofstream(dir / "a.cfg") << "# comment\n\nlr = 0.5\nexperiment = \"demo run\"\n  seeds = 1, 2 ,3\n";
    const auto s = Settings::load(dir / "a.cfg");
    CHECK(s.real("lr") == 0.5);
    CHECK(s.text("experiment") == "demo run");
    CHECK(s.list("seeds") == std::vector<std::string>{"1", "2", "3"});
    CHECK(s.integer("batch_size") == 64);

    std::ofstream(dir / "b.cfg") << "lr = 1\nlearning_rate = 2\n";
    CHECK_THROWS_WITH_AS(Settings::load(dir / "b.cfg"), doctest::Contains("b.cfg:2"), Error);
    std::ofstream(dir / "c.cfg") << "just words\n";
    CHECK_THROWS_WITH_AS(Settings::load(dir / "c.cfg"), doctest::Contains("c.cfg:1"), Error);

    Settings t;
    t.set("batch_size", "many");
    CHECK_THROWS_AS(t.integer("batch_size"), Error);
    t.set("eval_prune", "maybe");
    CHECK_THROWS_AS(t.flag("eval_prune"), Error);
    CHECK_THROWS_AS(t.set("nope", "1"), Error);

    // Round trip through the text form.
    std::ofstream(dir / "d.cfg") << s.to_text();
    CHECK(Settings::load(dir / "d.cfg").to_json() == s.to_json());
}

TEST_CASE("sweep validation fails before any training") {
    const auto s = tiny_settings();
    CHECK_THROWS_WITH_AS(validate_sweep(s, Axis::strategy, {"rastp", "magic"}, {"1"}), doctest::Contains("magic"),
                         Error);
    CHECK_THROWS_AS(validate_sweep(s, Axis::layer, {"1", "5"}, {"1"}), Error);
    CHECK_THROWS_AS(validate_sweep(s, Axis::rho, {"0"}, {"1"}), Error);
    CHECK_THROWS_AS(validate_sweep(s, Axis::layer, {"1"}, {}), Error);
    CHECK_THROWS_AS(validate_sweep(s, Axis::layer, {"1"}, {"x"}), Error);
    auto none = s;
    none.set("strategy", "none");
    CHECK_THROWS_AS(validate_sweep(none, Axis::layer, {"1"}, {"1"}), Error);
    CHECK_THROWS_AS(parse_axis("depth"), Error);
    CHECK_NOTHROW(validate_sweep(s, Axis::layer, {"1", "2", "3", "4"}, {"1", "2"}));
}

TEST_CASE("layer sweep table: row counts, speedup arithmetic and report") {
    const auto s = tiny_settings();
    const auto data = prepare(load_corpus(s), s);
    const std::vector<std::string> values = {"1", "2", "3", "4"}, seeds = {"1", "42"};
    const auto rows = run_sweep(data, s, Axis::layer, values, seeds);
    REQUIRE(rows.size() == 4 * seeds.size() + 4);

    const auto dir = scratch("sweep");
    write_sweep_csv(dir / "layer.csv", rows);
    const auto back = read_sweep_csv(dir / "layer.csv");
    REQUIRE(back.size() == rows.size());
    int runs = 0, summaries = 0;
    for (const auto& r : back) {
        (r.row_type == "run" ? runs : summaries)++;
        const double recomputed = (r.baseline_wall_step_ms - r.wall_step_ms) / r.baseline_wall_step_ms;
        CHECK(std::abs(recomputed - r.speedup_vs_baseline) <= 1e-9);
        CHECK(r.recall5 <= r.recall10);
        CHECK(r.ndcg10 <= r.recall10 + 1e-12);
    }
    CHECK(runs == 8);
    CHECK(summaries == 4);

    // Summary means equal the mean of the per-seed rows.
    for (const auto& sum : back) {
        if (sum.row_type != "summary") continue;
        double acc = 0.0;
        int n = 0;
        for (const auto& r : back) {
            if (r.row_type == "run" && r.value == sum.value) {
                acc += r.recall10;
                ++n;
            }
        }
        CHECK(std::abs(acc / n - sum.recall10) <= 1e-12);
        REQUIRE(sum.recall10_std.has_value());
    }

    // Report: single file keeps one row per (value, metric) with recomputable means.
    const auto report = build_report({dir / "layer.csv"});
    CHECK(report.size() == 4 * 6);
    for (const auto& rr : report) {
        double acc = 0.0;
        int n = 0;
        for (const auto& r : back) {
            if (r.row_type != "run" || r.value != rr.axis_value) continue;
            const double v = rr.metric == "recall5"    ? r.recall5
                             : rr.metric == "recall10" ? r.recall10
                             : rr.metric == "ndcg5"    ? r.ndcg5
                             : rr.metric == "ndcg10"   ? r.ndcg10
                             : rr.metric == "wall_step_ms" ? r.wall_step_ms
                                                           : r.speedup_vs_baseline;
            acc += v;
            ++n;
        }
        CHECK(rr.n == n);
        CHECK(std::abs(acc / n - rr.mean) <= 1e-12);
    }

    // A second table over another axis concatenates.
    auto other = rows;
    for (auto& r : other) r.axis = "rho";
    write_sweep_csv(dir / "rho.csv", other);
    CHECK(build_report({dir / "layer.csv", dir / "rho.csv"}).size() == 2 * report.size());
    write_report_csv(dir / "report.csv", report);
    CHECK(read_all(dir / "report.csv").rfind("experiment,axis,axis_value,metric,mean,std,n\n", 0) == 0);

    // Schema problems name the offending file.
    std::ofstream(dir / "bad.csv") << "experiment,axis,value\nx,y,z\n";
    CHECK_THROWS_WITH_AS(build_report({dir / "layer.csv", dir / "bad.csv"}), doctest::Contains("bad.csv"), Error);
}

TEST_CASE("strategy sweep reuses the baseline so its speedup is exactly zero") {
    auto s = tiny_settings();
    s.set("n_enc_layers", "2");
    const auto data = prepare(load_corpus(s), s);
    const auto rows = run_sweep(data, s, Axis::strategy, {"none", "rastp"}, {"3"});
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].value == "none");
    CHECK(rows[0].speedup_vs_baseline == 0.0);
    CHECK(rows[0].wall_step_ms == rows[0].baseline_wall_step_ms);
    CHECK(speedup(10.0, 7.5) == 0.25);
}

TEST_CASE("identical settings reproduce identical metrics") {
    auto s = tiny_settings();
    s.set("n_enc_layers", "2");
    s.set("dropout", "0.1");
    s.set("strategy", "l2norm");
    const auto data = prepare(load_corpus(s), s);
    auto a = metrics_json(run_once(data, s));
    auto b = metrics_json(run_once(data, s));
    a.erase("timing");
    b.erase("timing");
    CHECK(a.dump() == b.dump());
}

TEST_CASE("command line: missing config, identity runs and outputs") {
    const auto dir = scratch("cli");
    CHECK(run_cli(fmt::format("run --config {} --out-dir {}", (dir / "absent.cfg").string(), (dir / "x").string()),
                  dir / "missing.log") == 2);
    CHECK(read_all(dir / "missing.log").find("absent.cfg") != std::string::npos);

    std::ofstream(dir / "tiny.cfg") << tiny_settings().to_text() << "n_enc_layers = 2\n";
    const auto common = fmt::format("--config {} --prune_layer 2", (dir / "tiny.cfg").string());
    REQUIRE(run_cli(fmt::format("run {} --strategy none --out-dir {}", common, (dir / "a").string()), dir / "a.log") == 0);
    REQUIRE(run_cli(fmt::format("run {} --strategy rastp --rho 1.0 --out-dir {}", common, (dir / "b").string()),
                    dir / "b.log") == 0);
    auto a = nlohmann::json::parse(read_all(dir / "a" / "metrics.json"));
    auto b = nlohmann::json::parse(read_all(dir / "b" / "metrics.json"));
    a.erase("timing");
    b.erase("timing");
    CHECK(a.dump(2) == b.dump(2));
    for (const char* f : {"run_log.jsonl", "checkpoint.bin", "split_manifest.json", "manifest.json", "steps.csv"}) {
        CHECK(fs::exists(dir / "a" / f));
    }
    CHECK(run_cli(fmt::format("sweep {} --axis strategy --values none,bogus --out-dir {}", common,
                              (dir / "s").string()),
                  dir / "s.log") == 1);
    CHECK(!fs::exists(dir / "s" / "sweep.csv"));
    CHECK(run_cli("frobnicate", dir / "u.log") == 2);
}
