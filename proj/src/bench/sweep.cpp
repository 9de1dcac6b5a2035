// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#include "rastp/bench/sweep.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include <fmt/format.h>

namespace rastp::bench {

namespace {

std::string num(double v) { return fmt::format("{}", v); }
std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (comma == std::string::npos) return out;
        start = comma + 1;
    }
}

void check_field(const std::string& text, std::string_view what) {
    require(text.find_first_of(",\n\r") == std::string::npos,
            fmt::format("{} '{}' must not contain commas or newlines", what, text));
}

SweepRow labeled(std::string experiment, std::string axis, std::string value, std::string seed, std::string type) {
    SweepRow r;
    r.experiment = std::move(experiment);
    r.axis = std::move(axis);
    r.value = std::move(value);
    r.seed = std::move(seed);
    r.row_type = std::move(type);
    return r;
}

}  // namespace

Axis parse_axis(std::string_view name) {
    if (name == "strategy") return Axis::strategy;
    if (name == "layer") return Axis::layer;
    if (name == "rho") return Axis::rho;
    throw Error(fmt::format("unknown sweep axis '{}' (expected strategy|layer|rho)", name));
}

std::string to_string(Axis axis) {
    switch (axis) {
        case Axis::strategy: return "strategy";
        case Axis::layer: return "layer";
        case Axis::rho: return "rho";
    }
    return "?";
}

const std::vector<std::string>& sweep_columns() {
    static const std::vector<std::string> cols = {
        "experiment", "axis",         "value",        "seed",         "row_type",    "recall5",
        "recall10",   "ndcg5",        "ndcg10",       "wall_step_ms", "baseline_wall_step_ms",
        "speedup_vs_baseline",        "recall5_std",  "recall10_std", "ndcg5_std",   "ndcg10_std",
        "wall_step_ms_std",
    };
    return cols;
}

double speedup(double baseline_ms, double strategy_ms) {
    require(baseline_ms > 0.0, "baseline step time must be positive");
    return (baseline_ms - strategy_ms) / baseline_ms;
}

Settings apply_axis(Settings s, Axis axis, const std::string& value, const std::string& seed) {
    s.set("seed", seed);
    switch (axis) {
        case Axis::strategy: s.set("strategy", value); break;
        case Axis::layer: s.set("prune_layer", value); break;
        case Axis::rho: s.set("rho", value); break;
    }
    return s;
}

void validate_sweep(const Settings& settings, Axis axis, const std::vector<std::string>& values,
                    const std::vector<std::string>& seeds) {
    require(!seeds.empty(), "a sweep needs at least one seed");
    require(!values.empty(), "a sweep needs at least one value");
    check_field(settings.text("experiment"), "experiment name");
    for (const auto& seed : seeds) (void)apply_axis(settings, axis, values.front(), seed).seed("seed");
    const auto base = model_base(settings);
    if (axis != Axis::strategy) {
        require(prune::parse_kind(settings.text("strategy")) != prune::Kind::none,
                fmt::format("a {} sweep needs a pruning strategy other than 'none'", to_string(axis)));
    }
    for (const auto& v : values) {
        check_field(v, "sweep value");
        const auto s = apply_axis(settings, axis, v, seeds.front());
        try {
            train_config(s).validate(base);
        } catch (const Error& e) {
            throw Error(fmt::format("sweep value '{}' is invalid: {}", v, e.what()));
        }
    }
}

std::vector<SweepRow> run_sweep(const train::PreparedData& data, const Settings& settings, Axis axis,
                                const std::vector<std::string>& values, const std::vector<std::string>& seeds,
                                const SweepProgress& progress) {
    validate_sweep(settings, axis, values, seeds);
    std::vector<SweepRow> rows;
    const auto experiment = settings.text("experiment");
    for (const auto& seed : seeds) {
        auto base_settings = settings;
        base_settings.set("strategy", "none");
        base_settings.set("seed", seed);
        const auto baseline = run_once(data, base_settings);
        const double t_base = baseline.timing.median_of_means;
        for (const auto& value : values) {
            const auto s = apply_axis(settings, axis, value, seed);
            const bool is_baseline = prune::parse_kind(s.text("strategy")) == prune::Kind::none;
            const auto run = is_baseline ? baseline : run_once(data, s);
            auto row = labeled(experiment, to_string(axis), value, seed, "run");
            row.recall5 = run.test.recall.at(5);
            row.recall10 = run.test.recall.at(10);
            row.ndcg5 = run.test.ndcg.at(5);
            row.ndcg10 = run.test.ndcg.at(10);
            row.wall_step_ms = run.timing.median_of_means;
            row.baseline_wall_step_ms = t_base;
            row.speedup_vs_baseline = speedup(t_base, row.wall_step_ms);
            if (progress) progress(row);
            rows.push_back(std::move(row));
        }
    }
    return with_summaries(std::move(rows));
}

std::vector<SweepRow> with_summaries(std::vector<SweepRow> runs) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<const SweepRow*>> groups;
    for (const auto& r : runs) {
        if (r.row_type != "run") continue;
        auto& g = groups[r.value];
        if (g.empty()) order.push_back(r.value);
        g.push_back(&r);
    }
    std::vector<SweepRow> summaries;
    for (const auto& value : order) {
        const auto& g = groups[value];
        auto collect = [&g](double SweepRow::*field) {
            std::vector<double> v;
            for (const auto* r : g) v.push_back(r->*field);
            return v;
        };
        auto s = labeled(g.front()->experiment, g.front()->axis, value, "all", "summary");
        s.recall5 = mean_of(collect(&SweepRow::recall5));
        s.recall10 = mean_of(collect(&SweepRow::recall10));
        s.ndcg5 = mean_of(collect(&SweepRow::ndcg5));
        s.ndcg10 = mean_of(collect(&SweepRow::ndcg10));
        s.wall_step_ms = mean_of(collect(&SweepRow::wall_step_ms));
        s.baseline_wall_step_ms = mean_of(collect(&SweepRow::baseline_wall_step_ms));
        s.speedup_vs_baseline = speedup(s.baseline_wall_step_ms, s.wall_step_ms);
        s.recall5_std = std_of(collect(&SweepRow::recall5));
        s.recall10_std = std_of(collect(&SweepRow::recall10));
        s.ndcg5_std = std_of(collect(&SweepRow::ndcg5));
        s.ndcg10_std = std_of(collect(&SweepRow::ndcg10));
        s.wall_step_ms_std = std_of(collect(&SweepRow::wall_step_ms));
        summaries.push_back(std::move(s));
    }
    std::erase_if(runs, [](const SweepRow& r) { return r.row_type != "run"; });
    runs.insert(runs.end(), summaries.begin(), summaries.end());
    return runs;
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
    std::ofstream out(path);
    require(out.good(), fmt::format("cannot write '{}'", path.string()));
    const auto& cols = sweep_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const auto& r : rows) {
        out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.experiment, r.axis, r.value,
                           r.seed, r.row_type, num(r.recall5), num(r.recall10), num(r.ndcg5), num(r.ndcg10),
                           num(r.wall_step_ms), num(r.baseline_wall_step_ms), num(r.speedup_vs_baseline),
                           opt_num(r.recall5_std), opt_num(r.recall10_std), opt_num(r.ndcg5_std),
                           opt_num(r.ndcg10_std), opt_num(r.wall_step_ms_std));
    }
    require(out.good(), fmt::format("failed writing '{}'", path.string()));
}

std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), fmt::format("cannot open sweep table '{}'", path.string()));
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), fmt::format("{}: empty file, expected a sweep header", path.string()));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    require(split_csv(line) == sweep_columns(),
            fmt::format("{}: header does not match the sweep schema", path.string()));
    std::vector<SweepRow> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_csv(line);
        require(f.size() == sweep_columns().size(),
                fmt::format("{}:{}: expected {} fields, found {}", path.string(), line_no, sweep_columns().size(),
                            f.size()));
        auto number = [&](const std::string& text) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(text, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            require(used == text.size() && !text.empty(),
                    fmt::format("{}:{}: '{}' is not a number", path.string(), line_no, text));
            return v;
        };
        auto optional = [&](const std::string& text) -> std::optional<double> {
            if (text.empty()) return std::nullopt;
            return number(text);
        };
        auto r = labeled(f[0], f[1], f[2], f[3], f[4]);
        require(r.row_type == "run" || r.row_type == "summary",
                fmt::format("{}:{}: row_type must be run or summary", path.string(), line_no));
        r.recall5 = number(f[5]);
        r.recall10 = number(f[6]);
        r.ndcg5 = number(f[7]);
        r.ndcg10 = number(f[8]);
        r.wall_step_ms = number(f[9]);
        r.baseline_wall_step_ms = number(f[10]);
        r.speedup_vs_baseline = number(f[11]);
        r.recall5_std = optional(f[12]);
        r.recall10_std = optional(f[13]);
        r.ndcg5_std = optional(f[14]);
        r.ndcg10_std = optional(f[15]);
        r.wall_step_ms_std = optional(f[16]);
        rows.push_back(std::move(r));
    }
    return rows;
}

const std::vector<std::string>& report_columns() {
    static const std::vector<std::string> cols = {"experiment", "axis", "axis_value", "metric", "mean", "std", "n"};
    return cols;
}

std::vector<ReportRow> build_report(const std::vector<std::filesystem::path>& inputs) {
    require(!inputs.empty(), "report needs at least one sweep table");
    static const std::vector<std::pair<std::string, double SweepRow::*>> metrics = {
        {"recall5", &SweepRow::recall5},
        {"recall10", &SweepRow::recall10},
        {"ndcg5", &SweepRow::ndcg5},
        {"ndcg10", &SweepRow::ndcg10},
        {"wall_step_ms", &SweepRow::wall_step_ms},
        {"speedup_vs_baseline", &SweepRow::speedup_vs_baseline},
    };
    using Key = std::tuple<std::string, std::string, std::string>;
    std::vector<Key> order;
    std::map<Key, std::vector<SweepRow>> groups;
    for (const auto& path : inputs) {
        for (auto& r : read_sweep_csv(path)) {
            if (r.row_type != "run") continue;
            Key key{r.experiment, r.axis, r.value};
            auto& g = groups[key];
            if (g.empty()) order.push_back(key);
            g.push_back(std::move(r));
        }
    }
    std::vector<ReportRow> out;
    for (const auto& key : order) {
        const auto& g = groups[key];
        for (const auto& [name, field] : metrics) {
            std::vector<double> v;
            for (const auto& r : g) v.push_back(r.*field);
            out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), name, mean_of(v), std_of(v),
                           static_cast<int>(v.size())});
        }
    }
    return out;
}

void write_report_csv(const std::filesystem::path& path, const std::vector<ReportRow>& rows) {
    std::ofstream out(path);
    require(out.good(), fmt::format("cannot write '{}'", path.string()));
    const auto& cols = report_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const auto& r : rows) {
        out << fmt::format("{},{},{},{},{},{},{}\n", r.experiment, r.axis, r.axis_value, r.metric, num(r.mean),
                           num(r.std), r.n);
    }
    require(out.good(), fmt::format("failed writing '{}'", path.string()));
}

}  // namespace rastp::bench
