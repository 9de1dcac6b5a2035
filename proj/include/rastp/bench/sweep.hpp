// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rastp/bench/experiment.hpp"

namespace rastp::bench {

enum class Axis { strategy, layer, rho };
Axis parse_axis(std::string_view name);
std::string to_string(Axis axis);

/// One CSV line. Run rows carry one seed; summary rows average the run rows
/// of a value and fill the *_std columns (sample standard deviation).
struct SweepRow {
    std::string experiment;
    std::string axis;
    std::string value;
    std::string seed;      // "all" on summary rows
    std::string row_type;  // "run" | "summary"
    double recall5 = 0.0;
    double recall10 = 0.0;
    double ndcg5 = 0.0;
    double ndcg10 = 0.0;
    double wall_step_ms = 0.0;
    double baseline_wall_step_ms = 0.0;
    double speedup_vs_baseline = 0.0;
    std::optional<double> recall5_std, recall10_std, ndcg5_std, ndcg10_std, wall_step_ms_std;
};

const std::vector<std::string>& sweep_columns();

/// (T_base - T) / T_base.
double speedup(double baseline_ms, double strategy_ms);

/// Throws on the first value that cannot be applied to `settings`, before
/// anything is trained.
void validate_sweep(const Settings& settings, Axis axis, const std::vector<std::string>& values,
                    const std::vector<std::string>& seeds);

/// Settings for one sweep point.
Settings apply_axis(Settings settings, Axis axis, const std::string& value, const std::string& seed);

using SweepProgress = std::function<void(const SweepRow&)>;

/// For every seed runs the no-pruning baseline once, then each value.
/// Returns run rows followed by one summary row per value.
std::vector<SweepRow> run_sweep(const train::PreparedData& data, const Settings& settings, Axis axis,
                                const std::vector<std::string>& values, const std::vector<std::string>& seeds,
                                const SweepProgress& progress = {});

/// Appends summary rows (one per distinct value, in first-seen order).
std::vector<SweepRow> with_summaries(std::vector<SweepRow> runs);

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);
/// Throws naming `path` when the header or any row does not match the schema.
std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& path);

/// Long-format aggregate over the run rows of one or more sweep files.
struct ReportRow {
    std::string experiment;
    std::string axis;
    std::string axis_value;
    std::string metric;
    double mean = 0.0;
    double std = 0.0;
    int n = 0;
};

const std::vector<std::string>& report_columns();
std::vector<ReportRow> build_report(const std::vector<std::filesystem::path>& inputs);
void write_report_csv(const std::filesystem::path& path, const std::vector<ReportRow>& rows);

}  // namespace rastp::bench
