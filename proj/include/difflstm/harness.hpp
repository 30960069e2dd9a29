#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "difflstm/dynamics.hpp"
#include "difflstm/network.hpp"
#include "difflstm/preprocess.hpp"

namespace difflstm {

using json = nlohmann::ordered_json;

struct ExperimentConfig {
    std::string dataset = "mackey_glass"; // mackey_glass | lorenz | rossler | csv:<path>
    MackeyGlassParams mackey_glass;
    LorenzParams lorenz;
    RosslerParams rossler;
    SavGolSpec savgol;
    std::size_t csv_column = 0;
    std::string diff_method = "analytic"; // analytic | savgol (csv input is always savgol)
    EmbeddingSpec embedding;
    double train_frac = 0.6;
    TrainConfig train;
    std::size_t hidden = 10;
    std::size_t n_runs = 30;
    std::uint64_t base_seed = 1;
    std::string output_dir = ".";
    bool scale_full_series = false; // fit min-max on the whole series, not train only
    bool student_t_ci = false;

    static ExperimentConfig from_json(const json& j);
    static ExperimentConfig load(const std::string& path);
    json to_json() const;
};

struct RunResult {
    bool ok = true;
    std::string error;
    double train_rmse = 0.0;
    double test_rmse = 0.0;
    double diff_train_rmse = 0.0;
    double diff_test_rmse = 0.0;
    Vector step_rmse;      // test partition, per horizon, unscaled units
    Vector diff_step_rmse; // differential stream, same layout
    double final_loss = 0.0;
    double wall_seconds = 0.0;
};

struct Aggregate {
    double mean = 0.0;
    double sd = 0.0; // invalid when n == 1
    bool sd_valid = false;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::size_t n = 0;
};

struct RunReport {
    json config_echo;
    std::vector<RunResult> runs;
    std::size_t failed = 0;
    // Key order is fixed: train_rmse, test_rmse, step_1..H, diff_*.
    std::vector<std::pair<std::string, Aggregate>> aggregates;

    const Aggregate* find(const std::string& key) const;
};

/// Scaled, windowed, split data shared by every run of an experiment.
struct PreparedData {
    WindowedDataset train;
    WindowedDataset test;
    ScaleParams value_scale;
    ScaleParams diff_scale;
};

/// Generates or ingests the configured dataset; returns (values, diffs).
std::pair<Series, Series> load_dataset(const ExperimentConfig& cfg);

/// Differential estimation, train-fitted scaling, windowing and the
/// chronological split.
PreparedData prepare_data(const ExperimentConfig& cfg, const Series& values,
                          const Series& diffs);

/// Column-wise RMSE: one value per prediction horizon.
Vector rmse_per_step(const Matrix& predictions, const Matrix& targets);

/// RMSE pooled over every window and horizon.
double rmse_overall(const Matrix& predictions, const Matrix& targets);

/// Full pipeline: generate/ingest, differentiate, scale, window, split, then
/// n_runs seeded train/predict/score passes. Runs are independent and
/// execute in parallel when OpenMP is enabled; set parallel_runs = false for
/// the serial reference path.
RunReport run_experiment(const ExperimentConfig& cfg, bool parallel_runs = true);

struct CompareResult {
    bool pass = true;
    std::vector<std::string> lines; // one verdict per compared metric
};

/// PASS per metric when report mean <= reference mean + slack.
CompareResult compare_to_reference(const RunReport& report, const json& reference,
                                   double slack);

/// Deterministic serialization (timing is reported separately in the CSV so
/// that identical configs give byte-identical JSON).
json report_to_json(const RunReport& report);

/// Writes report.json, runs.csv and plot.csv into dir.
void emit_reports(const RunReport& report, const std::string& dir);

} // namespace difflstm
