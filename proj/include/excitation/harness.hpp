#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "excitation/config.hpp"
#include "excitation/data.hpp"
#include "excitation/optimizers.hpp"
#include "excitation/topk_mlp.hpp"

namespace exc {

/// One metrics row: an evaluation point on one split.
struct RunRecord {
    std::string run_id;
    std::uint64_t seed = 0;
    std::uint64_t epoch = 0;
    std::uint64_t step = 0;
    std::string split;  // "train" or "dev"
    double loss = 0.0;
    double accuracy = 0.0;
    double lr = 0.0;
    std::vector<double> entropy;         // per layer
    std::vector<double> specialization;  // per layer, NaN = no data
    std::vector<double> phi_min;
    std::vector<double> phi_mean;
    std::vector<double> phi_max;
};

/// CSV header for a model with `layers` hidden layers.
std::string csv_header(std::size_t layers);
std::string csv_row(const RunRecord& record);

/// Shortest round-trip decimal form; "nan"/"inf"/"-inf" for non-finite.
std::string format_number(double v);

struct RunOptions {
    std::string run_id;
    /// When set, rows are appended to this file as they are produced.
    std::optional<std::filesystem::path> csv_path;
    /// false runs the bare base optimizer with no utilization or modulation code.
    bool excitation_enabled = true;
    /// Abort after this many steps (0 = full budget); used by tests.
    std::uint64_t max_steps = 0;
};

struct RunResult {
    std::string run_id;
    std::uint64_t seed = 0;
    bool diverged = false;
    std::string divergence;
    std::uint64_t steps = 0;
    double final_dev_accuracy = 0.0;
    double final_dev_loss = 0.0;
    std::vector<RunRecord> records;
    ModelParams final_params;
    OptimizerState final_state;
    std::uint64_t initial_params_hash = 0;  // FNV-1a over the step-0 parameters
    std::uint64_t batch_sequence_hash = 0;  // FNV-1a over every consumed batch index
    std::uint64_t degenerate_phi = 0;
};

/// Loads the dataset named by the config (CIFAR-10 from data_dir, or synth).
DataSplits load_data(const ExperimentConfig& config);

/// Trains one (config, seed) unit. NaN loss or non-finite gradients end the
/// run with diverged=true instead of throwing.
RunResult train_run(const ExperimentConfig& config, const DataSplits& data, std::uint64_t seed,
                    const RunOptions& options = {});

struct ExperimentResult {
    std::vector<RunResult> runs;
    double mean_dev_accuracy = 0.0;  // over non-diverged runs
    double std_dev_accuracy = 0.0;   // sample std, 0 for a single run
    std::size_t diverged = 0;
};

/// Runs every seed of `config` sequentially. With `write_outputs`, one CSV
/// per run plus summary.json land in config.output_dir.
ExperimentResult run_experiment(const ExperimentConfig& config, const DataSplits& data,
                                bool write_outputs = true, const std::string& run_prefix = "");

nlohmann::json summary_json(const ExperimentConfig& config, const ExperimentResult& result);

struct SweepCell {
    std::string axis;   // e.g. "sparsity=0.9"
    std::string label;  // variant label, "vanilla" for none
    ExperimentConfig config;
    ExperimentResult result;
    double delta = 0.0;  // mean accuracy minus the vanilla cell on the same axis value
};

struct SweepResult {
    std::string preset;
    std::vector<SweepCell> cells;
};

/// Names accepted by run_sweep.
const std::vector<std::string>& sweep_presets();

/// Expands a preset around `base` into cells (axis value x variant) without running them.
std::vector<SweepCell> plan_sweep(const std::string& preset, const ExperimentConfig& base);

/// Runs a preset; `threads` > 1 runs independent cells concurrently.
SweepResult run_sweep(const std::string& preset, const ExperimentConfig& base, const DataSplits& data,
                      std::size_t threads = 1, bool write_outputs = true);

/// Text table: axis | variant | dev accuracy (mean +- std) | delta.
void print_sweep_table(const SweepResult& sweep, std::ostream& out);
nlohmann::json sweep_summary_json(const SweepResult& sweep);

}  // namespace exc
