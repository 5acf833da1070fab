#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "excitation/excitation.hpp"
#include "excitation/optimizers.hpp"
#include "excitation/topk_mlp.hpp"

namespace exc {

/// Everything needed to reproduce one experiment. Serialises to a flat JSON
/// object; see to_json() for the key names.
struct ExperimentConfig {
    std::string dataset = "cifar10";  // "cifar10" or "synth"
    ModelConfig model;
    OptimizerConfig optimizer;
    ScheduleKind schedule = ScheduleKind::cosine;
    ExcitationConfig excitation;
    std::size_t total_epochs = 30;
    std::size_t batch_size = 512;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::size_t eval_every = 0;  // steps between evaluations; 0 = end of every epoch
    std::string output_dir = "results";
    std::string data_dir;

    // Synthetic-cluster source (dataset == "synth").
    std::size_t synth_train = 4000;
    std::size_t synth_test = 1000;
    double synth_spread = 1.0;
    std::uint64_t synth_seed = 0;

    /// Throws ConfigError describing the first invalid field.
    void validate() const;
};

/// Defaults used by the CIFAR-10 presets: W=128, L=4, s=0.9, |B|=512,
/// cosine schedule, gamma=1, seeds {1,2,3}, SGD with lr 0.01.
ExperimentConfig default_experiment_config();

/// Default learning rate per base optimizer.
double default_lr(OptimizerKind kind);

nlohmann::json to_json(const ExperimentConfig& config);
/// Missing keys keep their defaults; unknown keys and bad values throw ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// FNV-1a 64 of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept;

}  // namespace exc
