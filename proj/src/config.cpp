#include "excitation/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "excitation/errors.hpp"

namespace exc {

using nlohmann::json;

double default_lr(OptimizerKind kind) {
    switch (kind) {
        case OptimizerKind::sgd:
        case OptimizerKind::sgd_momentum:
        case OptimizerKind::adagrad: return 0.01;
        case OptimizerKind::adam:
        case OptimizerKind::adamw:
        case OptimizerKind::rmsprop: return 1e-4;
    }
    return 0.01;
}

ExperimentConfig default_experiment_config() { return ExperimentConfig{}; }

void ExperimentConfig::validate() const {
    if (dataset != "cifar10" && dataset != "synth")
        throw ConfigError("dataset must be \"cifar10\" or \"synth\", got \"" + dataset + "\"");
    model.validate();
    if (dataset == "cifar10" && model.input_dim != 3072) throw ConfigError("cifar10 requires input_dim 3072");
    if (dataset == "cifar10" && model.classes != 10) throw ConfigError("cifar10 requires classes 10");
    optimizer.validate();
    excitation.validate();
    if (total_epochs == 0) throw ConfigError("total_epochs must be positive");
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (seeds.empty()) throw ConfigError("seeds must not be empty");
    if (dataset == "synth") {
        if (synth_train == 0 || synth_test == 0) throw ConfigError("synth sizes must be positive");
        if (!(synth_spread >= 0.0)) throw ConfigError("synth_spread must be non-negative");
    }
}

json to_json(const ExperimentConfig& c) {
    json j;
    j["dataset"] = c.dataset;
    j["input_dim"] = c.model.input_dim;
    j["width"] = c.model.width;
    j["depth"] = c.model.depth;
    j["classes"] = c.model.classes;
    j["sparsity"] = c.model.sparsity;
    j["use_residual"] = c.model.use_residual;
    j["optimizer"] = std::string(to_string(c.optimizer.kind));
    j["lr"] = c.optimizer.lr;
    j["momentum"] = c.optimizer.momentum;
    j["beta1"] = c.optimizer.beta1;
    j["beta2"] = c.optimizer.beta2;
    j["eps"] = c.optimizer.eps;
    j["weight_decay"] = c.optimizer.weight_decay;
    j["rmsprop_alpha"] = c.optimizer.rms_alpha;
    j["schedule"] = std::string(to_string(c.schedule));
    j["total_epochs"] = c.total_epochs;
    j["batch_size"] = c.batch_size;
    j["excitation_variant"] = std::string(to_string(c.excitation.variant));
    j["gamma"] = c.excitation.gamma;
    j["utilization_floor"] = c.excitation.utilization_floor;
    j["eval_every"] = c.eval_every;
    j["seeds"] = c.seeds;
    j["output_dir"] = c.output_dir;
    j["data_dir"] = c.data_dir;
    j["synth_train"] = c.synth_train;
    j["synth_test"] = c.synth_test;
    j["synth_spread"] = c.synth_spread;
    j["synth_seed"] = c.synth_seed;
    return j;
}

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
        out = it->get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

template <typename T>
void read_count(const json& j, const char* key, T& out) {
    auto it = j.find(key);
    if (it == j.end()) return;
    if (!it->is_number_integer() || it->get<long long>() < 0)
        throw ConfigError(std::string("config key '") + key + "' must be a non-negative integer");
    out = it->get<T>();
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    static const std::set<std::string> known = {
        "dataset",      "input_dim",  "width",         "depth",       "classes",
        "sparsity",     "use_residual", "optimizer",   "lr",          "momentum",
        "beta1",        "beta2",      "eps",           "weight_decay", "rmsprop_alpha",
        "schedule",     "total_epochs", "batch_size",  "excitation_variant", "gamma",
        "utilization_floor", "eval_every", "seeds",    "output_dir",  "data_dir",
        "synth_train",  "synth_test", "synth_spread",  "synth_seed"};
    for (const auto& [key, _] : j.items())
        if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");

    ExperimentConfig c;
    read(j, "dataset", c.dataset);
    if (c.dataset == "synth") {
        c.model.input_dim = 32;
    }
    read_count(j, "input_dim", c.model.input_dim);
    read_count(j, "width", c.model.width);
    read_count(j, "depth", c.model.depth);
    read_count(j, "classes", c.model.classes);
    read(j, "sparsity", c.model.sparsity);
    read(j, "use_residual", c.model.use_residual);
    if (auto it = j.find("optimizer"); it != j.end()) {
        if (!it->is_string()) throw ConfigError("config key 'optimizer' must be a string");
        c.optimizer.kind = parse_optimizer_kind(it->get<std::string>());
        c.optimizer.lr = default_lr(c.optimizer.kind);
    }
    read(j, "lr", c.optimizer.lr);
    read(j, "momentum", c.optimizer.momentum);
    read(j, "beta1", c.optimizer.beta1);
    read(j, "beta2", c.optimizer.beta2);
    read(j, "eps", c.optimizer.eps);
    read(j, "weight_decay", c.optimizer.weight_decay);
    read(j, "rmsprop_alpha", c.optimizer.rms_alpha);
    if (auto it = j.find("schedule"); it != j.end()) {
        if (!it->is_string()) throw ConfigError("config key 'schedule' must be a string");
        c.schedule = parse_schedule_kind(it->get<std::string>());
    }
    read_count(j, "total_epochs", c.total_epochs);
    read_count(j, "batch_size", c.batch_size);
    if (auto it = j.find("excitation_variant"); it != j.end()) {
        if (!it->is_string()) throw ConfigError("config key 'excitation_variant' must be a string");
        c.excitation.variant = parse_excitation_variant(it->get<std::string>());
    }
    read(j, "gamma", c.excitation.gamma);
    read(j, "utilization_floor", c.excitation.utilization_floor);
    read_count(j, "eval_every", c.eval_every);
    if (auto it = j.find("seeds"); it != j.end()) {
        if (!it->is_array()) throw ConfigError("config key 'seeds' must be an array");
        c.seeds.clear();
        for (const auto& s : *it) {
            if (!s.is_number_integer() || s.get<long long>() < 0)
                throw ConfigError("seeds must be non-negative integers");
            c.seeds.push_back(s.get<std::uint64_t>());
        }
    }
    read(j, "output_dir", c.output_dir);
    read(j, "data_dir", c.data_dir);
    read_count(j, "synth_train", c.synth_train);
    read_count(j, "synth_test", c.synth_test);
    read(j, "synth_spread", c.synth_spread);
    read_count(j, "synth_seed", c.synth_seed);
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed) noexcept {
    auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(const ExperimentConfig& config) {
    const std::string dump = to_json(config).dump();
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(dump.data(), dump.size())));
    return buf;
}

}  // namespace exc
