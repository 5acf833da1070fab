// excite: command-line driver for training runs, preset sweeps, the 2D toy
// demo and the step-overhead benchmark.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "excitation/config.hpp"
#include "excitation/errors.hpp"
#include "excitation/harness.hpp"
#include "excitation/overhead.hpp"
#include "excitation/toy2d.hpp"

#ifdef EXC_HAVE_OPENMP
#include <omp.h>
#endif

namespace {

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        const auto v = std::stoull(item, &used);
        if (used != item.size()) throw exc::ConfigError("bad seed '" + item + "'");
        seeds.push_back(v);
    }
    if (seeds.empty()) throw exc::ConfigError("--seeds needs at least one value");
    return seeds;
}

std::vector<exc::OverheadConfig> parse_sizes(const std::string& text) {
    std::vector<exc::OverheadConfig> sizes;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto x = item.find('x');
        if (x == std::string::npos) throw exc::ConfigError("size '" + item + "' is not WIDTHxDEPTH");
        sizes.push_back({std::stoul(item.substr(0, x)), std::stoul(item.substr(x + 1))});
    }
    return sizes;
}

struct CommonFlags {
    std::string config;
    std::string out;
    std::string data_dir;
    std::string seeds;
    int threads = 0;
};

exc::ExperimentConfig resolve_config(const CommonFlags& f, bool require_config) {
    if (require_config && f.config.empty()) throw exc::ConfigError("--config is required");
    exc::ExperimentConfig cfg = f.config.empty() ? exc::default_experiment_config() : exc::load_config(f.config);
    if (!f.out.empty()) cfg.output_dir = f.out;
    if (!f.data_dir.empty()) cfg.data_dir = f.data_dir;
    if (!f.seeds.empty()) cfg.seeds = parse_seeds(f.seeds);
    cfg.validate();
    return cfg;
}

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--out", f.out, "Output directory");
    cmd->add_option("--data-dir", f.data_dir, "Directory with the CIFAR-10 binary batches");
    cmd->add_option("--seeds", f.seeds, "Comma-separated seed list, e.g. 1,2,3");
    cmd->add_option("--threads", f.threads, "Worker threads")->check(CLI::NonNegativeNumber);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Utilization-modulated training of Top-K sparse MLPs"};
    app.require_subcommand(1);

    CommonFlags run_flags;
    auto* run = app.add_subcommand("run", "Train every seed of one configuration");
    run->add_option("--config", run_flags.config, "Experiment JSON")->required();
    add_common(run, run_flags);

    CommonFlags sweep_flags;
    std::string preset;
    auto* sweep = app.add_subcommand("sweep", "Run a preset sweep (axis x {vanilla, zerosum, positivesum})");
    sweep->add_option("--preset", preset, "Preset name")->required();
    sweep->add_option("--config", sweep_flags.config, "Base experiment JSON (defaults otherwise)");
    add_common(sweep, sweep_flags);

    std::string toy_variant = "zerosum";
    std::size_t toy_steps = 100;
    std::string toy_out = "results/toy2d";
    auto* toy = app.add_subcommand("toy2d", "2D quadratic bowl: SGD, SGD+momentum, excited SGD");
    toy->add_option("--variant", toy_variant, "Excitation variant for the excited trajectory");
    toy->add_option("--steps", toy_steps, "Optimisation steps");
    toy->add_option("--out", toy_out, "Output directory");

    std::string bench_sizes = "32x2,128x2,512x2";
    std::string bench_out;
    exc::OverheadOptions bench_opts;
    auto* bench = app.add_subcommand("bench", "Step-latency overhead of excitation");
    bench->add_option("--sizes", bench_sizes, "Comma-separated WIDTHxDEPTH list");
    bench->add_option("--trials", bench_opts.trials, "Timed trials per session (>= 100)");
    bench->add_option("--burn-in", bench_opts.burn_in, "Untimed warm-up steps");
    bench->add_option("--sessions", bench_opts.sessions, "Independent sessions");
    bench->add_option("--batch", bench_opts.batch, "Batch size");
    bench->add_option("--out", bench_out, "Write overhead.json here");

    std::string validate_path;
    auto* validate = app.add_subcommand("validate-config", "Check an experiment JSON and print its hash");
    validate->add_option("--config", validate_path, "Experiment JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (*run) {
            const auto cfg = resolve_config(run_flags, true);
#ifdef EXC_HAVE_OPENMP
            if (run_flags.threads > 0) omp_set_num_threads(run_flags.threads);
#endif
            const auto data = exc::load_data(cfg);
            const auto result = exc::run_experiment(cfg, data, true);
            std::cout << "config " << exc::config_hash(cfg) << ": dev accuracy " << 100.0 * result.mean_dev_accuracy
                      << " +- " << 100.0 * result.std_dev_accuracy << " % over " << result.runs.size() << " seed(s)";
            if (result.diverged) std::cout << ", " << result.diverged << " diverged";
            std::cout << "\nwrote " << cfg.output_dir << "\n";
        } else if (*sweep) {
            const auto cfg = resolve_config(sweep_flags, false);
            const auto data = exc::load_data(cfg);
            const std::size_t threads = sweep_flags.threads > 0 ? static_cast<std::size_t>(sweep_flags.threads) : 1;
            const auto result = exc::run_sweep(preset, cfg, data, threads, true);
            exc::print_sweep_table(result, std::cout);
        } else if (*toy) {
            const auto result = exc::toy2d_demo(exc::parse_excitation_variant(toy_variant), toy_steps);
            exc::write_toy2d(result, toy_out);
            std::cout << "multipliers [" << result.multipliers[0] << ", " << result.multipliers[1] << "]\n";
            for (const auto& t : result.trajectories) {
                std::cout << t.name << ": ";
                if (t.steps_to_tolerance) std::cout << *t.steps_to_tolerance << " steps to loss < " << result.problem.tolerance;
                else std::cout << "tolerance not reached";
                std::cout << "\n";
            }
        } else if (*bench) {
            const auto sizes = parse_sizes(bench_sizes);
            const auto reports = exc::overhead_bench(sizes, bench_opts);
            nlohmann::json out = nlohmann::json::array();
            std::cout << "W\tL\tN_e\tparams\tt_off(ms)\tt_on(ms)\tchi(%)\tchi_self(%)\n";
            for (const auto& r : reports) {
                std::cout << r.config.width << '\t' << r.config.depth << '\t' << r.experts << '\t' << r.parameters
                          << '\t' << 1e3 * r.t_off << '\t' << 1e3 * r.t_on << '\t' << 100.0 * r.chi_mean << " +- "
                          << 100.0 * r.chi_std << '\t' << 100.0 * r.chi_self_mean << " +- " << 100.0 * r.chi_self_std
                          << '\n';
                out.push_back({{"width", r.config.width}, {"depth", r.config.depth}, {"experts", r.experts},
                               {"parameters", r.parameters}, {"t_off", r.t_off}, {"t_on", r.t_on},
                               {"chi_mean", r.chi_mean}, {"chi_std", r.chi_std}, {"chi_self_mean", r.chi_self_mean},
                               {"chi_self_std", r.chi_self_std}, {"session_noise", r.session_noise},
                               {"chi_sessions", r.chi_sessions},
                               {"trials", r.trials}, {"burn_in", r.burn_in}});
            }
            if (!bench_out.empty()) {
                std::filesystem::create_directories(bench_out);
                std::ofstream(std::filesystem::path(bench_out) / "overhead.json") << out.dump(2) << '\n';
            }
        } else if (*validate) {
            const auto cfg = exc::load_config(validate_path);
            std::cout << "ok " << exc::config_hash(cfg) << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
