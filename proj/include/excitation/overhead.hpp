#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace exc {

struct OverheadConfig {
    std::size_t width = 128;
    std::size_t depth = 2;
};

struct OverheadOptions {
    std::size_t trials = 200;   // timed steps per path and session, after burn-in
    std::size_t burn_in = 50;
    std::size_t sessions = 3;
    std::size_t batch = 64;
    double sparsity = 0.9;
    std::uint64_t seed = 7;
};

struct OverheadReport {
    OverheadConfig config;
    std::size_t experts = 0;     // N_e = W x L
    std::size_t parameters = 0;
    double t_off = 0.0;          // median step latency, excitation disabled (s), mean over sessions
    double t_on = 0.0;           // median step latency, zerosum excitation (s), mean over sessions
    double chi_mean = 0.0;       // (t_on - t_off) / t_off
    double chi_std = 0.0;        // across sessions
    double chi_self_mean = 0.0;  // disabled vs disabled
    double chi_self_std = 0.0;
    double session_noise = 0.0;  // std over sessions of the disabled-path median, relative to its mean
    std::vector<double> chi_sessions;
    std::vector<double> chi_self_sessions;
    std::size_t trials = 0;
    std::size_t burn_in = 0;
};

/// Times a full training step (forward, loss, backward, optimizer, update)
/// with excitation disabled and with zerosum excitation, interleaving the
/// paths trial by trial. Throws ConfigError if trials < 100.
std::vector<OverheadReport> overhead_bench(std::span<const OverheadConfig> sizes, const OverheadOptions& options);

/// Least-squares slope of y on x.
double linear_fit_slope(std::span<const double> x, std::span<const double> y);

}  // namespace exc
