#include "excitation/overhead.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "excitation/errors.hpp"
#include "excitation/excitation.hpp"
#include "excitation/optimizers.hpp"
#include "excitation/topk_mlp.hpp"

namespace exc {

namespace {

struct StepBench {
    ModelConfig model;
    ModelParams params;
    OptimizerState state;
    OptimizerConfig opt;
    Excitation excitation;
    std::vector<ExpertPartition> partition;
    bool excite;

    StepBench(const ModelConfig& m, std::uint64_t seed, bool with_excitation)
        : model(m), params(init_params(m, seed)),
          excitation({with_excitation ? ExcitationVariant::zerosum : ExcitationVariant::none, 1.0, 1e-6}, seed),
          partition(expert_partitions(m)), excite(with_excitation) {
        opt.kind = OptimizerKind::sgd;
        opt.lr = 1e-3;
    }

    double timed_step(const Matrix& x, std::span<const std::int32_t> y) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto fwd = forward(params, x, model);
        const auto loss = softmax_cross_entropy(fwd.logits, y);
        const auto grads = backward(params, model, fwd, loss.grad_logits);
        const auto delta = propose_delta(state, opt, grads, params.tensors);
        if (excite) {
            const auto phi = excitation.coefficients(compute_utilization(fwd.activation));
            excite_step(params.tensors, delta, phi, partition);
        } else {
            apply_delta(params.tensors, delta);
        }
        const auto t1 = std::chrono::steady_clock::now();
        return std::chrono::duration<double>(t1 - t0).count();
    }
};

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void mean_std(const std::vector<double>& v, double& mean, double& sd) {
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
}

}  // namespace

std::vector<OverheadReport> overhead_bench(std::span<const OverheadConfig> sizes, const OverheadOptions& options) {
    if (options.trials < 100) throw ConfigError("overhead_bench needs at least 100 trials after burn-in");
    if (options.sessions == 0 || options.batch == 0) throw ConfigError("sessions and batch must be positive");
    std::vector<OverheadReport> reports;
    for (const auto& size : sizes) {
        ModelConfig model{size.width, size.width, size.depth, 10, options.sparsity, false};
        model.validate();

        std::mt19937_64 rng(options.seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        Matrix x(options.batch, model.input_dim);
        for (double& v : x.values()) v = normal(rng);
        std::vector<std::int32_t> y(options.batch);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<std::int32_t>(i % model.classes);

        OverheadReport report;
        report.config = size;
        report.experts = size.width * size.depth;
        for (const auto& t : init_params(model, options.seed).tensors) report.parameters += t.size();
        report.trials = options.trials;
        report.burn_in = options.burn_in;

        std::vector<double> t_off_sessions, t_on_sessions;
        for (std::size_t s = 0; s < options.sessions; ++s) {
            StepBench off(model, options.seed, false);
            StepBench off_again(model, options.seed, false);
            StepBench on(model, options.seed, true);
            for (std::size_t b = 0; b < options.burn_in; ++b) {
                off.timed_step(x, y);
                on.timed_step(x, y);
                off_again.timed_step(x, y);
            }
            std::vector<double> t_off, t_on, t_self;
            t_off.reserve(options.trials);
            t_on.reserve(options.trials);
            t_self.reserve(options.trials);
            // Rotate which path runs first so cache warmth does not favour one of them.
            for (std::size_t t = 0; t < options.trials; ++t) {
                for (std::size_t slot = 0; slot < 3; ++slot) {
                    switch ((t + slot) % 3) {
                        case 0: t_off.push_back(off.timed_step(x, y)); break;
                        case 1: t_on.push_back(on.timed_step(x, y)); break;
                        default: t_self.push_back(off_again.timed_step(x, y)); break;
                    }
                }
            }
            const double m_off = median(t_off), m_on = median(t_on), m_self = median(t_self);
            t_off_sessions.push_back(m_off);
            t_on_sessions.push_back(m_on);
            report.chi_sessions.push_back((m_on - m_off) / m_off);
            report.chi_self_sessions.push_back((m_self - m_off) / m_off);
        }
        double off_std = 0.0, unused = 0.0;
        mean_std(t_off_sessions, report.t_off, off_std);
        report.session_noise = off_std / report.t_off;
        mean_std(t_on_sessions, report.t_on, unused);
        mean_std(report.chi_sessions, report.chi_mean, report.chi_std);
        mean_std(report.chi_self_sessions, report.chi_self_mean, report.chi_self_std);
        reports.push_back(std::move(report));
    }
    return reports;
}

double linear_fit_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw InputError("linear_fit_slope: need two or more paired points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(y.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw InputError("linear_fit_slope: x has zero variance");
    return sxy / sxx;
}

}  // namespace exc
