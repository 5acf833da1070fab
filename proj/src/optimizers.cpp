#include "excitation/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "excitation/errors.hpp"

namespace exc {

std::string_view to_string(OptimizerKind kind) noexcept {
    switch (kind) {
        case OptimizerKind::sgd: return "sgd";
        case OptimizerKind::sgd_momentum: return "sgd_momentum";
        case OptimizerKind::adam: return "adam";
        case OptimizerKind::adamw: return "adamw";
        case OptimizerKind::rmsprop: return "rmsprop";
        case OptimizerKind::adagrad: return "adagrad";
    }
    return "unknown";
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
    for (auto k : {OptimizerKind::sgd, OptimizerKind::sgd_momentum, OptimizerKind::adam,
                   OptimizerKind::adamw, OptimizerKind::rmsprop, OptimizerKind::adagrad})
        if (to_string(k) == name) return k;
    throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

void OptimizerConfig::validate() const {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive");
    auto unit = [](double v, const char* name) {
        if (!(v >= 0.0 && v < 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1)");
    };
    unit(momentum, "momentum");
    unit(beta1, "beta1");
    unit(beta2, "beta2");
    unit(rms_alpha, "rmsprop alpha");
    if (!(eps > 0.0)) throw ConfigError("eps must be positive");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
}

namespace {

bool uses_first_moment(OptimizerKind k) {
    return k == OptimizerKind::sgd_momentum || k == OptimizerKind::adam || k == OptimizerKind::adamw;
}

bool uses_second_moment(OptimizerKind k) {
    return k == OptimizerKind::adam || k == OptimizerKind::adamw || k == OptimizerKind::rmsprop ||
           k == OptimizerKind::adagrad;
}

}  // namespace

UpdateDelta propose_delta(OptimizerState& state, const OptimizerConfig& config,
                          const TensorSet& grads, const TensorSet& params, double lr) {
    if (grads.size() != params.size()) throw ShapeError("propose_delta: grads/params count mismatch");
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (grads[i].rows() != params[i].rows() || grads[i].cols() != params[i].cols())
            throw ShapeError("propose_delta: gradient " + std::to_string(i) + " shape mismatch");
        if (!grads[i].all_finite())
            throw NumericError("propose_delta: non-finite gradient in tensor " + std::to_string(i));
    }
    if (uses_first_moment(config.kind) && state.m.empty()) state.m = zeros_like(params);
    if (uses_second_moment(config.kind) && state.v.empty()) state.v = zeros_like(params);
    state.step += 1;
    const double t = static_cast<double>(state.step);

    UpdateDelta delta = zeros_like(params);
    for (std::size_t i = 0; i < grads.size(); ++i) {
        auto g = grads[i].values();
        auto d = delta[i].values();
        auto p = params[i].values();
        switch (config.kind) {
            case OptimizerKind::sgd:
                for (std::size_t j = 0; j < g.size(); ++j) d[j] = -lr * g[j];
                break;
            case OptimizerKind::sgd_momentum: {
                auto m = state.m[i].values();
                for (std::size_t j = 0; j < g.size(); ++j) {
                    m[j] = config.momentum * m[j] + g[j];
                    d[j] = -lr * m[j];
                }
                break;
            }
            case OptimizerKind::adam:
            case OptimizerKind::adamw: {
                auto m = state.m[i].values();
                auto v = state.v[i].values();
                const double c1 = 1.0 - std::pow(config.beta1, t);
                const double c2 = 1.0 - std::pow(config.beta2, t);
                const bool decoupled = config.kind == OptimizerKind::adamw;
                for (std::size_t j = 0; j < g.size(); ++j) {
                    m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g[j];
                    v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g[j] * g[j];
                    const double m_hat = m[j] / c1;
                    const double v_hat = v[j] / c2;
                    d[j] = -lr * m_hat / (std::sqrt(v_hat) + config.eps);
                    if (decoupled) d[j] -= lr * config.weight_decay * p[j];
                }
                break;
            }
            case OptimizerKind::rmsprop: {
                auto v = state.v[i].values();
                for (std::size_t j = 0; j < g.size(); ++j) {
                    v[j] = config.rms_alpha * v[j] + (1.0 - config.rms_alpha) * g[j] * g[j];
                    d[j] = -lr * g[j] / (std::sqrt(v[j]) + config.eps);
                }
                break;
            }
            case OptimizerKind::adagrad: {
                auto v = state.v[i].values();
                for (std::size_t j = 0; j < g.size(); ++j) {
                    v[j] += g[j] * g[j];
                    d[j] = -lr * g[j] / (std::sqrt(v[j]) + config.eps);
                }
                break;
            }
        }
    }
    return delta;
}

void apply_delta(TensorSet& params, const UpdateDelta& delta) {
    if (params.size() != delta.size()) throw ShapeError("apply_delta: tensor count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto p = params[i].values();
        auto d = delta[i].values();
        if (p.size() != d.size()) throw ShapeError("apply_delta: tensor size mismatch");
        for (std::size_t j = 0; j < p.size(); ++j) p[j] += d[j];
    }
}

std::string_view to_string(ScheduleKind kind) noexcept {
    return kind == ScheduleKind::constant ? "constant" : "cosine";
}

ScheduleKind parse_schedule_kind(std::string_view name) {
    if (name == "constant" || name == "none") return ScheduleKind::constant;
    if (name == "cosine") return ScheduleKind::cosine;
    throw ConfigError("unknown schedule '" + std::string(name) + "'");
}

double lr_at(const ScheduleConfig& schedule, std::uint64_t t) {
    if (schedule.kind == ScheduleKind::constant) return schedule.base_lr;
    const std::uint64_t total = std::max<std::uint64_t>(schedule.total_steps, 1);
    const double frac = static_cast<double>(std::min(t, total)) / static_cast<double>(total);
    return schedule.base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

}  // namespace exc
