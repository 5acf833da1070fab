#pragma once

// Base optimizers expressed as "propose a delta": the optimizer advances its
// own state from the raw gradient and returns the change it would apply,
// leaving the application (and any rescaling of it) to the caller.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "excitation/topk_mlp.hpp"

namespace exc {

enum class OptimizerKind { sgd, sgd_momentum, adam, adamw, rmsprop, adagrad };

std::string_view to_string(OptimizerKind kind) noexcept;
OptimizerKind parse_optimizer_kind(std::string_view name);

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::sgd;
    double lr = 0.01;
    double momentum = 0.9;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;  // AdamW only
    double rms_alpha = 0.99;

    void validate() const;
};

struct OptimizerState {
    TensorSet m;  // momentum / first moment
    TensorSet v;  // second moment / squared-gradient accumulator
    std::uint64_t step = 0;

    friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

using UpdateDelta = TensorSet;

/// Advances `state` with the raw `grads` and returns delta such that the
/// unmodulated step is params + delta. `lr` overrides config.lr (schedules).
/// Throws NumericError if any gradient is NaN or Inf.
UpdateDelta propose_delta(OptimizerState& state, const OptimizerConfig& config,
                          const TensorSet& grads, const TensorSet& params, double lr);

inline UpdateDelta propose_delta(OptimizerState& state, const OptimizerConfig& config,
                                 const TensorSet& grads, const TensorSet& params) {
    return propose_delta(state, config, grads, params, config.lr);
}

/// params += delta, tensor by tensor.
void apply_delta(TensorSet& params, const UpdateDelta& delta);

enum class ScheduleKind { constant, cosine };

std::string_view to_string(ScheduleKind kind) noexcept;
ScheduleKind parse_schedule_kind(std::string_view name);

struct ScheduleConfig {
    ScheduleKind kind = ScheduleKind::cosine;
    std::uint64_t total_steps = 1;
    double base_lr = 0.01;
};

/// Learning rate at step t; t beyond total_steps clamps to the final value.
double lr_at(const ScheduleConfig& schedule, std::uint64_t t);

}  // namespace exc
