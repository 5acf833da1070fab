#pragma once

// Utilization-driven update modulation. Given which experts each sample of
// a batch activated, an excitation function maps per-expert utilization to
// a multiplier on that expert's proposed parameter change. Optimizer state
// is never touched: only the applied delta is rescaled.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "excitation/optimizers.hpp"
#include "excitation/topk_mlp.hpp"

namespace exc {

enum class ExcitationVariant { none, zerosum, positivesum, expdiff, global_exp, random_boost, inverted };

std::string_view to_string(ExcitationVariant v) noexcept;
ExcitationVariant parse_excitation_variant(std::string_view name);

struct ExcitationConfig {
    ExcitationVariant variant = ExcitationVariant::none;
    double gamma = 1.0;
    double utilization_floor = 1e-6;  // inverted only

    void validate() const;
};

/// Per-layer utilization u_k in [0, 1].
using Utilization = std::vector<std::vector<double>>;
/// Per-layer multipliers, one per expert.
using Coefficients = std::vector<std::vector<double>>;

/// u_k = fraction of batch rows whose mask selects expert k.
/// Throws InputError on an empty batch.
Utilization compute_utilization(const ActivationRecord& record);

// Single-layer excitation functions. `degenerate`, when given, is
// incremented whenever normalisation is impossible and Phi falls back to 1.

std::vector<double> phi_zerosum(std::span<const double> u, double gamma,
                                std::uint64_t* degenerate = nullptr);
std::vector<double> phi_positivesum(std::span<const double> u, double gamma,
                                    std::uint64_t* degenerate = nullptr);
std::vector<double> phi_expdiff(std::span<const double> u, double gamma);
/// Scalar boost shared by every expert of the layer.
double phi_global_exp(std::span<const double> u, double gamma);
std::vector<double> phi_random_boost(std::span<const double> u, double gamma, std::mt19937_64& rng,
                                     std::uint64_t* degenerate = nullptr);
std::vector<double> phi_inverted(std::span<const double> u, double gamma, double floor);

/// Stateful front end: owns the RNG for random_boost and the fallback counter.
class Excitation {
public:
    explicit Excitation(ExcitationConfig config, std::uint64_t seed = 0);

    const ExcitationConfig& config() const noexcept { return config_; }
    std::uint64_t degenerate_count() const noexcept { return degenerate_; }

    /// Multipliers for every layer of `utilization`. variant=none gives exactly 1.
    Coefficients coefficients(const Utilization& utilization);

private:
    ExcitationConfig config_;
    std::mt19937_64 rng_;
    std::uint64_t degenerate_ = 0;
};

/// theta <- theta + Phi_k * delta on expert slices; theta <- theta + delta on
/// everything outside the partition. Throws std::logic_error on a
/// coefficient/partition mismatch.
void excite_step(TensorSet& params, const UpdateDelta& delta, const Coefficients& coefficients,
                 std::span<const ExpertPartition> partition);

}  // namespace exc
