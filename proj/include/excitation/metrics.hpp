#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "excitation/linalg.hpp"
#include "excitation/topk_mlp.hpp"

namespace exc {

/// Class-conditional activation counts S[n][c] for every hidden layer.
class SpecializationAccumulator {
public:
    SpecializationAccumulator(std::size_t layers, std::size_t experts, std::size_t classes);

    void add(const ActivationRecord& record, std::span<const std::int32_t> labels);

    std::size_t layers() const noexcept { return counts_.size(); }
    std::size_t experts() const noexcept { return experts_; }
    std::size_t classes() const noexcept { return classes_; }
    /// experts x classes, row-major.
    const std::vector<std::uint64_t>& counts(std::size_t layer) const { return counts_.at(layer); }

private:
    std::size_t experts_;
    std::size_t classes_;
    std::vector<std::vector<std::uint64_t>> counts_;
};

/// Mean Gini-Simpson concentration sum_c p_{n,c}^2 over experts with a
/// nonzero row. nullopt when every row is zero.
std::optional<double> specialization_score(std::span<const std::uint64_t> counts, std::size_t experts,
                                           std::size_t classes);

/// Softmax over all pre-activations of one sample in one layer.
std::vector<double> routing_distribution(std::span<const double> pre_activations);

/// Shannon entropy in nats with 0 ln 0 = 0.
double entropy(std::span<const double> p);

/// Mean entropy of per-row routing distributions of a pre-activation matrix.
double mean_routing_entropy(const Matrix& pre_activations);

/// Mean entropy over an explicit list of distributions.
double mean_routing_entropy(std::span<const std::vector<double>> distributions);

/// Fraction of rows whose argmax (ties to the lowest index) equals the label.
double accuracy(const Matrix& logits, std::span<const std::int32_t> labels);

/// Number of correct rows; used to aggregate accuracy across batches.
std::size_t correct_count(const Matrix& logits, std::span<const std::int32_t> labels);

}  // namespace exc
