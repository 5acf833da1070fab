#include "excitation/metrics.hpp"

#include <cmath>

#include "excitation/errors.hpp"

namespace exc {

SpecializationAccumulator::SpecializationAccumulator(std::size_t layers, std::size_t experts,
                                                     std::size_t classes)
    : experts_(experts), classes_(classes),
      counts_(layers, std::vector<std::uint64_t>(experts * classes, 0)) {}

void SpecializationAccumulator::add(const ActivationRecord& record, std::span<const std::int32_t> labels) {
    if (record.layers() != counts_.size()) throw ShapeError("specialization: layer count mismatch");
    for (std::size_t l = 0; l < record.layers(); ++l) {
        const Matrix& mask = record.masks[l];
        if (mask.rows() != labels.size() || mask.cols() != experts_)
            throw ShapeError("specialization: mask shape mismatch");
        auto& s = counts_[l];
        for (std::size_t r = 0; r < mask.rows(); ++r) {
            const auto c = labels[r];
            if (c < 0 || static_cast<std::size_t>(c) >= classes_)
                throw InputError("specialization: label out of range");
            auto row = mask.row(r);
            for (std::size_t n = 0; n < experts_; ++n)
                if (row[n] != 0.0) ++s[n * classes_ + static_cast<std::size_t>(c)];
        }
    }
}

std::optional<double> specialization_score(std::span<const std::uint64_t> counts, std::size_t experts,
                                           std::size_t classes) {
    if (counts.size() != experts * classes) throw ShapeError("specialization_score: shape mismatch");
    double total = 0.0;
    std::size_t active = 0;
    for (std::size_t n = 0; n < experts; ++n) {
        auto row = counts.subspan(n * classes, classes);
        std::uint64_t row_sum = 0;
        for (auto v : row) row_sum += v;
        if (row_sum == 0) continue;
        ++active;
        double concentration = 0.0;
        for (auto v : row) {
            const double p = static_cast<double>(v) / static_cast<double>(row_sum);
            concentration += p * p;
        }
        total += concentration;
    }
    if (active == 0) return std::nullopt;
    return total / static_cast<double>(active);
}

std::vector<double> routing_distribution(std::span<const double> pre_activations) {
    return softmax(pre_activations);
}

double entropy(std::span<const double> p) {
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

double mean_routing_entropy(const Matrix& pre_activations) {
    if (pre_activations.rows() == 0) return 0.0;
    double total = 0.0;
    for (std::size_t r = 0; r < pre_activations.rows(); ++r)
        total += entropy(routing_distribution(pre_activations.row(r)));
    return total / static_cast<double>(pre_activations.rows());
}

double mean_routing_entropy(std::span<const std::vector<double>> distributions) {
    if (distributions.empty()) return 0.0;
    double total = 0.0;
    for (const auto& p : distributions) total += entropy(p);
    return total / static_cast<double>(distributions.size());
}

std::size_t correct_count(const Matrix& logits, std::span<const std::int32_t> labels) {
    if (labels.size() != logits.rows()) throw ShapeError("accuracy: label count mismatch");
    std::size_t correct = 0;
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        auto row = logits.row(r);
        std::size_t best = 0;
        for (std::size_t c = 1; c < row.size(); ++c)
            if (row[c] > row[best]) best = c;
        if (static_cast<std::int64_t>(best) == labels[r]) ++correct;
    }
    return correct;
}

double accuracy(const Matrix& logits, std::span<const std::int32_t> labels) {
    if (logits.rows() == 0) return 0.0;
    return static_cast<double>(correct_count(logits, labels)) / static_cast<double>(logits.rows());
}

}  // namespace exc
