#pragma once

// "Micro-MoE" multilayer perceptron: every hidden neuron is an expert, and
// per sample only the K largest pre-activations of each hidden layer
// survive. Expert k of a layer owns column k of that layer's incoming
// weight matrix plus bias entry k.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "excitation/linalg.hpp"

namespace exc {

/// An ordered list of parameter-shaped tensors (params, gradients, deltas).
using TensorSet = std::vector<Matrix>;

struct ModelConfig {
    std::size_t input_dim = 3072;
    std::size_t width = 128;
    std::size_t depth = 4;
    std::size_t classes = 10;
    double sparsity = 0.9;
    bool use_residual = false;

    /// K = max(1, round(W * (1 - s))).
    std::size_t active_count() const;
    /// Throws ConfigError on an invalid combination.
    void validate() const;
};

/// Hidden layer l lives at tensors[2l] (in x W) and tensors[2l+1] (1 x W);
/// the classifier at tensors[2L] (W x C) and tensors[2L+1] (1 x C).
struct ModelParams {
    TensorSet tensors;

    std::size_t depth() const noexcept { return tensors.size() / 2 - 1; }
    Matrix& hidden_weight(std::size_t l) { return tensors[2 * l]; }
    Matrix& hidden_bias(std::size_t l) { return tensors[2 * l + 1]; }
    const Matrix& hidden_weight(std::size_t l) const { return tensors[2 * l]; }
    const Matrix& hidden_bias(std::size_t l) const { return tensors[2 * l + 1]; }
    Matrix& output_weight() { return tensors[tensors.size() - 2]; }
    Matrix& output_bias() { return tensors.back(); }
    const Matrix& output_weight() const { return tensors[tensors.size() - 2]; }
    const Matrix& output_bias() const { return tensors.back(); }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Which slice of which tensors belongs to each expert of one layer.
/// Expert k owns column k of `weight_tensor` and entry k of `bias_tensor`.
struct ExpertPartition {
    std::size_t layer = 0;
    std::size_t weight_tensor = 0;
    std::optional<std::size_t> bias_tensor;
    std::size_t experts = 0;
};

struct ActivationRecord {
    std::vector<Matrix> masks;           // per layer, batch x W, 1.0 where the neuron survived
    std::vector<Matrix> pre_activations; // per layer, batch x W

    std::size_t layers() const noexcept { return masks.size(); }
    std::size_t batch() const noexcept { return masks.empty() ? 0 : masks.front().rows(); }
};

struct ForwardOutput {
    Matrix logits;
    ActivationRecord activation;
    std::vector<Matrix> layer_inputs;  // input of hidden layer l; back() feeds the classifier
};

ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

/// Zero tensors with the same shapes as `like`.
TensorSet zeros_like(const TensorSet& like);

/// Partition of every hidden layer; the classifier is not partitioned.
std::vector<ExpertPartition> expert_partitions(const ModelConfig& config);

/// Marks the `k` largest entries of `z`, ties to the lowest index.
void top_k_mask(std::span<const double> z, std::size_t k, std::span<double> mask);

ForwardOutput forward(const ModelParams& params, const Matrix& x, const ModelConfig& config);

/// Gradients of the loss w.r.t. every tensor in `params`, given dL/dlogits.
/// Masked neurons pass no gradient.
TensorSet backward(const ModelParams& params, const ModelConfig& config,
                   const ForwardOutput& fwd, const Matrix& grad_logits);

}  // namespace exc
