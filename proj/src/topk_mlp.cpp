#include "excitation/topk_mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "excitation/errors.hpp"

namespace exc {

std::size_t ModelConfig::active_count() const {
    const double k = std::round(static_cast<double>(width) * (1.0 - sparsity));
    return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(k, 1.0)), 1, width);
}

void ModelConfig::validate() const {
    if (input_dim == 0) throw ConfigError("input_dim must be positive");
    if (width == 0) throw ConfigError("width must be positive");
    if (depth == 0) throw ConfigError("depth must be at least 1");
    if (classes < 2) throw ConfigError("classes must be at least 2");
    if (!(sparsity >= 0.0 && sparsity < 1.0)) throw ConfigError("sparsity must lie in [0, 1)");
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    std::mt19937_64 rng(seed);
    ModelParams params;
    auto glorot = [&](std::size_t fan_in, std::size_t fan_out) {
        const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-a, a);
        Matrix w(fan_in, fan_out);
        for (double& v : w.values()) v = dist(rng);
        return w;
    };
    std::size_t in = config.input_dim;
    for (std::size_t l = 0; l < config.depth; ++l) {
        params.tensors.push_back(glorot(in, config.width));
        params.tensors.emplace_back(1, config.width);
        in = config.width;
    }
    params.tensors.push_back(glorot(config.width, config.classes));
    params.tensors.emplace_back(1, config.classes);
    return params;
}

TensorSet zeros_like(const TensorSet& like) {
    TensorSet out;
    out.reserve(like.size());
    for (const auto& t : like) out.emplace_back(t.rows(), t.cols());
    return out;
}

std::vector<ExpertPartition> expert_partitions(const ModelConfig& config) {
    std::vector<ExpertPartition> parts;
    for (std::size_t l = 0; l < config.depth; ++l)
        parts.push_back({l, 2 * l, 2 * l + 1, config.width});
    return parts;
}

void top_k_mask(std::span<const double> z, std::size_t k, std::span<double> mask) {
    std::fill(mask.begin(), mask.end(), 0.0);
    k = std::min(k, z.size());
    if (k == z.size()) {
        std::fill(mask.begin(), mask.end(), 1.0);
        return;
    }
    thread_local std::vector<std::size_t> order;
    order.resize(z.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                     [&](std::size_t a, std::size_t b) {
                         return z[a] > z[b] || (z[a] == z[b] && a < b);
                     });
    for (std::size_t i = 0; i < k; ++i) mask[order[i]] = 1.0;
}

ForwardOutput forward(const ModelParams& params, const Matrix& x, const ModelConfig& config) {
    if (x.cols() != config.input_dim)
        throw ShapeError("forward: input has " + std::to_string(x.cols()) + " features, expected " +
                         std::to_string(config.input_dim));
    if (params.depth() != config.depth) throw ShapeError("forward: params/config depth mismatch");
    const std::size_t k = config.active_count();
    ForwardOutput out;
    out.layer_inputs.reserve(config.depth + 1);
    out.layer_inputs.push_back(x);
    for (std::size_t l = 0; l < config.depth; ++l) {
        const Matrix& in = out.layer_inputs.back();
        Matrix z = matmul(in, params.hidden_weight(l));
        add_row_vector(z, params.hidden_bias(l));
        Matrix mask(z.rows(), z.cols());
        Matrix h(z.rows(), z.cols());
        const bool residual = config.use_residual && in.cols() == z.cols();
        for (std::size_t r = 0; r < z.rows(); ++r) {
            auto zr = z.row(r);
            auto mr = mask.row(r);
            top_k_mask(zr, k, mr);
            auto hr = h.row(r);
            for (std::size_t c = 0; c < zr.size(); ++c)
                hr[c] = (mr[c] != 0.0 && zr[c] > 0.0) ? zr[c] : 0.0;
            if (residual) {
                auto ir = in.row(r);
                for (std::size_t c = 0; c < hr.size(); ++c) hr[c] += ir[c];
            }
        }
        out.activation.masks.push_back(std::move(mask));
        out.activation.pre_activations.push_back(std::move(z));
        out.layer_inputs.push_back(std::move(h));
    }
    out.logits = matmul(out.layer_inputs.back(), params.output_weight());
    add_row_vector(out.logits, params.output_bias());
    return out;
}

TensorSet backward(const ModelParams& params, const ModelConfig& config,
                   const ForwardOutput& fwd, const Matrix& grad_logits) {
    if (grad_logits.rows() != fwd.logits.rows() || grad_logits.cols() != fwd.logits.cols())
        throw ShapeError("backward: grad_logits shape differs from logits");
    TensorSet grads(params.tensors.size());
    const std::size_t depth = config.depth;
    grads[2 * depth] = matmul_tn(fwd.layer_inputs.back(), grad_logits);
    grads[2 * depth + 1] = column_sums(grad_logits);
    Matrix upstream = matmul_nt(grad_logits, params.output_weight());
    for (std::size_t l = depth; l-- > 0;) {
        const Matrix& z = fwd.activation.pre_activations[l];
        const Matrix& mask = fwd.activation.masks[l];
        const Matrix& in = fwd.layer_inputs[l];
        Matrix dz(z.rows(), z.cols());
        {
            auto zv = z.values();
            auto mv = mask.values();
            auto uv = upstream.values();
            auto dv = dz.values();
            for (std::size_t i = 0; i < dv.size(); ++i)
                dv[i] = (mv[i] != 0.0 && zv[i] > 0.0) ? uv[i] : 0.0;
        }
        grads[2 * l] = matmul_tn(in, dz);
        grads[2 * l + 1] = column_sums(dz);
        if (l == 0) break;
        Matrix next = matmul_nt(dz, params.hidden_weight(l));
        if (config.use_residual && in.cols() == z.cols()) {
            auto nv = next.values();
            auto uv = upstream.values();
            for (std::size_t i = 0; i < nv.size(); ++i) nv[i] += uv[i];
        }
        upstream = std::move(next);
    }
    return grads;
}

}  // namespace exc
