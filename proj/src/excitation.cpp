#include "excitation/excitation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "excitation/errors.hpp"

namespace exc {

std::string_view to_string(ExcitationVariant v) noexcept {
    switch (v) {
        case ExcitationVariant::none: return "none";
        case ExcitationVariant::zerosum: return "zerosum";
        case ExcitationVariant::positivesum: return "positivesum";
        case ExcitationVariant::expdiff: return "expdiff";
        case ExcitationVariant::global_exp: return "global_exp";
        case ExcitationVariant::random_boost: return "random_boost";
        case ExcitationVariant::inverted: return "inverted";
    }
    return "unknown";
}

ExcitationVariant parse_excitation_variant(std::string_view name) {
    for (auto v : {ExcitationVariant::none, ExcitationVariant::zerosum, ExcitationVariant::positivesum,
                   ExcitationVariant::expdiff, ExcitationVariant::global_exp,
                   ExcitationVariant::random_boost, ExcitationVariant::inverted})
        if (to_string(v) == name) return v;
    if (name == "vanilla") return ExcitationVariant::none;
    throw ConfigError("unknown excitation variant '" + std::string(name) + "'");
}

void ExcitationConfig::validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be positive");
    if (!(utilization_floor > 0.0 && utilization_floor <= 1.0))
        throw ConfigError("utilization_floor must lie in (0, 1]");
}

Utilization compute_utilization(const ActivationRecord& record) {
    Utilization util;
    util.reserve(record.layers());
    for (const Matrix& mask : record.masks) {
        if (mask.rows() == 0) throw InputError("compute_utilization: empty batch");
        std::vector<std::uint64_t> counts(mask.cols(), 0);
        for (std::size_t r = 0; r < mask.rows(); ++r) {
            auto row = mask.row(r);
            for (std::size_t k = 0; k < row.size(); ++k) counts[k] += row[k] != 0.0 ? 1 : 0;
        }
        std::vector<double> u(mask.cols());
        const double batch = static_cast<double>(mask.rows());
        for (std::size_t k = 0; k < u.size(); ++k) u[k] = static_cast<double>(counts[k]) / batch;
        util.push_back(std::move(u));
    }
    return util;
}

namespace {

double mean(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::vector<double> phi_zerosum(std::span<const double> u, double gamma, std::uint64_t* degenerate) {
    std::vector<double> phi(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) phi[k] = std::pow(u[k], gamma);
    const double norm = u.empty() ? 0.0 : mean(phi);
    if (!(norm > 0.0)) {
        if (degenerate) ++*degenerate;
        std::fill(phi.begin(), phi.end(), 1.0);
        return phi;
    }
    for (double& p : phi) p /= norm;
    return phi;
}

std::vector<double> phi_positivesum(std::span<const double> u, double gamma, std::uint64_t* degenerate) {
    auto phi = phi_zerosum(u, gamma, degenerate);
    for (double& p : phi) p = std::max(1.0, p);
    return phi;
}

std::vector<double> phi_expdiff(std::span<const double> u, double gamma) {
    std::vector<double> phi(u.size());
    if (u.empty()) return phi;
    // exp(g*u)/mean(exp(g*u)) is shift invariant; shifting by the max keeps it finite.
    const double top = gamma * *std::max_element(u.begin(), u.end());
    for (std::size_t k = 0; k < u.size(); ++k) phi[k] = std::exp(gamma * u[k] - top);
    const double norm = mean(phi);
    for (double& p : phi) p /= norm;
    return phi;
}

double phi_global_exp(std::span<const double> u, double gamma) {
    if (u.empty()) return 1.0;
    const double mu = mean(u);
    double total = 0.0;
    for (double v : u) total += std::exp(gamma * std::max(0.0, v - mu));
    return total / static_cast<double>(u.size());
}

std::vector<double> phi_random_boost(std::span<const double> u, double gamma, std::mt19937_64& rng,
                                     std::uint64_t* degenerate) {
    auto phi = phi_zerosum(u, gamma, degenerate);
    std::shuffle(phi.begin(), phi.end(), rng);
    return phi;
}

std::vector<double> phi_inverted(std::span<const double> u, double gamma, double floor) {
    std::vector<double> phi(u.size());
    if (u.empty()) return phi;
    for (std::size_t k = 0; k < u.size(); ++k) phi[k] = std::pow(std::max(u[k], floor), -gamma);
    const double norm = mean(phi);
    for (double& p : phi) p /= norm;
    return phi;
}

Excitation::Excitation(ExcitationConfig config, std::uint64_t seed) : config_(config), rng_(seed) {
    config_.validate();
}

Coefficients Excitation::coefficients(const Utilization& utilization) {
    Coefficients out;
    out.reserve(utilization.size());
    const double g = config_.gamma;
    for (const auto& u : utilization) {
        switch (config_.variant) {
            case ExcitationVariant::none: out.emplace_back(u.size(), 1.0); break;
            case ExcitationVariant::zerosum: out.push_back(phi_zerosum(u, g, &degenerate_)); break;
            case ExcitationVariant::positivesum: out.push_back(phi_positivesum(u, g, &degenerate_)); break;
            case ExcitationVariant::expdiff: out.push_back(phi_expdiff(u, g)); break;
            case ExcitationVariant::global_exp: out.emplace_back(u.size(), phi_global_exp(u, g)); break;
            case ExcitationVariant::random_boost:
                out.push_back(phi_random_boost(u, g, rng_, &degenerate_));
                break;
            case ExcitationVariant::inverted:
                out.push_back(phi_inverted(u, g, config_.utilization_floor));
                break;
        }
    }
    return out;
}

void excite_step(TensorSet& params, const UpdateDelta& delta, const Coefficients& coefficients,
                 std::span<const ExpertPartition> partition) {
    if (params.size() != delta.size()) throw std::logic_error("excite_step: params/delta count mismatch");
    std::vector<bool> covered(params.size(), false);
    for (const auto& part : partition) {
        if (part.layer >= coefficients.size() || coefficients[part.layer].size() != part.experts)
            throw std::logic_error("excite_step: coefficients do not cover layer " +
                                   std::to_string(part.layer));
        const auto& phi = coefficients[part.layer];
        auto scale_columns = [&](std::size_t idx) {
            if (idx >= params.size()) throw std::logic_error("excite_step: partition tensor out of range");
            Matrix& p = params[idx];
            const Matrix& d = delta[idx];
            if (p.cols() != part.experts || d.rows() != p.rows() || d.cols() != p.cols())
                throw std::logic_error("excite_step: tensor " + std::to_string(idx) +
                                       " does not match the partition");
            for (std::size_t r = 0; r < p.rows(); ++r) {
                auto pr = p.row(r);
                auto dr = d.row(r);
                for (std::size_t k = 0; k < pr.size(); ++k) pr[k] += phi[k] * dr[k];
            }
            covered[idx] = true;
        };
        scale_columns(part.weight_tensor);
        if (part.bias_tensor) scale_columns(*part.bias_tensor);
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (covered[i]) continue;
        auto p = params[i].values();
        auto d = delta[i].values();
        if (p.size() != d.size()) throw std::logic_error("excite_step: tensor size mismatch");
        for (std::size_t j = 0; j < p.size(); ++j) p[j] += d[j];
    }
}

}  // namespace exc
