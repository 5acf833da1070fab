#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "excitation/errors.hpp"
#include "excitation/excitation.hpp"
#include "oracles.hpp"

namespace {

using namespace exc;
using V = std::vector<double>;

double mean(const V& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

V random_utilization(std::mt19937_64& rng, std::size_t n) {
    // Multiples of 1/|B| like a real batch.
    std::uniform_int_distribution<int> count(0, 64);
    V u(n);
    for (double& x : u) x = count(rng) / 64.0;
    u[0] = std::max(u[0], 1.0 / 64.0);
    return u;
}

TEST(Utilization, CountsActiveRows) {
    ActivationRecord rec;
    rec.masks.push_back(Matrix{{1, 0, 1}, {1, 0, 0}, {1, 1, 0}, {0, 0, 1}});
    const auto u = compute_utilization(rec);
    ASSERT_EQ(u.size(), 1u);
    EXPECT_EQ(u[0], (V{0.75, 0.25, 0.5}));
}

TEST(Utilization, AllActiveIsOne) {
    ActivationRecord rec;
    rec.masks.push_back(Matrix(5, 4, 1.0));
    const auto u = compute_utilization(rec);
    for (double v : u[0]) EXPECT_EQ(v, 1.0);
}

TEST(Utilization, EmptyBatchThrows) {
    ActivationRecord rec;
    rec.masks.push_back(Matrix(0, 4));
    EXPECT_THROW(compute_utilization(rec), InputError);
}

TEST(ZeroSum, ThreeQuarterQuarterSplit) {
    EXPECT_EQ(phi_zerosum(V{0.75, 0.25}, 1.0), (V{1.5, 0.5}));
}

TEST(ZeroSum, UniformIsOne) {
    for (double v : phi_zerosum(V(7, 0.3), 2.0)) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(ZeroSum, SquaredPower) {
    EXPECT_EQ(phi_zerosum(V{1, 0}, 2.0), (V{2, 0}));
}

TEST(ZeroSum, DegenerateFallsBackToOne) {
    std::uint64_t count = 0;
    EXPECT_EQ(phi_zerosum(V{0, 0, 0}, 1.0, &count), (V{1, 1, 1}));
    EXPECT_EQ(count, 1u);
    EXPECT_EQ(phi_positivesum(V{0, 0}, 1.0, &count), (V{1, 1}));
    EXPECT_EQ(count, 2u);
}

TEST(PositiveSum, Examples) {
    EXPECT_EQ(phi_positivesum(V{0.75, 0.25}, 1.0), (V{1.5, 1.0}));
    EXPECT_EQ(phi_positivesum(V{1, 0}, 1.0), (V{2, 1}));
    for (double v : phi_positivesum(V(4, 0.5), 1.0)) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(ExpDiff, Examples) {
    const auto phi = phi_expdiff(V{0.75, 0.25}, 1.0);
    const double norm = (std::exp(0.75) + std::exp(0.25)) / 2;
    EXPECT_NEAR(phi[0], std::exp(0.75) / norm, 1e-15);
    EXPECT_NEAR(phi[1], std::exp(0.25) / norm, 1e-15);
    EXPECT_NEAR(phi[0], 1.244918, 1e-6);
    EXPECT_NEAR(phi[1], 0.755082, 1e-6);
    for (double v : phi_expdiff(V{0.9, 0.1, 0.4}, 0.0)) EXPECT_DOUBLE_EQ(v, 1.0);
    for (double v : phi_expdiff(V(3, 0.2), 3.0)) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(GlobalExp, Examples) {
    EXPECT_NEAR(phi_global_exp(V{0.75, 0.25}, 1.0), (std::exp(0.25) + 1.0) / 2.0, 1e-15);
    EXPECT_NEAR(phi_global_exp(V{0.75, 0.25}, 1.0), 1.142013, 1e-6);
    EXPECT_EQ(phi_global_exp(V(5, 0.4), 2.0), 1.0);
    EXPECT_EQ(phi_global_exp(V{0.9, 0.1}, 0.0), 1.0);
}

TEST(Inverted, Examples) {
    const auto phi = phi_inverted(V{0.75, 0.25}, 1.0, 1e-6);
    EXPECT_NEAR(phi[0], 0.5, 1e-15);
    EXPECT_NEAR(phi[1], 1.5, 1e-15);
    const auto floored = phi_inverted(V{1, 0}, 1.0, 1e-6);
    EXPECT_NEAR(floored[0], 2e-6, 1e-11);
    EXPECT_NEAR(floored[1], 2.0, 1e-5);
    for (double v : phi_inverted(V(3, 0.5), 1.0, 1e-6)) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(Properties, MeanOneAndMonotone) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const auto u = random_utilization(rng, 1 + trial % 40);
        const double gamma = 0.5 + (trial % 3);
        const auto zs = phi_zerosum(u, gamma), ed = phi_expdiff(u, gamma), ps = phi_positivesum(u, gamma);
        const auto inv = phi_inverted(u, gamma, 1e-6);
        EXPECT_NEAR(mean(zs), 1.0, 1e-12);
        EXPECT_NEAR(mean(ed), 1.0, 1e-12);
        for (double v : ps) EXPECT_GE(v, 1.0);
        for (double v : inv) EXPECT_GT(v, 0.0);
        for (std::size_t i = 0; i < u.size(); ++i)
            for (std::size_t j = 0; j < u.size(); ++j)
                if (u[i] >= u[j]) {
                    EXPECT_GE(zs[i], zs[j]);
                    EXPECT_GE(ed[i], ed[j]);
                    EXPECT_GE(ps[i], ps[j]);
                    EXPECT_LE(inv[i], inv[j]);
                }
    }
}

TEST(RandomBoost, PreservesZeroSumMultisetAndIsSeeded) {
    std::mt19937_64 rng(5);
    const auto u = random_utilization(rng, 32);
    auto zs = phi_zerosum(u, 1.0);
    std::mt19937_64 a(77), b(77);
    for (int step = 0; step < 5; ++step) {
        auto ra = phi_random_boost(u, 1.0, a);
        const auto rb = phi_random_boost(u, 1.0, b);
        EXPECT_EQ(ra, rb);
        std::sort(ra.begin(), ra.end());
        auto sorted = zs;
        std::sort(sorted.begin(), sorted.end());
        EXPECT_EQ(ra, sorted);
    }
    for (double v : phi_random_boost(V(6, 0.5), 1.0, a)) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(RandomBoost, PermutationChangesBetweenSteps) {
    V u(16);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = (i + 1) / 16.0;
    Excitation ex({ExcitationVariant::random_boost, 1.0, 1e-6}, 3);
    const auto first = ex.coefficients({u});
    bool changed = false;
    for (int i = 0; i < 5 && !changed; ++i) changed = ex.coefficients({u}) != first;
    EXPECT_TRUE(changed);
}

TEST(ExcitationFrontEnd, NoneIsExactlyOneAndGlobalIsBroadcast) {
    const Utilization u{{0.75, 0.25}, {1.0, 0.0, 0.5}};
    Excitation none({ExcitationVariant::none, 1.0, 1e-6});
    for (const auto& layer : none.coefficients(u))
        for (double v : layer) EXPECT_EQ(v, 1.0);
    Excitation global({ExcitationVariant::global_exp, 1.0, 1e-6});
    const auto g = global.coefficients(u);
    EXPECT_EQ(g[0], V(2, phi_global_exp(u[0], 1.0)));
    EXPECT_EQ(g[1], V(3, phi_global_exp(u[1], 1.0)));
}

TEST(ExcitationFrontEnd, DegenerateCounter) {
    Excitation ex({ExcitationVariant::zerosum, 1.0, 1e-6});
    ex.coefficients({{0, 0}, {0.5, 0.5}});
    EXPECT_EQ(ex.degenerate_count(), 1u);
}

TEST(ExcitationConfig, Validation) {
    EXPECT_THROW((ExcitationConfig{ExcitationVariant::zerosum, 0.0, 1e-6}.validate()), ConfigError);
    EXPECT_THROW((ExcitationConfig{ExcitationVariant::inverted, 1.0, 0.0}.validate()), ConfigError);
    EXPECT_EQ(parse_excitation_variant("vanilla"), ExcitationVariant::none);
    EXPECT_THROW(parse_excitation_variant("zero-sum"), ConfigError);
}

class ExciteStepTest : public ::testing::Test {
protected:
    ModelConfig cfg{3, 4, 2, 2, 0.5, false};
    std::vector<ExpertPartition> parts = expert_partitions(cfg);
    TensorSet params, delta;

    void SetUp() override {
        std::mt19937_64 rng(8);
        params = init_params(cfg, 1).tensors;
        delta = zeros_like(params);
        for (auto& t : delta) for (double& v : t.values()) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    }
};

TEST_F(ExciteStepTest, OnesEqualsPlainApply) {
    auto a = params, b = params;
    excite_step(a, delta, {V(4, 1.0), V(4, 1.0)}, parts);
    apply_delta(b, delta);
    EXPECT_EQ(a, b);
}

TEST_F(ExciteStepTest, ScalesExpertSlicesOnly) {
    const Coefficients phi{{0.0, 2.0, 0.5, 1.0}, {3.0, 0.25, 1.0, 0.0}};
    auto p = params;
    excite_step(p, delta, phi, parts);
    for (std::size_t l = 0; l < 2; ++l) {
        const auto& w0 = params[2 * l];
        for (std::size_t r = 0; r < w0.rows(); ++r)
            for (std::size_t k = 0; k < 4; ++k)
                EXPECT_EQ(p[2 * l](r, k), w0(r, k) + phi[l][k] * delta[2 * l](r, k));
        for (std::size_t k = 0; k < 4; ++k)
            EXPECT_EQ(p[2 * l + 1](0, k), params[2 * l + 1](0, k) + phi[l][k] * delta[2 * l + 1](0, k));
    }
    // Expert 0 of layer 0 untouched.
    for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(p[0](r, 0), params[0](r, 0));
    // Classifier always gets the raw delta.
    for (std::size_t i = 4; i < 6; ++i)
        for (std::size_t j = 0; j < p[i].size(); ++j)
            EXPECT_EQ(p[i].values()[j], params[i].values()[j] + delta[i].values()[j]);
}

TEST_F(ExciteStepTest, MismatchIsALogicError) {
    auto p = params;
    EXPECT_THROW(excite_step(p, delta, {V(4, 1.0)}, parts), std::logic_error);
    EXPECT_THROW(excite_step(p, delta, {V(4, 1.0), V(3, 1.0)}, parts), std::logic_error);
}

TEST(ExcitedAdam, ComposesScaledAdamDelta) {
    // Hand-written Adam step on one expert, scaled by Phi, against the library path.
    const ModelConfig cfg{2, 2, 1, 2, 0.5, false};
    const auto parts = expert_partitions(cfg);
    auto params = init_params(cfg, 3).tensors;
    const auto start = params;
    TensorSet g = zeros_like(params);
    std::mt19937_64 rng(1);
    for (auto& t : g) for (double& v : t.values()) v = std::uniform_real_distribution<double>(-1, 1)(rng);

    OptimizerConfig c{.kind = OptimizerKind::adam, .lr = 1e-3};
    OptimizerState s;
    const Coefficients phi = {phi_zerosum(V{0.75, 0.25}, 1.0)};
    excite_step(params, propose_delta(s, c, g, params), phi, parts);

    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t k = 0; k < 2; ++k) {
            const double gi = g[0](r, k);
            const double m_hat = (0.1 * gi) / (1 - 0.9), v_hat = (0.001 * gi * gi) / (1 - 0.999);
            const double expected = start[0](r, k) - phi[0][k] * 1e-3 * m_hat / (std::sqrt(v_hat) + 1e-8);
            EXPECT_NEAR(params[0](r, k), expected, 1e-14);
        }
}

}  // namespace
