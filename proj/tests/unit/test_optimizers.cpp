#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "excitation/errors.hpp"
#include "excitation/excitation.hpp"
#include "excitation/optimizers.hpp"
#include "oracles.hpp"
#include "printers.hpp"

namespace {

using namespace exc;

TensorSet single(double v) { return {Matrix(1, 1, v)}; }

TEST(ProposeDelta, SgdHandValue) {
    OptimizerState s;
    OptimizerConfig c{.kind = OptimizerKind::sgd, .lr = 0.1};
    const auto d = propose_delta(s, c, single(2.0), single(0.0));
    EXPECT_DOUBLE_EQ(d[0](0, 0), -0.2);
    EXPECT_EQ(s.step, 1u);
}

TEST(ProposeDelta, AdamFirstStepIsLrOverOnePlusEps) {
    OptimizerState s;
    OptimizerConfig c{.kind = OptimizerKind::adam, .lr = 0.001};
    const auto d = propose_delta(s, c, TensorSet{Matrix(2, 3, 1.0)}, TensorSet{Matrix(2, 3, 0.5)});
    for (double v : d[0].values()) EXPECT_NEAR(v, -0.000999999990, 1e-15);
}

TEST(ProposeDelta, AdagradFirstStep) {
    OptimizerState s;
    OptimizerConfig c{.kind = OptimizerKind::adagrad, .lr = 0.01};
    const auto d = propose_delta(s, c, single(3.0), single(0.0));
    EXPECT_NEAR(d[0](0, 0), -0.01 * 3.0 / (3.0 + 1e-8), 1e-18);
}

TEST(ProposeDelta, AdamwAddsDecoupledDecay) {
    OptimizerState sa, sw;
    OptimizerConfig a{.kind = OptimizerKind::adam, .lr = 0.001};
    OptimizerConfig w = a;
    w.kind = OptimizerKind::adamw;
    const auto da = propose_delta(sa, a, single(1.0), single(2.0));
    const auto dw = propose_delta(sw, w, single(1.0), single(2.0));
    EXPECT_NEAR(dw[0](0, 0) - da[0](0, 0), -0.001 * 0.01 * 2.0, 1e-18);
}

TEST(ProposeDelta, SgdIsLinearInLearningRate) {
    std::mt19937_64 rng(4);
    const TensorSet g{Matrix(3, 3, oracle::random_vec(rng, 9))};
    const TensorSet p{Matrix(3, 3)};
    OptimizerConfig c{.kind = OptimizerKind::sgd};
    OptimizerState s1, s2;
    const auto d1 = propose_delta(s1, c, g, p, 0.01);
    const auto d2 = propose_delta(s2, c, g, p, 0.03);
    for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(d2[0].values()[i], 3.0 * d1[0].values()[i], 1e-15);
}

TEST(ProposeDelta, NonFiniteGradientIsReported) {
    for (double bad : {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::infinity()}) {
        OptimizerState s;
        OptimizerConfig c{.kind = OptimizerKind::adam, .lr = 0.001};
        EXPECT_THROW(propose_delta(s, c, single(bad), single(0.0)), NumericError);
    }
}

TEST(ProposeDelta, ShapeMismatchThrows) {
    OptimizerState s;
    OptimizerConfig c;
    EXPECT_THROW(propose_delta(s, c, TensorSet{Matrix(2, 2)}, TensorSet{Matrix(2, 3)}), ShapeError);
}

TEST(OptimizerConfig, Validation) {
    OptimizerConfig c;
    c.lr = -1;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.beta2 = 1.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.eps = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    EXPECT_THROW(parse_optimizer_kind("lion"), ConfigError);
}

class OracleEquivalence : public ::testing::TestWithParam<OptimizerKind> {};

TEST_P(OracleEquivalence, TenStepsOnRandomTensors) {
    const auto kind = GetParam();
    std::mt19937_64 rng(static_cast<std::uint64_t>(kind) + 100);
    const double lr = (kind == OptimizerKind::sgd || kind == OptimizerKind::sgd_momentum ||
                       kind == OptimizerKind::adagrad) ? 0.01 : 1e-3;
    OptimizerConfig c{.kind = kind, .lr = lr};
    OptimizerState state;
    TensorSet params{Matrix(3, 3, oracle::random_vec(rng, 9)), Matrix(1, 3, oracle::random_vec(rng, 3))};

    std::vector<oracle::StraightLineOptimizer> ref(2, oracle::StraightLineOptimizer(std::string(to_string(kind)), lr));
    std::vector<oracle::Vec> theta;
    for (const auto& t : params) theta.emplace_back(t.values().begin(), t.values().end());

    for (int step = 0; step < 10; ++step) {
        TensorSet grads{Matrix(3, 3, oracle::random_vec(rng, 9, 2.0)), Matrix(1, 3, oracle::random_vec(rng, 3, 2.0))};
        apply_delta(params, propose_delta(state, c, grads, params));
        for (std::size_t t = 0; t < 2; ++t)
            ref[t].step(theta[t], {grads[t].values().begin(), grads[t].values().end()});
    }
    double worst = 0;
    for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t i = 0; i < theta[t].size(); ++i)
            worst = std::max(worst, std::abs(params[t].values()[i] - theta[t][i]));
    EXPECT_LT(worst, 1e-12);
    EXPECT_EQ(state.step, 10u);
}

INSTANTIATE_TEST_SUITE_P(AllKinds, OracleEquivalence,
                         ::testing::Values(OptimizerKind::sgd, OptimizerKind::sgd_momentum, OptimizerKind::adam,
                                           OptimizerKind::adamw, OptimizerKind::rmsprop, OptimizerKind::adagrad),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(OptimizerState, UnaffectedByModulation) {
    // Same gradient stream, different applied multipliers: buffers must match.
    std::mt19937_64 rng(12);
    const ModelConfig cfg{4, 6, 1, 2, 0.5, false};
    const auto parts = expert_partitions(cfg);
    for (auto kind : {OptimizerKind::sgd_momentum, OptimizerKind::adam, OptimizerKind::rmsprop, OptimizerKind::adagrad}) {
        OptimizerConfig c{.kind = kind, .lr = 1e-3};
        auto pa = init_params(cfg, 1).tensors, pb = pa;
        OptimizerState sa, sb;
        for (int step = 0; step < 5; ++step) {
            TensorSet g = zeros_like(pa);
            for (auto& t : g) for (double& v : t.values()) v = std::normal_distribution<double>()(rng);
            Coefficients phi{oracle::random_vec(rng, 6)};
            for (double& v : phi[0]) v = std::abs(v) * 2;
            excite_step(pa, propose_delta(sa, c, g, pa), phi, parts);
            apply_delta(pb, propose_delta(sb, c, g, pb));
        }
        EXPECT_EQ(sa.m, sb.m);
        EXPECT_EQ(sa.v, sb.v);
        EXPECT_EQ(sa.step, sb.step);
        EXPECT_NE(pa, pb);
    }
}

TEST(Schedule, CosineAnchors) {
    const ScheduleConfig s{ScheduleKind::cosine, 100, 0.2};
    EXPECT_DOUBLE_EQ(lr_at(s, 0), 0.2);
    EXPECT_NEAR(lr_at(s, 50), 0.1, 1e-15);
    EXPECT_NEAR(lr_at(s, 100), 0.0, 1e-15);
    EXPECT_EQ(lr_at(s, 250), lr_at(s, 100));
    EXPECT_NEAR(lr_at(s, 25), 0.2 * 0.5 * (1 + std::cos(std::numbers::pi / 4)), 1e-15);
}

TEST(Schedule, ConstantIgnoresStep) {
    const ScheduleConfig s{ScheduleKind::constant, 10, 0.05};
    EXPECT_EQ(lr_at(s, 0), 0.05);
    EXPECT_EQ(lr_at(s, 7), 0.05);
    EXPECT_EQ(lr_at(s, 70), 0.05);
    EXPECT_EQ(parse_schedule_kind("none"), ScheduleKind::constant);
}

}  // namespace
