#include "excitation/toy2d.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "excitation/errors.hpp"
#include "excitation/harness.hpp"

namespace exc {

double Toy2dProblem::loss(double w0, double w1) const noexcept {
    const double e0 = w0 - target[0];
    const double e1 = w1 - target[1];
    return curvature[0] * e0 * e0 + curvature[1] * e1 * e1;
}

namespace {

Trajectory descend(const Toy2dProblem& problem, const OptimizerConfig& opt, const Coefficients* phi,
                   std::size_t steps, std::string name) {
    // Both coordinates live in one 1x2 tensor; column i is expert i.
    TensorSet params{Matrix(1, 2, std::vector<double>{problem.start[0], problem.start[1]})};
    const std::vector<ExpertPartition> partition{{0, 0, std::nullopt, 2}};
    OptimizerState state;
    Trajectory traj{std::move(name), {}, std::nullopt};
    auto record = [&](std::size_t step) {
        const double w0 = params[0](0, 0), w1 = params[0](0, 1);
        const double l = problem.loss(w0, w1);
        traj.points.push_back({step, w0, w1, l});
        if (!traj.steps_to_tolerance && l < problem.tolerance) traj.steps_to_tolerance = step;
    };
    record(0);
    for (std::size_t s = 1; s <= steps; ++s) {
        TensorSet grads{Matrix(1, 2)};
        for (std::size_t i = 0; i < 2; ++i)
            grads[0](0, i) = 2.0 * problem.curvature[i] * (params[0](0, i) - problem.target[i]);
        const auto delta = propose_delta(state, opt, grads, params);
        if (phi) excite_step(params, delta, *phi, partition);
        else apply_delta(params, delta);
        record(s);
    }
    return traj;
}

}  // namespace

Toy2dResult toy2d_demo(ExcitationVariant variant, std::size_t steps, const Toy2dProblem& problem) {
    Toy2dResult result;
    result.problem = problem;

    Excitation excitation({variant, problem.gamma, 1e-6}, 0);
    const Coefficients phi = excitation.coefficients({{problem.utilization[0], problem.utilization[1]}});
    result.multipliers = {phi[0][0], phi[0][1]};

    OptimizerConfig sgd;
    sgd.kind = OptimizerKind::sgd;
    sgd.lr = problem.lr;
    OptimizerConfig momentum = sgd;
    momentum.kind = OptimizerKind::sgd_momentum;
    momentum.momentum = problem.momentum;

    result.trajectories.push_back(descend(problem, sgd, nullptr, steps, "sgd"));
    result.trajectories.push_back(descend(problem, momentum, nullptr, steps, "sgd_momentum"));
    result.trajectories.push_back(
        descend(problem, sgd, &phi, steps, "excited_sgd_" + std::string(to_string(variant))));
    return result;
}

void write_toy2d(const Toy2dResult& result, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream csv(dir / "toy2d_trajectory.csv", std::ios::trunc);
    if (!csv) throw IoError("cannot write " + (dir / "toy2d_trajectory.csv").string());
    csv << "trajectory,step,w0,w1,loss\n";
    for (const auto& t : result.trajectories)
        for (const auto& p : t.points)
            csv << t.name << ',' << p.step << ',' << format_number(p.w0) << ',' << format_number(p.w1) << ','
                << format_number(p.loss) << '\n';

    nlohmann::json summary;
    summary["multipliers"] = result.multipliers;
    summary["utilization"] = result.problem.utilization;
    summary["curvature"] = result.problem.curvature;
    summary["lr"] = result.problem.lr;
    summary["tolerance"] = result.problem.tolerance;
    for (const auto& t : result.trajectories)
        summary["steps_to_tolerance"][t.name] =
            t.steps_to_tolerance ? nlohmann::json(*t.steps_to_tolerance) : nlohmann::json(nullptr);
    std::ofstream js(dir / "toy2d_summary.json", std::ios::trunc);
    js << summary.dump(2) << '\n';
}

}  // namespace exc
