#pragma once

// Two-parameter illustration of the modulation mechanics: a separable
// quadratic bowl where parameter i is owned by "expert i" and utilization
// is fixed rather than measured.

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "excitation/excitation.hpp"

namespace exc {

struct Toy2dProblem {
    std::array<double, 2> curvature{1.0, 0.5};  // L(w) = sum a_i (w_i - w*_i)^2
    std::array<double, 2> target{0.0, 0.0};
    std::array<double, 2> start{-3.0, 0.1};
    std::array<double, 2> utilization{0.75, 0.25};
    double lr = 0.05;
    double momentum = 0.9;
    double gamma = 1.0;
    double tolerance = 1e-3;

    double loss(double w0, double w1) const noexcept;
};

struct TrajectoryPoint {
    std::size_t step = 0;
    double w0 = 0.0;
    double w1 = 0.0;
    double loss = 0.0;
};

struct Trajectory {
    std::string name;
    std::vector<TrajectoryPoint> points;  // step 0 is the start
    std::optional<std::size_t> steps_to_tolerance;
};

struct Toy2dResult {
    Toy2dProblem problem;
    std::array<double, 2> multipliers{1.0, 1.0};
    std::vector<Trajectory> trajectories;  // sgd, sgd_momentum, excited_sgd
};

/// SGD, SGD+momentum and excited SGD (multipliers from `variant`) for `steps` steps.
Toy2dResult toy2d_demo(ExcitationVariant variant, std::size_t steps, const Toy2dProblem& problem = {});

/// Writes toy2d_trajectory.csv (trajectory,step,w0,w1,loss) and toy2d_summary.json.
void write_toy2d(const Toy2dResult& result, const std::filesystem::path& dir);

}  // namespace exc
