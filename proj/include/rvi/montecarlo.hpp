// SPDX-License-Identifier: MIT
/**
 * @file montecarlo.hpp
 * @brief Euler-Maruyama simulation of the controlled SDE under grid policies.
 *
 * Every path owns its RNG stream, seeded from (seed, path index), so results
 * do not depend on the thread schedule. Reductions use pairwise summation.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rvi/evolve.hpp"
#include "rvi/grid.hpp"
#include "rvi/model.hpp"

namespace rvi {

/// Markov control realised along a path: u = source(s, X_s).
class PolicySource {
public:
    /// Nearest-node lookup into a per-node control index table.
    static PolicySource stationary(const ControlProblem& problem, const GridSpec& grid, std::vector<std::size_t> policy);
    /// Arbitrary feedback law, used for closed-form policies such as u = -x.
    static PolicySource feedback(std::function<Control(const Vec2&)> law);
    /// v^T_s = v_{T - s} built from the argmin policies stored by a VI run.
    /// Throws ConfigError when the stored policies leave a gap larger than
    /// `max_gap` inside [0, horizon].
    static PolicySource time_reversed(const ControlProblem& problem, const EvolutionTrajectory& traj, double horizon,
                                      double max_gap);

    Control operator()(double s, const Vec2& x) const { return law_(s, x); }

private:
    std::function<Control(double, const Vec2&)> law_;
};

struct SimConfig {
    Vec2 x0{};
    double horizon = 200.0;
    double dt = 0.01;
    std::size_t n_paths = 10000;
    std::uint64_t seed = 20240601;
    /// Ergodic averages ignore [0, burn_in).
    double burn_in = 20.0;
    /// Test hook: drop the noise term.
    bool zero_noise = false;
};

struct SimPath {
    std::vector<double> times;
    std::vector<Vec2> states;
    std::vector<Control> controls;
    bool clipped = false;
};

struct EstimateReport {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    std::size_t clipped_paths = 0;
    /// Clip fraction above 1%.
    bool flagged = false;
    std::string warning;
};

/// X_{k+1} = X_k + b dt + sigma sqrt(dt) xi_k, clamped to the grid box.
SimPath simulate_path(const ControlProblem& problem, const GridSpec& grid, const PolicySource& policy,
                      const SimConfig& config, std::size_t path_index = 0);

/// Path-averaged (1 / (T - burn_in)) int_{burn_in}^T r(X_s, U_s) ds.
EstimateReport ergodic_cost_estimate(const ControlProblem& problem, const GridSpec& grid, const PolicySource& policy,
                                     const SimConfig& config);

/// Sample mean of int_0^T r ds + phi0(X_T) - rho T, phi0 interpolated multilinearly.
EstimateReport finite_horizon_value(const ControlProblem& problem, const GridSpec& grid, const PolicySource& policy,
                                    const Field& phi0, double rho, const SimConfig& config);

/// Sample mean of g(X_T).
EstimateReport terminal_expectation(const ControlProblem& problem, const GridSpec& grid, const PolicySource& policy,
                                    const Field& g, const SimConfig& config);

/// Pairwise (cascade) sum; deterministic for a fixed input order.
double pairwise_sum(std::span<const double> values);

}  // namespace rvi
