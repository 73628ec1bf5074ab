// SPDX-License-Identifier: MIT
#include "rvi/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "rvi/error.hpp"

namespace rvi {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::mt19937_64 path_stream(std::uint64_t seed, std::size_t path) {
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(static_cast<std::uint64_t>(path) + 1)));
}

Mat2 dispersion(const ControlProblem& problem, const Vec2& x) {
    if (problem.sigma) return problem.sigma(x);
    const Mat2 a = problem.diffusion(x);
    Mat2 s{};
    if (problem.dim == 1) {
        s[0][0] = std::sqrt(2.0 * a[0][0]);
        return s;
    }
    Eigen::Matrix2d m;
    m << 2.0 * a[0][0], 2.0 * a[0][1], 2.0 * a[1][0], 2.0 * a[1][1];
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m);
    const Eigen::Matrix2d root = es.operatorSqrt();
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) s[i][j] = root(i, j);
    return s;
}

/// Streams one path through `visit(k, t, x, u)` for k = 0..steps-1 and returns X_T.
template <typename Visit>
Vec2 integrate(const ControlProblem& problem, const GridSpec& grid, const PolicySource& policy,
               const SimConfig& config, std::size_t path, std::size_t steps, bool& clipped, Visit&& visit) {
    auto rng = path_stream(config.seed, path);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Box box = grid.box();
    const double sqdt = std::sqrt(config.dt);
    const int d = problem.dim;
    Vec2 x = config.x0;
    clipped = false;
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * config.dt;
        const Control u = policy(t, x);
        visit(k, t, x, u);
        const Vec2 b = problem.drift(x, u);
        Vec2 xi{};
        for (int i = 0; i < d; ++i) xi[i] = normal(rng);
        Vec2 nx = x;
        if (config.zero_noise) {
            for (int i = 0; i < d; ++i) nx[i] += b[i] * config.dt;
        } else {
            const Mat2 s = dispersion(problem, x);
            for (int i = 0; i < d; ++i) {
                double noise = 0.0;
                for (int j = 0; j < d; ++j) noise += s[i][j] * xi[j];
                nx[i] += b[i] * config.dt + noise * sqdt;
            }
        }
        for (int i = 0; i < d; ++i) {
            if (!std::isfinite(nx[i])) {
                throw NumericalError("non-finite state at step " + std::to_string(k + 1) + " of path " +
                                     std::to_string(path));
            }
            if (nx[i] < box.lower[i]) {
                nx[i] = box.lower[i];
                clipped = true;
            } else if (nx[i] > box.upper[i]) {
                nx[i] = box.upper[i];
                clipped = true;
            }
        }
        x = nx;
    }
    return x;
}

std::size_t step_count(double horizon, double dt) {
    if (horizon <= 0.0) return 0;
    return static_cast<std::size_t>(std::llround(horizon / dt));
}

void validate(const ControlProblem& problem, const GridSpec& grid, const SimConfig& config) {
    if (!(config.dt > 0.0)) throw ConfigError("simulation step must be positive");
    if (config.n_paths < 1) throw ConfigError("need at least one path");
    if (!(config.horizon >= 0.0)) throw ConfigError("simulation horizon must be nonnegative");
    if (problem.dim != grid.dim()) throw ConfigError("problem and grid dimensions differ");
}

EstimateReport summarize(const std::vector<double>& values, const std::vector<char>& clipped) {
    EstimateReport r;
    r.n_paths = values.size();
    r.mean = pairwise_sum(values) / static_cast<double>(values.size());
    if (values.size() > 1) {
        std::vector<double> sq(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - r.mean) * (values[i] - r.mean);
        const double var = pairwise_sum(sq) / static_cast<double>(values.size() - 1);
        r.std_error = std::sqrt(var / static_cast<double>(values.size()));
    }
    r.clipped_paths = static_cast<std::size_t>(std::count(clipped.begin(), clipped.end(), char{1}));
    const double frac = static_cast<double>(r.clipped_paths) / static_cast<double>(values.size());
    r.flagged = frac > 0.01;
    if (r.clipped_paths == r.n_paths) {
        r.warning = "every path hit the truncation box";
    } else if (r.flagged) {
        std::ostringstream os;
        os << "clip fraction " << frac << " exceeds 1%";
        r.warning = os.str();
    }
    return r;
}

}  // namespace

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

PolicySource PolicySource::stationary(const ControlProblem& problem, const GridSpec& grid,
                                      std::vector<std::size_t> policy) {
    if (policy.size() != grid.size()) throw DimensionError("policy length does not match the grid");
    for (auto k : policy) {
        if (k >= problem.controls.size()) throw ConfigError("policy entry out of range");
    }
    PolicySource src;
    src.law_ = [controls = problem.controls, grid, policy = std::move(policy)](double, const Vec2& x) {
        return controls[policy[grid.nearest_node(x)]];
    };
    return src;
}

PolicySource PolicySource::feedback(std::function<Control(const Vec2&)> law) {
    PolicySource src;
    src.law_ = [law = std::move(law)](double, const Vec2& x) { return law(x); };
    return src;
}

PolicySource PolicySource::time_reversed(const ControlProblem& problem, const EvolutionTrajectory& traj,
                                         double horizon, double max_gap) {
    if (traj.mode != EvolutionMode::vi) throw ConfigError("time-reversed policies need a VI trajectory");
    if (traj.policies.empty()) throw ConfigError("trajectory stores no policies");
    const auto& grid = traj.snapshots.front().grid();
    std::vector<double> times;
    std::vector<std::vector<std::size_t>> pols;
    const double tol = 1e-9 * std::max(1.0, horizon);
    for (std::size_t j = 0; j < traj.policy_times.size(); ++j) {
        if (traj.policy_times[j] <= horizon + tol) {
            times.push_back(traj.policy_times[j]);
            pols.push_back(traj.policies[j]);
        }
    }
    if (times.empty() || times.front() > tol) throw ConfigError("stored policies do not start at t = 0");
    double gap = horizon - times.back();
    for (std::size_t j = 1; j < times.size(); ++j) gap = std::max(gap, times[j] - times[j - 1]);
    if (gap > max_gap + tol) {
        std::ostringstream os;
        os << "policy snapshots too sparse to time-reverse: gap " << gap << " > " << max_gap;
        throw ConfigError(os.str());
    }
    for (const auto& p : pols) {
        if (p.size() != grid.size()) throw DimensionError("stored policy length does not match the grid");
    }
    PolicySource src;
    src.law_ = [controls = problem.controls, grid, times = std::move(times), pols = std::move(pols), horizon](
                   double s, const Vec2& x) {
        const double tau = horizon - s;
        // nearest stored instant to tau
        auto it = std::lower_bound(times.begin(), times.end(), tau);
        std::size_t j;
        if (it == times.end()) {
            j = times.size() - 1;
        } else {
            j = static_cast<std::size_t>(it - times.begin());
            if (j > 0 && tau - times[j - 1] < times[j] - tau) --j;
        }
        return controls[pols[j][grid.nearest_node(x)]];
    };
    return src;
}

SimPath simulate_path(const ControlProblem& problem, const GridSpec& grid, const PolicySource& policy,
                      const SimConfig& config, std::size_t path_index) {
    validate(problem, grid, config);
    const std::size_t steps = step_count(config.horizon, config.dt);
    SimPath path;
    path.times.reserve(steps + 1);
    path.states.reserve(steps + 1);
    path.controls.reserve(steps);
    const Vec2 xt = integrate(problem, grid, policy, config, path_index, steps, path.clipped,
                              [&](std::size_t, double t, const Vec2& x, const Control& u) {
                                  path.times.push_back(t);
                                  path.states.push_back(x);
                                  path.controls.push_back(u);
                              });
    path.times.push_back(static_cast<double>(steps) * config.dt);
    path.states.push_back(xt);
    return path;
}

EstimateReport ergodic_cost_estimate(const ControlProblem& problem, const GridSpec& grid, const PolicySource& policy,
                                     const SimConfig& config) {
    validate(problem, grid, config);
    const std::size_t steps = step_count(config.horizon, config.dt);
    const std::size_t burn = std::min(steps, step_count(config.burn_in, config.dt));
    if (burn >= steps) throw ConfigError("burn-in must be shorter than the horizon");
    const auto window = static_cast<double>(steps - burn);

    std::vector<double> values(config.n_paths);
    std::vector<char> clipped(config.n_paths, 0);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::size_t p = 0; p < config.n_paths; ++p) {
        std::vector<double> running;
        running.reserve(steps - burn);
        bool c = false;
        integrate(problem, grid, policy, config, p, steps, c, [&](std::size_t k, double, const Vec2& x, const Control& u) {
            if (k >= burn) running.push_back(problem.cost(x, u));
        });
        values[p] = pairwise_sum(running) / window;
        clipped[p] = c ? 1 : 0;
    }
    return summarize(values, clipped);
}

EstimateReport finite_horizon_value(const ControlProblem& problem, const GridSpec& grid, const PolicySource& policy,
                                    const Field& phi0, double rho, const SimConfig& config) {
    validate(problem, grid, config);
    require_same_grid(phi0.grid(), grid, "finite_horizon_value");
    const std::size_t steps = step_count(config.horizon, config.dt);

    std::vector<double> values(config.n_paths);
    std::vector<char> clipped(config.n_paths, 0);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::size_t p = 0; p < config.n_paths; ++p) {
        std::vector<double> running;
        running.reserve(steps);
        bool c = false;
        const Vec2 xt = integrate(problem, grid, policy, config, p, steps, c,
                                  [&](std::size_t, double, const Vec2& x, const Control& u) {
                                      running.push_back(problem.cost(x, u));
                                  });
        // left-point rule for int_0^T (r - rho) ds
        values[p] = (pairwise_sum(running) - rho * static_cast<double>(steps)) * config.dt + phi0.interpolate(xt);
        clipped[p] = c ? 1 : 0;
    }
    return summarize(values, clipped);
}

EstimateReport terminal_expectation(const ControlProblem& problem, const GridSpec& grid, const PolicySource& policy,
                                    const Field& g, const SimConfig& config) {
    validate(problem, grid, config);
    require_same_grid(g.grid(), grid, "terminal_expectation");
    const std::size_t steps = step_count(config.horizon, config.dt);
    std::vector<double> values(config.n_paths);
    std::vector<char> clipped(config.n_paths, 0);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::size_t p = 0; p < config.n_paths; ++p) {
        bool c = false;
        const Vec2 xt = integrate(problem, grid, policy, config, p, steps, c,
                                  [](std::size_t, double, const Vec2&, const Control&) {});
        values[p] = g.interpolate(xt);
        clipped[p] = c ? 1 : 0;
    }
    return summarize(values, clipped);
}

}  // namespace rvi
