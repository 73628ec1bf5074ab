// SPDX-License-Identifier: MIT
#include "rvi/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include "rvi/error.hpp"

namespace rvi {

namespace {

using SparseColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;
using Triplet = Eigen::Triplet<double>;

Eigen::VectorXd solve_sparse(const SparseColMatrix& a, const Eigen::VectorXd& b, const LinearSolverOptions& opt,
                             const char* what) {
    Eigen::VectorXd x;
    if (static_cast<std::size_t>(a.rows()) <= opt.direct_limit) {
        Eigen::SparseLU<SparseColMatrix, Eigen::COLAMDOrdering<int>> lu;
        lu.analyzePattern(a);
        lu.factorize(a);
        if (lu.info() != Eigen::Success) throw SolverError(std::string(what) + ": sparse LU factorization failed");
        x = lu.solve(b);
        if (lu.info() != Eigen::Success) throw SolverError(std::string(what) + ": sparse LU solve failed");
    } else {
        Eigen::BiCGSTAB<SparseColMatrix, Eigen::DiagonalPreconditioner<double>> it;
        it.setTolerance(opt.iterative_tol);
        it.setMaxIterations(opt.iterative_max_iter);
        it.compute(a);
        x = it.solve(b);
        if (it.info() != Eigen::Success) throw SolverError(std::string(what) + ": BiCGSTAB did not converge");
    }
    if (!x.allFinite()) throw SolverError(std::string(what) + ": solution has non-finite entries");
    return x;
}

void require_finite(const GeneratorMatrix& g, const char* what) {
    for (Eigen::Index i = 0; i < g.q.nonZeros(); ++i) {
        if (!std::isfinite(g.q.valuePtr()[i])) throw SolverError(std::string(what) + ": generator has non-finite entries");
    }
}

double poisson_residual(const GeneratorMatrix& g, const Field& v, const Field& r, double rho) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < g.q.outerSize(); ++i) {
        const double vi = v[static_cast<std::size_t>(i)];
        double s = 0.0;
        for (SparseRowMatrix::InnerIterator it(g.q, i); it; ++it) {
            if (it.col() != i) s += it.value() * (v[static_cast<std::size_t>(it.col())] - vi);
        }
        worst = std::max(worst, std::abs(s + r[static_cast<std::size_t>(i)] - rho));
    }
    return worst;
}

}  // namespace

double StationaryDistribution::expectation(const Field& f) const {
    if (f.size() != mu.size()) throw DimensionError("distribution and field sizes differ");
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) s += mu[i] * f[i];
    return s;
}

StationaryDistribution stationary_distribution(const GeneratorMatrix& g) {
    require_finite(g, "stationary_distribution");
    const auto n = static_cast<Eigen::Index>(g.size());
    StationaryDistribution out;
    if (n == 1) {
        out.mu = {1.0};
        return out;
    }
    // [Q^T 1; 1^T 0] [mu; lambda] = [0; 1]
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(g.q.nonZeros() + 2 * n));
    for (Eigen::Index i = 0; i < g.q.outerSize(); ++i) {
        for (SparseRowMatrix::InnerIterator it(g.q, i); it; ++it) trip.emplace_back(it.col(), it.row(), it.value());
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        trip.emplace_back(i, n, 1.0);
        trip.emplace_back(n, i, 1.0);
    }
    SparseColMatrix a(n + 1, n + 1);
    a.setFromTriplets(trip.begin(), trip.end());
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
    b(n) = 1.0;
    const Eigen::VectorXd x = solve_sparse(a, b, LinearSolverOptions{}, "stationary_distribution");

    // A reducible chain leaves a second null direction; the bordered matrix is
    // then singular and LU returns garbage with a multiplier far from zero or
    // clearly negative weights.
    const double scale = x.head(n).cwiseAbs().maxCoeff();
    out.mu.assign(x.data(), x.data() + n);
    for (auto& m : out.mu) {
        if (m < -1e-9 * std::max(1.0, scale)) throw SolverError("stationary_distribution: chain is numerically reducible");
        m = std::max(m, 0.0);
    }
    Eigen::Map<const Eigen::VectorXd> mu_vec(out.mu.data(), n);
    const Eigen::VectorXd res = g.q.transpose() * mu_vec;
    out.residual = res.cwiseAbs().maxCoeff();
    const double qscale = g.q.coeffs().cwiseAbs().maxCoeff();
    if (out.residual > 1e-8 * std::max(1.0, qscale)) {
        throw SolverError("stationary_distribution: chain is numerically reducible (residual " +
                          std::to_string(out.residual) + ")");
    }
    const double total = std::accumulate(out.mu.begin(), out.mu.end(), 0.0);
    for (auto& m : out.mu) m /= total;
    return out;
}

PoissonSolution poisson_solve(const GeneratorMatrix& g, const Field& cost, const LinearSolverOptions& options) {
    require_same_grid(g.grid, cost.grid(), "poisson_solve");
    require_finite(g, "poisson_solve");
    if (!cost.all_finite()) throw SolverError("poisson_solve: cost has non-finite entries");
    const auto n = static_cast<Eigen::Index>(g.size());
    const auto anchor = static_cast<Eigen::Index>(g.grid.anchor_index());

    // [Q  -1; e_anchor^T  0] [V; rho] = [-r; 0]
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(g.q.nonZeros() + n + 1));
    for (Eigen::Index i = 0; i < g.q.outerSize(); ++i) {
        for (SparseRowMatrix::InnerIterator it(g.q, i); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
        trip.emplace_back(i, n, -1.0);
    }
    trip.emplace_back(n, anchor, 1.0);
    SparseColMatrix a(n + 1, n + 1);
    a.setFromTriplets(trip.begin(), trip.end());
    Eigen::VectorXd b(n + 1);
    for (Eigen::Index i = 0; i < n; ++i) b(i) = -cost[static_cast<std::size_t>(i)];
    b(n) = 0.0;
    const Eigen::VectorXd x = solve_sparse(a, b, options, "poisson_solve");

    PoissonSolution out;
    out.rho = x(n);
    std::vector<double> v(x.data(), x.data() + n);
    out.value = Field(g.grid, std::move(v));
    out.residual = poisson_residual(g, out.value, cost, out.rho);
    out.mu = stationary_distribution(g);
    out.rho_mu = out.mu.expectation(cost);
    out.ill_conditioned = std::abs(out.rho - out.rho_mu) > 1e-6;
    out.value += 1.0 - out.value.min();
    return out;
}

std::vector<std::size_t> zero_drift_policy(const ControlledStencil& stencil) {
    std::vector<std::size_t> policy(stencil.num_nodes(), 0);
    const int d = stencil.grid().dim();
    for (std::size_t node = 0; node < stencil.num_nodes(); ++node) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < stencil.num_controls(); ++k) {
            double s = 0.0;
            for (int i = 0; i < d; ++i) s += stencil.drift(node, k, i) * stencil.drift(node, k, i);
            if (s < best) {
                best = s;
                policy[node] = k;
            }
        }
    }
    return policy;
}

SolveReport policy_iteration(const ControlledStencil& stencil, std::span<const std::size_t> v0,
                             const PolicyIterationOptions& options) {
    const std::size_t n = stencil.num_nodes();
    if (v0.size() != n) throw DimensionError("initial policy length does not match the grid");
    for (std::size_t i = 0; i < n; ++i) {
        if (v0[i] >= stencil.num_controls()) throw ConfigError("initial policy entry out of range at node " + std::to_string(i));
    }

    SolveReport report;
    report.grid = stencil.grid();
    std::vector<std::size_t> policy(v0.begin(), v0.end());
    std::vector<double> ham(n);
    std::vector<std::size_t> argmin(n);

    for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
        const auto g = stencil.policy_generator(policy);
        const auto cost = stencil.policy_cost(policy);
        auto sol = poisson_solve(g, cost, options.linear);

        stencil.min_hamiltonian(sol.value.values(), ham, argmin);
        double hjb = 0.0;
        for (std::size_t i = 0; i < n; ++i) hjb = std::max(hjb, std::abs(ham[i] - sol.rho));

        // Greedy improvement; a node keeps its control when that control
        // already attains the minimum up to rounding.
        std::size_t changes = 0;
        std::vector<std::size_t> next = policy;
        for (std::size_t i = 0; i < n; ++i) {
            if (argmin[i] == policy[i]) continue;
            const double current = stencil.hamiltonian_at(i, policy[i], sol.value.values());
            const double slack = 1e-12 * std::max(1.0, std::abs(ham[i]));
            if (current > ham[i] + slack) {
                next[i] = argmin[i];
                ++changes;
            }
        }
        report.history.push_back({sol.rho, changes, sol.residual, hjb});

        const bool done = changes == 0 || hjb <= options.tol;
        if (done || iter + 1 == options.max_iter) {
            report.rho = sol.rho;
            report.value = std::move(sol.value);
            report.policy = policy;
            report.converged = done;
            report.hjb_residual = hjb;
            report.rho_mu = sol.rho_mu;
            report.mu = std::move(sol.mu);
            report.mu_value = report.mu.expectation(report.value);
            return report;
        }
        policy = std::move(next);
    }
    throw ConfigError("policy_iteration: max_iter must be positive");
}

SolveReport policy_iteration(const ControlProblem& problem, const GridSpec& grid, std::span<const std::size_t> v0,
                             const PolicyIterationOptions& options) {
    return policy_iteration(ControlledStencil(problem, grid), v0, options);
}

std::optional<SolveReport> closed_form_report(const ControlProblem& problem, const GridSpec& grid) {
    if (!problem.exact) return std::nullopt;
    const auto& ex = *problem.exact;
    SolveReport report;
    report.grid = grid;
    report.source = "closed-form";
    report.rho = ex.rho;
    report.value = Field::sample(grid, ex.value);
    report.value += 1.0 - report.value.min();
    report.policy.resize(grid.size());
    for (std::size_t node = 0; node < grid.size(); ++node) {
        const Control target = ex.control(grid.coordinate(node));
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < problem.controls.size(); ++k) {
            double s = 0.0;
            for (int i = 0; i < problem.controls.control_dim(); ++i) {
                const double e = problem.controls[k][i] - target[i];
                s += e * e;
            }
            if (s < best) {
                best = s;
                report.policy[node] = k;
            }
        }
    }
    report.converged = true;
    return report;
}

double weighted_norm(const Field& f, const Field& value) {
    require_same_grid(f.grid(), value.grid(), "weighted_norm");
    double worst = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!(value[i] >= 1.0)) throw ConfigError("weighted_norm: weight below 1 at node " + std::to_string(i));
        worst = std::max(worst, std::abs(f[i]) / value[i]);
    }
    return worst;
}

RegionCheck check_region_membership(const Field& phi0, const Field& value, double c) {
    require_same_grid(phi0.grid(), value.grid(), "check_region_membership");
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < phi0.size(); ++i) gap = std::min(gap, phi0[i] - value[i]);
    RegionCheck out;
    out.margin = gap - c;
    out.weighted_norm = weighted_norm(phi0, value);
    out.inside = out.margin >= 0.0 && std::isfinite(out.weighted_norm);
    return out;
}

}  // namespace rvi
