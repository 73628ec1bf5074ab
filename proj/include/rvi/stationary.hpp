// SPDX-License-Identifier: MIT
/**
 * @file stationary.hpp
 * @brief Stationary ergodic HJB: Poisson solves, policy iteration, invariant laws.
 */
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rvi/discretize.hpp"
#include "rvi/grid.hpp"
#include "rvi/model.hpp"

namespace rvi {

/// Invariant probability of a generator: mu^T Q = 0, mu >= 0, sum mu = 1.
struct StationaryDistribution {
    std::vector<double> mu;
    /// max_j |(mu^T Q)_j| before the final renormalisation.
    double residual = 0.0;

    /// mu^T f.
    double expectation(const Field& f) const;
};

/// Throws SolverError when the chain is numerically reducible.
StationaryDistribution stationary_distribution(const GeneratorMatrix& g);

struct PoissonSolution {
    /// Average cost from the bordered system.
    double rho = 0.0;
    /// mu^T r, the independent route to the same number.
    double rho_mu = 0.0;
    /// True when |rho - rho_mu| > 1e-6.
    bool ill_conditioned = false;
    /// Relative value, shifted so min V = 1.
    Field value;
    /// max |Q V + r - rho|.
    double residual = 0.0;
    StationaryDistribution mu;
};

struct LinearSolverOptions {
    /// Above this node count use BiCGSTAB with a diagonal preconditioner.
    std::size_t direct_limit = 40000;
    double iterative_tol = 1e-12;
    int iterative_max_iter = 20000;
};

/// Solves Q V + r = rho with V(anchor) = 0 as one bordered system in (V, rho).
PoissonSolution poisson_solve(const GeneratorMatrix& g, const Field& cost, const LinearSolverOptions& options = {});

struct PolicyIterationStep {
    double rho = 0.0;
    std::size_t policy_changes = 0;
    double poisson_residual = 0.0;
    double hjb_residual = 0.0;
};

struct SolveReport {
    GridSpec grid;
    double rho = 0.0;
    /// min V = 1.
    Field value;
    /// Control index per node.
    std::vector<std::size_t> policy;
    std::vector<PolicyIterationStep> history;
    bool converged = false;
    /// max_node |min_u [L^u V + r] - rho| at the returned (rho, V).
    double hjb_residual = 0.0;
    /// Invariant law of the returned policy and derived checks.
    StationaryDistribution mu;
    double rho_mu = 0.0;
    double mu_value = 0.0;  ///< mu^T V, finite on any grid
    /// "policy-iteration" or "closed-form".
    std::string source = "policy-iteration";
};

struct PolicyIterationOptions {
    double tol = 1e-8;
    std::size_t max_iter = 100;
    LinearSolverOptions linear;
};

/// Per node, the control whose drift has the smallest Euclidean norm.
std::vector<std::size_t> zero_drift_policy(const ControlledStencil& stencil);

/// Policy iteration from v0. Exceeding max_iter returns converged = false.
SolveReport policy_iteration(const ControlledStencil& stencil, std::span<const std::size_t> v0,
                             const PolicyIterationOptions& options = {});
SolveReport policy_iteration(const ControlProblem& problem, const GridSpec& grid, std::span<const std::size_t> v0,
                             const PolicyIterationOptions& options = {});

/// Grid samples of a preset's closed-form solution (V normalised to min 1,
/// policy = nearest available control to u*). Empty when the problem has none.
std::optional<SolveReport> closed_form_report(const ControlProblem& problem, const GridSpec& grid);

/// max_x |f(x)| / V(x); throws ConfigError if some V < 1.
double weighted_norm(const Field& f, const Field& value);

struct RegionCheck {
    bool inside = false;
    double margin = 0.0;  ///< min(phi0 - V) - c
    double weighted_norm = 0.0;
};

/// Membership of phi0 in {h : h - V >= c}.
RegionCheck check_region_membership(const Field& phi0, const Field& value, double c);

}  // namespace rvi
