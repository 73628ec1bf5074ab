// SPDX-License-Identifier: MIT
/**
 * @file diagnose.hpp
 * @brief Runtime checks of the convergence and growth estimates.
 *
 * The continuum estimates carry constants that are not computable here, so
 * every check reports the measured quantity and compares it only against
 * bounds that are explicit (rho, osc phi0, V*-weighted norms).
 */
#pragma once

#include <optional>
#include <vector>

#include "rvi/evolve.hpp"
#include "rvi/grid.hpp"
#include "rvi/model.hpp"
#include "rvi/stationary.hpp"

namespace rvi {

/// max over |x|_inf <= radius of |phi - (V - V(anchor) + rho)|.
/// Throws ConfigError when the probe box leaves the grid.
double sup_error_on_compact(const Field& phi, const SolveReport& report, double radius);

/// max - min of phi over the nodes inside `region`.
double oscillation(const Field& phi, const Box& region);

/// Bounding box of the sub-rho level set inflated by one cell and clipped to the grid.
Box default_b0_box(const ControlProblem& problem, const GridSpec& grid, double rho);

/// Field with the same limit as an RVI field: phi itself in point-anchored RVI,
/// phi - phi(anchor) + rho otherwise.
Field limit_comparable(const Field& phi, EvolutionMode mode, double rho);

struct AnchorViolation {
    double t_early = 0.0;
    double t_late = 0.0;
    double drop = 0.0;   ///< anchor(t_early) - anchor(t_late)
    double bound = 0.0;  ///< rho (t_late - t_early) + osc0 + eps
};

struct AnchorDriftReport {
    std::vector<AnchorViolation> violations;
    double anchor_min = 0.0;
    double anchor_max = 0.0;
    bool finite = true;
    std::size_t pairs_checked = 0;
};

/// VI trajectories: every sampled pair s < t is checked for
/// anchor(s) - anchor(t) <= rho (t - s) + osc0 + eps. All modes: min/max and
/// finiteness of the anchor series. At most `max_samples` evenly strided
/// steps (plus the last) enter the pair scan.
AnchorDriftReport anchor_drift_bounds(const EvolutionTrajectory& traj, double rho, double osc0, double eps,
                                      std::size_t max_samples = 2048);

struct DiagnosticsRecord {
    double time = 0.0;
    double sup_error_on_compact = 0.0;
    double oscillation_b0 = 0.0;
    double anchor_value = 0.0;
    double weighted_norm_vs_vstar = 0.0;
    double mu_average = 0.0;  ///< mu_{v*}^T phibar in VI mode, NaN otherwise
};

/// One record per stored snapshot.
std::vector<DiagnosticsRecord> diagnostics_series(const EvolutionTrajectory& traj, const SolveReport& target,
                                                  const SolveReport& stationary, const Box& b0, double radius);

struct GrowthBoundCheck {
    bool holds = true;
    /// Per snapshot: running sup over s <= t of ||phibar(s)||_{V*} and (1 + rho t) max(1, ||phi0||_{V*}).
    std::vector<double> lhs;
    std::vector<double> rhs;
};

/// ||phibar||_{V*,t} <= (1 + rho t) max(1, ||phi0||_{V*}) at every snapshot of a VI run.
GrowthBoundCheck weighted_growth_check(const EvolutionTrajectory& traj, const Field& vstar, double rho);

}  // namespace rvi
