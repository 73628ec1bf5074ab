// SPDX-License-Identifier: MIT
#include "rvi/diagnose.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rvi/error.hpp"

namespace rvi {

double sup_error_on_compact(const Field& phi, const SolveReport& report, double radius) {
    require_same_grid(phi.grid(), report.value.grid(), "sup_error_on_compact");
    const auto& grid = phi.grid();
    const Box probe = Box::centered(grid.dim(), radius);
    if (!(radius >= 0.0)) throw ConfigError("probe radius must be nonnegative");
    for (int i = 0; i < grid.dim(); ++i) {
        if (probe.lower[i] < grid.lower()[i] || probe.upper[i] > grid.upper()[i]) {
            throw ConfigError("probe radius " + std::to_string(radius) + " exceeds the grid box");
        }
    }
    const double shift = report.rho - report.value.at_anchor();
    const double slack = 1e-9 * grid.spacing(0);
    double worst = 0.0;
    for (std::size_t n = 0; n < grid.size(); ++n) {
        if (!probe.contains(grid.coordinate(n), slack)) continue;
        worst = std::max(worst, std::abs(phi[n] - (report.value[n] + shift)));
    }
    return worst;
}

double oscillation(const Field& phi, const Box& region) {
    const auto& grid = phi.grid();
    if (region.dim != grid.dim()) throw ConfigError("oscillation region has the wrong dimension");
    const double slack = 1e-9 * grid.spacing(0);
    if (!grid.box().contains(region.lower, slack) || !grid.box().contains(region.upper, slack)) {
        throw ConfigError("oscillation region leaves the grid");
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < grid.size(); ++n) {
        if (!region.contains(grid.coordinate(n), slack)) continue;
        lo = std::min(lo, phi[n]);
        hi = std::max(hi, phi[n]);
    }
    if (lo > hi) throw ConfigError("oscillation region contains no grid node");
    return hi - lo;
}

Box default_b0_box(const ControlProblem& problem, const GridSpec& grid, double rho) {
    const auto level = near_monotone_level_set(problem, rho, grid);
    Box b;
    b.dim = grid.dim();
    for (int i = 0; i < grid.dim(); ++i) {
        const double h = grid.spacing(i);
        const double lo = level.nodes.empty() ? 0.0 : level.bounding_box.lower[i];
        const double hi = level.nodes.empty() ? 0.0 : level.bounding_box.upper[i];
        b.lower[i] = std::max(grid.lower()[i], lo - h);
        b.upper[i] = std::min(grid.upper()[i], hi + h);
    }
    return b;
}

Field limit_comparable(const Field& phi, EvolutionMode mode, double rho) {
    if (mode == EvolutionMode::rvi) return phi;
    return phi - phi.at_anchor() + rho;
}

AnchorDriftReport anchor_drift_bounds(const EvolutionTrajectory& traj, double rho, double osc0, double eps,
                                      std::size_t max_samples) {
    AnchorDriftReport out;
    const auto& a = traj.anchor_series;
    if (a.empty()) return out;
    out.anchor_min = *std::min_element(a.begin(), a.end());
    out.anchor_max = *std::max_element(a.begin(), a.end());
    out.finite = std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
    if (traj.mode != EvolutionMode::vi) return out;

    std::vector<std::size_t> idx;
    const std::size_t stride = std::max<std::size_t>(1, (a.size() + max_samples - 1) / std::max<std::size_t>(1, max_samples));
    for (std::size_t k = 0; k < a.size(); k += stride) idx.push_back(k);
    if (idx.back() != a.size() - 1) idx.push_back(a.size() - 1);

    for (std::size_t j = 1; j < idx.size(); ++j) {
        const double t = traj.time_of_step(idx[j]);
        for (std::size_t i = 0; i < j; ++i) {
            const double s = traj.time_of_step(idx[i]);
            const double drop = a[idx[i]] - a[idx[j]];
            const double bound = rho * (t - s) + osc0 + eps;
            ++out.pairs_checked;
            if (drop > bound) out.violations.push_back({s, t, drop, bound});
        }
    }
    return out;
}

std::vector<DiagnosticsRecord> diagnostics_series(const EvolutionTrajectory& traj, const SolveReport& target,
                                                  const SolveReport& stationary, const Box& b0, double radius) {
    std::vector<DiagnosticsRecord> out;
    out.reserve(traj.snapshots.size());
    for (std::size_t j = 0; j < traj.snapshots.size(); ++j) {
        const Field& phi = traj.snapshots[j];
        DiagnosticsRecord r;
        r.time = traj.times[j];
        r.sup_error_on_compact = sup_error_on_compact(limit_comparable(phi, traj.mode, target.rho), target, radius);
        r.oscillation_b0 = oscillation(phi, b0);
        r.anchor_value = phi.at_anchor();
        r.weighted_norm_vs_vstar = weighted_norm(phi, stationary.value);
        r.mu_average = traj.mode == EvolutionMode::vi ? stationary.mu.expectation(phi)
                                                      : std::numeric_limits<double>::quiet_NaN();
        out.push_back(r);
    }
    return out;
}

GrowthBoundCheck weighted_growth_check(const EvolutionTrajectory& traj, const Field& vstar, double rho) {
    if (traj.snapshots.empty()) throw ConfigError("weighted_growth_check: empty trajectory");
    GrowthBoundCheck out;
    const double base = std::max(1.0, weighted_norm(traj.snapshots.front(), vstar));
    double running = 0.0;
    for (std::size_t j = 0; j < traj.snapshots.size(); ++j) {
        running = std::max(running, weighted_norm(traj.snapshots[j], vstar));
        const double bound = (1.0 + rho * traj.times[j]) * base;
        out.lhs.push_back(running);
        out.rhs.push_back(bound);
        if (running > bound) out.holds = false;
    }
    return out;
}

}  // namespace rvi
