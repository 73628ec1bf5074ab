// SPDX-License-Identifier: MIT
/**
 * @file evolve.hpp
 * @brief Time marching of the value iteration (VI) and relative value
 *        iteration (RVI) Cauchy problems and the maps between them.
 *
 *   VI:   d/dt phibar = min_u [L^u phibar + r] - rho
 *   RVI:  d/dt phi    = min_u [L^u phi + r]    - A(phi)
 *
 * where A(phi) is phi at the anchor node (x = 0) or, in the min-anchored
 * variant, the minimum of phi over the grid.
 */
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rvi/discretize.hpp"
#include "rvi/error.hpp"
#include "rvi/grid.hpp"
#include "rvi/stationary.hpp"

namespace rvi {

enum class EvolutionMode { vi, rvi, rvi_min };
enum class AnchorMode { point, min };
enum class TimeMethod { explicit_euler, implicit_euler };

std::string to_string(EvolutionMode mode);
EvolutionMode parse_evolution_mode(const std::string& s);

struct StepResult {
    Field field;
    std::vector<std::size_t> policy;
};

/// One explicit VI step: phibar + dt (H(phibar) - rho).
StepResult step_vi(const ControlledStencil& stencil, const Field& phibar, double rho, double dt);
StepResult step_vi(const ControlProblem& problem, const GridSpec& grid, const Field& phibar, double rho, double dt);

/// One explicit RVI step: phi + dt (H(phi) - A(phi)).
StepResult step_rvi(const ControlledStencil& stencil, const Field& phi, double dt, AnchorMode anchor = AnchorMode::point);
StepResult step_rvi(const ControlProblem& problem, const GridSpec& grid, const Field& phi, double dt,
                    AnchorMode anchor = AnchorMode::point);

struct EvolutionConfig {
    EvolutionMode mode = EvolutionMode::rvi;
    /// Required for VI.
    std::optional<double> rho;
    double horizon = 30.0;
    /// 0 selects the explicit stability bound 0.9 / max exit rate.
    double dt = 0.0;
    double snapshot_every = 0.5;
    /// Cadence of stored argmin policies; 0 stores them with the field snapshots.
    double policy_every = 0.0;
    bool store_policies = false;
    TimeMethod method = TimeMethod::explicit_euler;
    /// Region for the oscillation diagnostic; empty skips it.
    std::optional<Box> oscillation_box;
    /// Target for the running sup-error diagnostic.
    const SolveReport* reference = nullptr;
    double probe_radius = 1.0;
    /// Abort threshold on max |phi|.
    double blowup = 1e12;
};

/// Diagnostics recorded at each field snapshot.
struct SnapshotDiagnostics {
    double oscillation = 0.0;
    double sup_error = 0.0;  ///< NaN without a reference
};

struct EvolutionTrajectory {
    EvolutionMode mode = EvolutionMode::rvi;
    std::string method = "explicit";
    double dt = 0.0;
    std::size_t steps = 0;
    double rho = 0.0;  ///< the rho used by VI, or carried along for transforms
    bool has_rho = false;
    /// Snapshot instants, strictly increasing; always includes 0 and the horizon.
    std::vector<double> times;
    std::vector<Field> snapshots;
    std::vector<SnapshotDiagnostics> diagnostics;
    /// phi(t_k, anchor) for k = 0..steps.
    std::vector<double> anchor_series;
    /// Argmin policy at policy_times (policy used for the step starting there).
    std::vector<double> policy_times;
    std::vector<std::vector<std::size_t>> policies;

    double time_of_step(std::size_t k) const { return static_cast<double>(k) * dt; }
    const Field& final_field() const { return snapshots.back(); }
    /// Snapshot with the time closest to t.
    const Field& snapshot_near(double t) const;
};

/// Raised when max |phi| exceeds the blow-up threshold; carries what was computed.
class InstabilityError : public NumericalError {
public:
    InstabilityError(const std::string& what, EvolutionTrajectory partial)
        : NumericalError(what), partial_(std::move(partial)) {}
    const EvolutionTrajectory& partial() const { return partial_; }

private:
    EvolutionTrajectory partial_;
};

EvolutionTrajectory run(const ControlledStencil& stencil, const Field& phi0, const EvolutionConfig& config);

/// phibar(t) = phi(t) - rho t + int_0^t phi(s, anchor) ds, trapezoidal in s.
EvolutionTrajectory vi_from_rvi(const EvolutionTrajectory& traj, double rho);

/// phi(t) = phibar(t) - int_0^t e^{s-t} phibar(s, anchor) ds + rho (1 - e^{-t}),
/// integrating the piecewise-linear anchor series exactly against the kernel.
EvolutionTrajectory rvi_from_vi(const EvolutionTrajectory& traj, double rho);

struct CouplingResiduals {
    double ident_residual = 0.0;  ///< max |(phi - phibar) - mean(phi - phibar)|
    double f_value = 0.0;         ///< mean(phi - phibar)
};

CouplingResiduals coupling_residuals(const Field& phi, const Field& phibar);

}  // namespace rvi
