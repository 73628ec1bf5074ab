// SPDX-License-Identifier: MIT
#include "rvi/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/SparseLU>

#include "rvi/diagnose.hpp"
#include "rvi/error.hpp"

namespace rvi {

std::string to_string(EvolutionMode mode) {
    switch (mode) {
        case EvolutionMode::vi: return "vi";
        case EvolutionMode::rvi: return "rvi";
        case EvolutionMode::rvi_min: return "rvi-min";
    }
    return "?";
}

EvolutionMode parse_evolution_mode(const std::string& s) {
    if (s == "vi") return EvolutionMode::vi;
    if (s == "rvi") return EvolutionMode::rvi;
    if (s == "rvi-min") return EvolutionMode::rvi_min;
    throw ConfigError("unknown evolution mode '" + s + "' (expected vi, rvi or rvi-min)");
}

namespace {

void require_finite_update(const Field& f) {
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!std::isfinite(f[i])) throw NumericalError("non-finite update at node " + std::to_string(i));
    }
}

double anchor_value(const Field& phi, AnchorMode mode) {
    return mode == AnchorMode::point ? phi.at_anchor() : phi.min();
}

/// phi + dt (H(phi) - shift), where the caller supplies H's buffers.
void euler_update(const Field& phi, std::span<const double> ham, double shift, double dt, Field& out) {
    for (std::size_t i = 0; i < phi.size(); ++i) out[i] = phi[i] + dt * (ham[i] - shift);
}

}  // namespace

StepResult step_vi(const ControlledStencil& stencil, const Field& phibar, double rho, double dt) {
    require_same_grid(stencil.grid(), phibar.grid(), "step_vi");
    auto h = stencil.min_hamiltonian(phibar);
    StepResult out{Field(phibar.grid()), std::move(h.argmin)};
    euler_update(phibar, h.value.values(), rho, dt, out.field);
    require_finite_update(out.field);
    return out;
}

StepResult step_vi(const ControlProblem& problem, const GridSpec& grid, const Field& phibar, double rho, double dt) {
    return step_vi(ControlledStencil(problem, grid), phibar, rho, dt);
}

StepResult step_rvi(const ControlledStencil& stencil, const Field& phi, double dt, AnchorMode anchor) {
    require_same_grid(stencil.grid(), phi.grid(), "step_rvi");
    auto h = stencil.min_hamiltonian(phi);
    StepResult out{Field(phi.grid()), std::move(h.argmin)};
    euler_update(phi, h.value.values(), anchor_value(phi, anchor), dt, out.field);
    require_finite_update(out.field);
    return out;
}

StepResult step_rvi(const ControlProblem& problem, const GridSpec& grid, const Field& phi, double dt, AnchorMode anchor) {
    return step_rvi(ControlledStencil(problem, grid), phi, dt, anchor);
}

const Field& EvolutionTrajectory::snapshot_near(double t) const {
    if (snapshots.empty()) throw ConfigError("trajectory has no snapshots");
    std::size_t best = 0;
    for (std::size_t j = 1; j < times.size(); ++j) {
        if (std::abs(times[j] - t) < std::abs(times[best] - t)) best = j;
    }
    return snapshots[best];
}

namespace {

/// Step indices at which a quantity sampled every `every` time units is stored.
std::vector<std::size_t> cadence_steps(std::size_t steps, double dt, double every) {
    std::vector<std::size_t> ks{0};
    if (steps == 0) return ks;
    if (every > 0.0 && every <= dt) {
        for (std::size_t k = 1; k <= steps; ++k) ks.push_back(k);
        return ks;
    }
    if (every > 0.0) {
        const double horizon = static_cast<double>(steps) * dt;
        for (std::size_t j = 1;; ++j) {
            const double t = static_cast<double>(j) * every;
            if (t > horizon + 0.5 * dt) break;
            const auto k = static_cast<std::size_t>(std::llround(t / dt));
            if (k > ks.back() && k <= steps) ks.push_back(k);
        }
    }
    if (ks.back() != steps) ks.push_back(steps);
    return ks;
}

class ImplicitStepper {
public:
    explicit ImplicitStepper(const ControlledStencil& stencil) : stencil_(stencil) {}

    /// Solves (I - dt Q_v) next = phi + dt (r_v - shift) for the argmin policy v of phi.
    void step(const Field& phi, std::span<const std::size_t> policy, double shift, double dt, Field& next) {
        using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;
        const auto n = static_cast<Eigen::Index>(phi.size());
        if (!factored_ || cached_policy_.size() != policy.size() ||
            !std::equal(policy.begin(), policy.end(), cached_policy_.begin()) || dt != cached_dt_) {
            const auto g = stencil_.policy_generator(policy);
            ColMatrix id(n, n);
            id.setIdentity();
            ColMatrix a = id - dt * ColMatrix(g.q);
            lu_.compute(a);
            if (lu_.info() != Eigen::Success) throw SolverError("implicit Euler: factorization failed");
            cost_ = stencil_.policy_cost(policy);
            cached_policy_.assign(policy.begin(), policy.end());
            cached_dt_ = dt;
            factored_ = true;
        }
        Eigen::VectorXd rhs(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            rhs(i) = phi[ui] + dt * (cost_[ui] - shift);
        }
        const Eigen::VectorXd x = lu_.solve(rhs);
        for (Eigen::Index i = 0; i < n; ++i) next[static_cast<std::size_t>(i)] = x(i);
    }

private:
    const ControlledStencil& stencil_;
    Eigen::SparseLU<Eigen::SparseMatrix<double, Eigen::ColMajor>> lu_;
    Field cost_;
    std::vector<std::size_t> cached_policy_;
    double cached_dt_ = 0.0;
    bool factored_ = false;
};

}  // namespace

EvolutionTrajectory run(const ControlledStencil& stencil, const Field& phi0, const EvolutionConfig& config) {
    require_same_grid(stencil.grid(), phi0.grid(), "run");
    if (!phi0.all_finite()) throw ConfigError("initial field has non-finite values");
    if (config.mode == EvolutionMode::vi && !config.rho) throw ConfigError("VI mode requires rho");
    if (!(config.horizon >= 0.0)) throw ConfigError("horizon must be nonnegative");
    if (!(config.snapshot_every > 0.0)) throw ConfigError("snapshot cadence must be positive");

    const bool explicit_method = config.method == TimeMethod::explicit_euler;
    double dt = config.dt > 0.0 ? config.dt : stencil.stable_dt();
    if (explicit_method && dt * stencil.max_exit_rate() > 1.0) {
        std::ostringstream os;
        os << "dt = " << dt << " violates the explicit stability bound " << 1.0 / stencil.max_exit_rate();
        throw ConfigError(os.str());
    }
    std::size_t steps = 0;
    if (config.horizon > 0.0) {
        steps = static_cast<std::size_t>(std::ceil(config.horizon / dt - 1e-9));
        dt = config.horizon / static_cast<double>(steps);
    }

    EvolutionTrajectory traj;
    traj.mode = config.mode;
    traj.method = explicit_method ? "explicit" : "implicit";
    traj.dt = dt;
    traj.steps = steps;
    if (config.rho) {
        traj.rho = *config.rho;
        traj.has_rho = true;
    } else if (config.reference) {
        traj.rho = config.reference->rho;
        traj.has_rho = true;
    }
    traj.anchor_series.reserve(steps + 1);

    const auto snap_steps = cadence_steps(steps, dt, config.snapshot_every);
    const double pol_every = config.policy_every > 0.0 ? config.policy_every : config.snapshot_every;
    const auto pol_steps = config.store_policies ? cadence_steps(steps, dt, pol_every) : std::vector<std::size_t>{};
    std::size_t next_snap = 0;
    std::size_t next_pol = 0;

    const AnchorMode anchor = config.mode == EvolutionMode::rvi_min ? AnchorMode::min : AnchorMode::point;
    const double rho_ref = config.reference ? config.reference->rho : traj.rho;

    auto record_snapshot = [&](std::size_t k, const Field& phi) {
        traj.times.push_back(static_cast<double>(k) * dt);
        traj.snapshots.push_back(phi);
        SnapshotDiagnostics d;
        d.oscillation = config.oscillation_box ? oscillation(phi, *config.oscillation_box)
                                               : std::numeric_limits<double>::quiet_NaN();
        d.sup_error = config.reference
                          ? sup_error_on_compact(limit_comparable(phi, config.mode, rho_ref), *config.reference,
                                                 config.probe_radius)
                          : std::numeric_limits<double>::quiet_NaN();
        traj.diagnostics.push_back(d);
    };

    Field phi = phi0;
    Field next(phi0.grid());
    std::vector<double> ham(phi.size());
    std::vector<std::size_t> argmin(phi.size());
    ImplicitStepper implicit(stencil);

    traj.anchor_series.push_back(phi.at_anchor());
    for (std::size_t k = 0;; ++k) {
        if (next_snap < snap_steps.size() && snap_steps[next_snap] == k) {
            record_snapshot(k, phi);
            ++next_snap;
        }
        const bool want_policy = next_pol < pol_steps.size() && pol_steps[next_pol] == k;
        if (k == steps && !want_policy) break;

        stencil.min_hamiltonian(phi.values(), ham, argmin);
        if (want_policy) {
            traj.policy_times.push_back(static_cast<double>(k) * dt);
            traj.policies.push_back(argmin);
            ++next_pol;
        }
        if (k == steps) break;

        const double shift = config.mode == EvolutionMode::vi ? *config.rho : anchor_value(phi, anchor);
        if (explicit_method) {
            euler_update(phi, ham, shift, dt, next);
        } else {
            implicit.step(phi, argmin, shift, dt, next);
        }
        std::swap(phi, next);

        double peak = 0.0;
        bool finite = true;
        for (double v : phi.values()) {
            finite = finite && std::isfinite(v);
            peak = std::max(peak, std::abs(v));
        }
        traj.anchor_series.push_back(phi.at_anchor());
        if (!finite || peak > config.blowup) {
            traj.steps = k + 1;
            std::ostringstream os;
            os << "evolution unstable at t = " << static_cast<double>(k + 1) * dt << ": max |phi| = " << peak
               << (finite ? "" : " (non-finite)");
            throw InstabilityError(os.str(), std::move(traj));
        }
    }
    return traj;
}

namespace {

std::size_t step_of(const EvolutionTrajectory& traj, double t) {
    if (traj.dt <= 0.0) return 0;
    const auto k = static_cast<std::size_t>(std::llround(t / traj.dt));
    return std::min(k, traj.steps);
}

void require_dense(const EvolutionTrajectory& traj, const char* what) {
    if (traj.anchor_series.size() != traj.steps + 1) {
        throw ConfigError(std::string(what) + ": trajectory lacks a dense anchor series");
    }
}

}  // namespace

EvolutionTrajectory vi_from_rvi(const EvolutionTrajectory& traj, double rho) {
    require_dense(traj, "vi_from_rvi");
    if (traj.mode != EvolutionMode::rvi) throw ConfigError("vi_from_rvi: trajectory is not a point-anchored RVI run");

    const std::size_t n = traj.steps;
    std::vector<double> quad(n + 1, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        quad[k + 1] = quad[k] + 0.5 * traj.dt * (traj.anchor_series[k] + traj.anchor_series[k + 1]);
    }

    EvolutionTrajectory out = traj;
    out.mode = EvolutionMode::vi;
    out.rho = rho;
    out.has_rho = true;
    out.diagnostics.clear();
    for (std::size_t k = 0; k <= n; ++k) {
        out.anchor_series[k] = traj.anchor_series[k] - rho * traj.time_of_step(k) + quad[k];
    }
    for (std::size_t j = 0; j < out.snapshots.size(); ++j) {
        const auto k = step_of(traj, traj.times[j]);
        out.snapshots[j] += quad[k] - rho * traj.time_of_step(k);
    }
    return out;
}

EvolutionTrajectory rvi_from_vi(const EvolutionTrajectory& traj, double rho) {
    require_dense(traj, "rvi_from_vi");
    if (traj.mode != EvolutionMode::vi) throw ConfigError("rvi_from_vi: trajectory is not a VI run");

    const std::size_t n = traj.steps;
    const double dt = traj.dt;
    // I(t + dt) = e^{-dt} I(t) + int_0^dt e^{s - dt} (f0 + (f1 - f0) s / dt) ds
    const double decay = std::exp(-dt);
    const double w_const = -std::expm1(-dt);                    // 1 - e^{-dt}
    const double w_slope = dt > 0.0 ? (dt - w_const) / dt : 0;  // (dt - 1 + e^{-dt}) / dt
    std::vector<double> integral(n + 1, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double f0 = traj.anchor_series[k];
        const double f1 = traj.anchor_series[k + 1];
        integral[k + 1] = decay * integral[k] + f0 * w_const + (f1 - f0) * w_slope;
    }
    auto correction = [&](std::size_t k) { return -integral[k] - rho * std::expm1(-traj.time_of_step(k)); };

    EvolutionTrajectory out = traj;
    out.mode = EvolutionMode::rvi;
    out.rho = rho;
    out.has_rho = true;
    out.diagnostics.clear();
    for (std::size_t k = 0; k <= n; ++k) out.anchor_series[k] = traj.anchor_series[k] + correction(k);
    for (std::size_t j = 0; j < out.snapshots.size(); ++j) {
        out.snapshots[j] += correction(step_of(traj, traj.times[j]));
    }
    return out;
}

CouplingResiduals coupling_residuals(const Field& phi, const Field& phibar) {
    require_same_grid(phi.grid(), phibar.grid(), "coupling_residuals");
    CouplingResiduals out;
    double sum = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) sum += phi[i] - phibar[i];
    out.f_value = sum / static_cast<double>(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) {
        out.ident_residual = std::max(out.ident_residual, std::abs(phi[i] - phibar[i] - out.f_value));
    }
    return out;
}

}  // namespace rvi
