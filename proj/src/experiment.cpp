// SPDX-License-Identifier: MIT
#include "rvi/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "rvi/diagnose.hpp"
#include "rvi/discretize.hpp"
#include "rvi/error.hpp"
#include "rvi/io.hpp"
#include "rvi/montecarlo.hpp"

#ifndef RVI_VERSION
#define RVI_VERSION "0.0.0"
#endif

namespace rvi {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(RunMode mode) {
    switch (mode) {
        case RunMode::vi: return "vi";
        case RunMode::rvi: return "rvi";
        case RunMode::rvi_min: return "rvi-min";
        case RunMode::pia: return "pia";
        case RunMode::mc_check: return "mc-check";
        case RunMode::full: return "full";
    }
    return "?";
}

RunMode parse_run_mode(const std::string& s) {
    for (auto m : {RunMode::vi, RunMode::rvi, RunMode::rvi_min, RunMode::pia, RunMode::mc_check, RunMode::full}) {
        if (to_string(m) == s) return m;
    }
    throw ConfigError("unknown mode '" + s + "' (expected vi, rvi, rvi-min, pia, mc-check or full)");
}

namespace {

double parse_number(const std::string& text, const std::string& what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size() || !std::isfinite(v)) throw ConfigError("bad number in " + what + ": '" + text + "'");
    return v;
}

}  // namespace

Phi0Spec Phi0Spec::parse(const std::string& s) {
    Phi0Spec p;
    const auto colon = s.find(':');
    const std::string head = s.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : s.substr(colon + 1);
    if (head == "zero" && colon == std::string::npos) {
        p.kind = Kind::zero;
    } else if (head == "vstar" && colon == std::string::npos) {
        p.kind = Kind::vstar;
    } else if (head == "constant" && colon != std::string::npos) {
        p.kind = Kind::constant;
        p.param = parse_number(arg, "phi0 spec");
    } else if (head == "quadratic" && colon != std::string::npos) {
        p.kind = Kind::quadratic;
        p.param = parse_number(arg, "phi0 spec");
    } else {
        throw ConfigError("bad phi0 spec '" + s + "' (expected zero, constant:c, quadratic:a or vstar)");
    }
    return p;
}

std::string Phi0Spec::str() const {
    switch (kind) {
        case Kind::zero: return "zero";
        case Kind::vstar: return "vstar";
        case Kind::constant: return "constant:" + io::format_double(param);
        case Kind::quadratic: return "quadratic:" + io::format_double(param);
    }
    return "?";
}

Field Phi0Spec::make(const GridSpec& grid, const Field* vstar) const {
    switch (kind) {
        case Kind::zero: return Field(grid, 0.0);
        case Kind::constant: return Field(grid, param);
        case Kind::quadratic: {
            const double a = param;
            return Field::sample(grid, [a](const Vec2& x) { return a * (x[0] * x[0] + x[1] * x[1]); });
        }
        case Kind::vstar:
            if (vstar == nullptr) throw ConfigError("phi0 = vstar needs a stationary solve");
            require_same_grid(vstar->grid(), grid, "phi0 vstar");
            return *vstar;
    }
    throw ConfigError("bad phi0 spec");
}

json ExperimentConfig::to_json() const {
    json j;
    j["problem"] = {{"preset", preset}, {"half_width", half_width}, {"h", h}, {"controls", controls}, {"u_max", u_max}};
    j["mode"] = rvi::to_string(mode);
    j["evolve"] = {{"T", T},
                   {"dt", dt},
                   {"snapshot_every", snapshot_every},
                   {"policy_every", policy_every},
                   {"phi0", phi0.str()},
                   {"method", method == TimeMethod::explicit_euler ? "explicit" : "implicit"}};
    j["solve"] = {{"tol", solve_tol}, {"max_iter", solve_max_iter}};
    j["mc"] = {{"paths", mc_paths}, {"T", mc_T},           {"burn_in", mc_burn_in}, {"dt", mc_dt},
               {"x0", {mc_x0[0], mc_x0[1]}}, {"fh_T", fh_T}, {"fh_x0", fh_x0}};
    j["diagnose"] = {{"radius", radius}, {"eps", eps}};
    j["seed"] = seed;
    j["out"] = out.string();
    return j;
}

json default_config_json() { return ExperimentConfig{}.to_json(); }

namespace {

void merge_into(json& base, const json& user, const std::string& prefix) {
    if (!user.is_object()) throw ConfigError("config" + (prefix.empty() ? "" : " key '" + prefix + "'") + " must be an object");
    for (const auto& [key, value] : user.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (!base.contains(key)) throw ConfigError("unknown config key '" + path + "'");
        if (base[key].is_object()) {
            merge_into(base[key], value, path);
        } else {
            base[key] = value;
        }
    }
}

template <typename T>
T get(const json& j, const char* section, const char* key) {
    const json& v = section ? j.at(section).at(key) : j.at(key);
    const std::string name = section ? std::string(section) + "." + key : std::string(key);
    try {
        if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
            if (v.is_number_float()) {
                const double d = v.get<double>();
                if (d < 0 || d != std::floor(d)) throw ConfigError(name + " must be a nonnegative integer");
                return static_cast<T>(d);
            }
            if (v.is_number_integer() && v.get<long long>() < 0) throw ConfigError(name + " must be nonnegative");
        }
        return v.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + name + "' has the wrong type");
    }
}

void require_positive(double v, const std::string& name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(name + " must be positive");
}

void require_nonnegative(double v, const std::string& name) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(name + " must be nonnegative");
}

ControlProblem build_problem(const ExperimentConfig& c) {
    PresetOptions opts;
    opts.control_points = c.controls;
    opts.control_bound = c.u_max;
    return preset(c.preset, opts);
}

}  // namespace

json merge_config(const json& user) {
    json base = default_config_json();
    if (!user.is_null()) merge_into(base, user, "");
    return base;
}

void apply_override(json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    json* node = &config;
    std::stringstream ss(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (!node->is_object() || !node->contains(parts[i])) throw ConfigError("unknown config key '" + key + "'");
        node = &(*node)[parts[i]];
    }
    if (node->is_object()) throw ConfigError("config key '" + key + "' is a section");
    // "--set problem.preset=42" should still be a string
    if (node->is_string() && !value.is_string()) value = text;
    *node = value;
}

ExperimentConfig parse_config(const json& raw) {
    const json j = merge_config(raw);
    ExperimentConfig c;
    c.preset = get<std::string>(j, "problem", "preset");
    c.half_width = get<double>(j, "problem", "half_width");
    c.h = get<double>(j, "problem", "h");
    c.controls = get<std::size_t>(j, "problem", "controls");
    c.u_max = get<double>(j, "problem", "u_max");
    c.mode = parse_run_mode(get<std::string>(j, nullptr, "mode"));
    c.T = get<double>(j, "evolve", "T");
    c.dt = get<double>(j, "evolve", "dt");
    c.snapshot_every = get<double>(j, "evolve", "snapshot_every");
    c.policy_every = get<double>(j, "evolve", "policy_every");
    c.phi0 = Phi0Spec::parse(get<std::string>(j, "evolve", "phi0"));
    const auto method = get<std::string>(j, "evolve", "method");
    if (method == "explicit") {
        c.method = TimeMethod::explicit_euler;
    } else if (method == "implicit") {
        c.method = TimeMethod::implicit_euler;
    } else {
        throw ConfigError("evolve.method must be explicit or implicit, got '" + method + "'");
    }
    c.solve_tol = get<double>(j, "solve", "tol");
    c.solve_max_iter = get<std::size_t>(j, "solve", "max_iter");
    c.mc_paths = get<std::size_t>(j, "mc", "paths");
    c.mc_T = get<double>(j, "mc", "T");
    c.mc_burn_in = get<double>(j, "mc", "burn_in");
    c.mc_dt = get<double>(j, "mc", "dt");
    const json& x0 = j.at("mc").at("x0");
    if (x0.is_number()) {
        c.mc_x0 = {x0.get<double>(), 0.0};
    } else if (x0.is_array() && x0.size() >= 1 && x0.size() <= 2) {
        try {
            for (std::size_t i = 0; i < x0.size(); ++i) c.mc_x0[i] = x0[i].get<double>();
        } catch (const json::exception&) {
            throw ConfigError("mc.x0 must hold numbers");
        }
    } else {
        throw ConfigError("mc.x0 must be a number or an array of one or two numbers");
    }
    c.fh_T = get<double>(j, "mc", "fh_T");
    c.fh_x0 = get<double>(j, "mc", "fh_x0");
    c.radius = get<double>(j, "diagnose", "radius");
    c.eps = get<double>(j, "diagnose", "eps");
    c.seed = get<std::uint64_t>(j, nullptr, "seed");
    c.out = get<std::string>(j, nullptr, "out");

    require_positive(c.half_width, "problem.half_width");
    require_positive(c.h, "problem.h");
    require_nonnegative(c.u_max, "problem.u_max");
    require_positive(c.T, "evolve.T");
    require_nonnegative(c.dt, "evolve.dt");
    require_positive(c.snapshot_every, "evolve.snapshot_every");
    require_positive(c.policy_every, "evolve.policy_every");
    require_positive(c.solve_tol, "solve.tol");
    if (c.solve_max_iter == 0) throw ConfigError("solve.max_iter must be positive");
    if (c.mc_paths == 0) throw ConfigError("mc.paths must be positive");
    require_positive(c.mc_T, "mc.T");
    require_nonnegative(c.mc_burn_in, "mc.burn_in");
    if (c.mc_burn_in >= c.mc_T) throw ConfigError("mc.burn_in must be shorter than mc.T");
    require_positive(c.mc_dt, "mc.dt");
    require_positive(c.fh_T, "mc.fh_T");
    require_nonnegative(c.radius, "diagnose.radius");
    require_nonnegative(c.eps, "diagnose.eps");
    if (c.out.empty()) throw ConfigError("out must name a directory");

    const auto problem = build_problem(c);
    const auto grid = GridSpec::centered(problem.dim, c.half_width, c.h);
    if (c.radius > c.half_width) throw ConfigError("diagnose.radius exceeds the grid box");
    if (std::abs(c.fh_x0) > c.half_width) throw ConfigError("mc.fh_x0 lies outside the grid box");
    for (int i = 0; i < problem.dim; ++i) {
        if (std::abs(c.mc_x0[i]) > c.half_width) throw ConfigError("mc.x0 lies outside the grid box");
    }
    validate_on_grid(problem, grid);
    return c;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// State shared by the phases of one run.
struct Run {
    Run(const ExperimentConfig& c, ControlProblem p, GridSpec g) : cfg(c), problem(std::move(p)), grid(std::move(g)) {}

    const ExperimentConfig& cfg;
    ControlProblem problem;
    GridSpec grid;
    std::vector<fs::path> files;
    json timings = json::array();
    json summary = json::object();
    json failure = nullptr;
    int exit_code = 0;

    std::optional<ControlledStencil> stencil;
    std::optional<SolveReport> solve;
    std::optional<SolveReport> target;
    std::optional<EvolutionTrajectory> traj;
    std::optional<EvolutionTrajectory> vi;

    fs::path file(const std::string& name) {
        const fs::path p = cfg.out / name;
        files.push_back(p);
        return p;
    }

    /// Runs one phase; returns false after recording a failure.
    bool phase(const std::string& name, const std::function<void()>& body) {
        if (exit_code != 0) return false;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            body();
        } catch (const ConfigError& e) {
            fail(name, "config", e.what(), 2);
        } catch (const std::exception& e) {
            fail(name, "numerical", e.what(), 1);
        }
        timings.push_back({{"phase", name}, {"seconds", seconds_since(t0)}});
        return exit_code == 0;
    }

    void fail(const std::string& phase, const std::string& kind, const std::string& message, int code) {
        failure = {{"phase", phase}, {"kind", kind}, {"message", message}};
        exit_code = code;
    }
};

void phase_solve(Run& r) {
    r.stencil.emplace(r.problem, r.grid);
    PolicyIterationOptions opts;
    opts.tol = r.cfg.solve_tol;
    opts.max_iter = r.cfg.solve_max_iter;
    r.solve = policy_iteration(*r.stencil, zero_drift_policy(*r.stencil), opts);
    io::write_json(r.file("solve_report.json"), io::to_json(*r.solve));
    io::write_field_csv(r.file("value.csv"), r.solve->value);
    io::write_policy_csv(r.file("policy.csv"), r.grid, r.solve->policy, r.problem.controls);
    r.summary["rho"] = r.solve->rho;
    r.summary["pia_iterations"] = r.solve->history.size();
    if (!r.solve->converged) throw SolverError("policy iteration did not converge in " +
                                               std::to_string(r.cfg.solve_max_iter) + " iterations");
    if (auto exact = closed_form_report(r.problem, r.grid)) {
        r.target = std::move(exact);
    } else {
        r.target = r.solve;
    }
    r.summary["diagnostics_target"] = r.target->source;
}

void phase_evolve(Run& r, EvolutionMode mode) {
    const Field phi0 = r.cfg.phi0.make(r.grid, &r.solve->value);
    r.summary["phi0_sup"] = std::max(std::abs(phi0.min()), std::abs(phi0.max()));
    EvolutionConfig ec;
    ec.mode = mode;
    if (mode == EvolutionMode::vi) ec.rho = r.solve->rho;
    ec.horizon = r.cfg.T;
    ec.dt = r.cfg.dt;
    ec.snapshot_every = r.cfg.snapshot_every;
    ec.policy_every = r.cfg.policy_every;
    ec.store_policies = r.cfg.mode == RunMode::full || mode == EvolutionMode::vi;
    ec.method = r.cfg.method;
    ec.oscillation_box = default_b0_box(r.problem, r.grid, r.solve->rho);
    ec.reference = &*r.target;
    ec.probe_radius = r.cfg.radius;
    const std::string stem = "trajectory";
    try {
        r.traj = run(*r.stencil, phi0, ec);
    } catch (const InstabilityError& e) {
        for (const auto& p : io::write_trajectory(r.cfg.out, stem, e.partial())) r.files.push_back(p);
        throw;
    }
    for (const auto& p : io::write_trajectory(r.cfg.out, stem, *r.traj)) r.files.push_back(p);
    r.summary["dt"] = r.traj->dt;
    r.summary["steps"] = r.traj->steps;
    if (mode == EvolutionMode::vi) r.vi = r.traj;
}

void phase_coupling(Run& r) {
    const double rho = r.solve->rho;
    r.vi = vi_from_rvi(*r.traj, rho);
    const auto back = rvi_from_vi(*r.vi, rho);
    auto out = std::ofstream(r.file("coupling.csv"), std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write coupling.csv");
    out << "time,ident_residual,f_value,roundtrip_residual\n";
    double worst_ident = 0.0;
    double worst_round = 0.0;
    for (std::size_t j = 0; j < r.traj->snapshots.size(); ++j) {
        const auto c = coupling_residuals(r.traj->snapshots[j], r.vi->snapshots[j]);
        const Field diff = back.snapshots[j] - r.traj->snapshots[j];
        const double round = std::max(std::abs(diff.min()), std::abs(diff.max()));
        worst_ident = std::max(worst_ident, c.ident_residual);
        worst_round = std::max(worst_round, round);
        out << io::format_double(r.traj->times[j]) << ',' << io::format_double(c.ident_residual) << ','
            << io::format_double(c.f_value) << ',' << io::format_double(round) << '\n';
    }
    r.summary["coupling_ident_residual_max"] = worst_ident;
    r.summary["coupling_roundtrip_residual_max"] = worst_round;
}

void phase_montecarlo(Run& r) {
    SimConfig sc;
    sc.x0 = r.cfg.mc_x0;
    sc.horizon = r.cfg.mc_T;
    sc.dt = r.cfg.mc_dt;
    sc.n_paths = r.cfg.mc_paths;
    sc.seed = r.cfg.seed;
    sc.burn_in = r.cfg.mc_burn_in;
    const auto policy = PolicySource::stationary(r.problem, r.grid, r.solve->policy);
    const auto erg = ergodic_cost_estimate(r.problem, r.grid, policy, sc);
    json report;
    report["ergodic"] = io::to_json(erg);
    report["ergodic"]["rho_pia"] = r.solve->rho;
    report["ergodic"]["within_3se"] = std::abs(erg.mean - r.solve->rho) <= 3.0 * erg.std_error;
    // rho_pia carries the O(h) grid bias; the simulation does not
    if (r.problem.exact) {
        report["ergodic"]["rho_exact"] = r.problem.exact->rho;
        report["ergodic"]["within_3se_exact"] = std::abs(erg.mean - r.problem.exact->rho) <= 3.0 * erg.std_error;
    }

    if (r.vi && r.cfg.fh_T <= r.cfg.T) {
        SimConfig fc = sc;
        fc.x0 = {r.cfg.fh_x0, 0.0};
        fc.horizon = r.cfg.fh_T;
        fc.burn_in = 0.0;
        const double max_gap = 1.5 * r.cfg.policy_every + r.vi->dt;
        const auto vt = PolicySource::time_reversed(r.problem, *r.vi, r.cfg.fh_T, max_gap);
        const Field phi0 = r.cfg.phi0.make(r.grid, &r.solve->value);
        const auto fh = finite_horizon_value(r.problem, r.grid, vt, phi0, r.solve->rho, fc);
        const Field& snap = r.vi->snapshot_near(r.cfg.fh_T);
        std::size_t j = 0;
        while (&r.vi->snapshots[j] != &snap) ++j;
        const double grid_value = snap.interpolate(fc.x0);
        report["finite_horizon"] = io::to_json(fh);
        report["finite_horizon"]["T"] = r.cfg.fh_T;
        report["finite_horizon"]["x0"] = r.cfg.fh_x0;
        report["finite_horizon"]["grid_value"] = grid_value;
        report["finite_horizon"]["grid_time"] = r.vi->times[j];
        report["finite_horizon"]["within_tolerance"] =
            std::abs(fh.mean - grid_value) <= 3.0 * fh.std_error + 0.05;
    }
    io::write_json(r.file("mc_report.json"), report);
    r.summary["mc_ergodic_mean"] = erg.mean;
    r.summary["mc_ergodic_std_error"] = erg.std_error;
}

void phase_diagnose(Run& r) {
    const double rho = r.solve->rho;
    const Box b0 = default_b0_box(r.problem, r.grid, rho);
    const auto series = diagnostics_series(*r.traj, *r.target, *r.solve, b0, r.cfg.radius);
    io::write_diagnostics_csv(r.file("diagnostics.csv"), series);
    r.summary["final_sup_error"] = series.empty() ? 0.0 : series.back().sup_error_on_compact;
    r.summary["probe_radius"] = r.cfg.radius;
    if (r.vi) {
        const Field phi0 = r.cfg.phi0.make(r.grid, &r.solve->value);
        const double osc0 = phi0.max() - phi0.min();
        const double eps = r.cfg.eps > 0.0 ? r.cfg.eps : 10.0 * r.vi->dt + 2.0 * r.cfg.solve_tol;
        const auto drift = anchor_drift_bounds(*r.vi, rho, osc0, eps);
        const auto growth = weighted_growth_check(*r.vi, r.solve->value, rho);
        r.summary["anchor_drift_violations"] = drift.violations.size();
        r.summary["anchor_drift_pairs"] = drift.pairs_checked;
        r.summary["weighted_growth_holds"] = growth.holds;
    }
    if (r.traj) {
        const auto band = anchor_drift_bounds(*r.traj, rho, 0.0, 0.0);
        r.summary["anchor_band"] = {band.anchor_min, band.anchor_max};
    }
}

json inventory(const std::vector<fs::path>& files, const fs::path& root) {
    json inv = json::array();
    for (const auto& p : files) {
        if (!fs::exists(p)) continue;
        inv.push_back({{"path", fs::relative(p, root).generic_string()},
                       {"bytes", fs::file_size(p)},
                       {"sha256", io::sha256_file(p)}});
    }
    return inv;
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& cfg) {
    // everything that can be rejected is rejected before the filesystem is touched
    parse_config(cfg.to_json());

    auto problem = build_problem(cfg);
    const auto grid = GridSpec::centered(problem.dim, cfg.half_width, cfg.h);
    Run r(cfg, std::move(problem), grid);
    const auto started = std::chrono::system_clock::now();

    fs::create_directories(cfg.out);
    const fs::path manifest_path = cfg.out / "manifest.json";
    fs::remove(manifest_path);

    const auto mode = cfg.mode;
    r.phase("solve", [&] { phase_solve(r); });
    switch (mode) {
        case RunMode::pia: break;
        case RunMode::vi:
        case RunMode::rvi:
        case RunMode::rvi_min: {
            const auto em = mode == RunMode::vi ? EvolutionMode::vi
                                                : (mode == RunMode::rvi ? EvolutionMode::rvi : EvolutionMode::rvi_min);
            r.phase("evolve", [&] { phase_evolve(r, em); });
            r.phase("diagnose", [&] { phase_diagnose(r); });
            break;
        }
        case RunMode::mc_check: r.phase("montecarlo", [&] { phase_montecarlo(r); }); break;
        case RunMode::full:
            r.phase("evolve", [&] { phase_evolve(r, EvolutionMode::rvi); });
            r.phase("coupling", [&] { phase_coupling(r); });
            r.phase("montecarlo", [&] { phase_montecarlo(r); });
            r.phase("diagnose", [&] { phase_diagnose(r); });
            break;
    }

    RunManifest m;
    m.exit_code = r.exit_code;
    m.path = manifest_path;
    json& d = m.data;
    d["software"] = {{"name", "rvi"}, {"version", RVI_VERSION}};
    d["config"] = cfg.to_json();
    d["status"] = r.exit_code == 0 ? "ok" : "failed";
    d["exit_code"] = r.exit_code;
    d["failure"] = r.failure;
    d["started_unix"] = std::chrono::duration_cast<std::chrono::seconds>(started.time_since_epoch()).count();
    d["timings"] = r.timings;
    d["summary"] = r.summary;
    d["files"] = inventory(r.files, cfg.out);

    const fs::path tmp = cfg.out / "manifest.json.tmp";
    io::write_json(tmp, d);
    fs::rename(tmp, manifest_path);
    return m;
}

namespace {

fs::path diagnostics_path(const json& manifest, const fs::path& manifest_path) {
    for (const auto& f : manifest.at("files")) {
        const auto p = f.at("path").get<std::string>();
        if (fs::path(p).filename() == "diagnostics.csv") return manifest_path.parent_path() / p;
    }
    throw ConfigError(manifest_path.string() + " lists no diagnostics series");
}

}  // namespace

Comparison compare_runs(const fs::path& manifest_a, const fs::path& manifest_b, const fs::path& out_csv) {
    const json a = io::read_json(manifest_a);
    const json b = io::read_json(manifest_b);
    json ca;
    json cb;
    try {
        ca = a.at("config");
        cb = b.at("config");
        if (ca.at("problem").at("preset") != cb.at("problem").at("preset")) {
            throw ConfigError("runs use different presets: " + ca["problem"]["preset"].get<std::string>() + " vs " +
                              cb["problem"]["preset"].get<std::string>());
        }
        if (ca.at("diagnose").at("radius") != cb.at("diagnose").at("radius")) {
            throw ConfigError("runs use different probe boxes");
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed manifest: ") + e.what());
    }
    const auto da = io::read_diagnostics_csv(diagnostics_path(a, manifest_a));
    const auto db = io::read_diagnostics_csv(diagnostics_path(b, manifest_b));

    Comparison cmp;
    std::size_t jb = 0;
    for (const auto& ra : da) {
        const double tol = 1e-9 * std::max(1.0, std::abs(ra.time));
        while (jb < db.size() && db[jb].time < ra.time - tol) ++jb;
        if (jb == db.size()) break;
        if (std::abs(db[jb].time - ra.time) > tol) continue;
        const auto& rb = db[jb];
        cmp.rows.push_back({ra.time, ra.sup_error_on_compact, rb.sup_error_on_compact,
                            std::abs(ra.sup_error_on_compact - rb.sup_error_on_compact)});
    }
    if (cmp.rows.empty()) throw ConfigError("diagnostics series share no sampled times");
    cmp.final_a = cmp.rows.back().sup_error_a;
    cmp.final_b = cmp.rows.back().sup_error_b;
    cmp.ratio = cmp.final_b != 0.0 ? cmp.final_a / cmp.final_b : std::numeric_limits<double>::quiet_NaN();

    if (!out_csv.empty()) {
        if (out_csv.has_parent_path()) fs::create_directories(out_csv.parent_path());
        {
            std::ofstream out(out_csv, std::ios::binary | std::ios::trunc);
            if (!out) throw Error("cannot write " + out_csv.string());
            out << "time,sup_error_a,sup_error_b,abs_difference\n";
            for (const auto& row : cmp.rows) {
                out << io::format_double(row.time) << ',' << io::format_double(row.sup_error_a) << ','
                    << io::format_double(row.sup_error_b) << ',' << io::format_double(row.difference) << '\n';
            }
        }
        fs::path fin = out_csv;
        fin.replace_filename(out_csv.stem().string() + "_final.csv");
        std::ofstream out(fin, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + fin.string());
        out << "time,final_sup_error_a,final_sup_error_b,ratio\n"
            << io::format_double(cmp.rows.back().time) << ',' << io::format_double(cmp.final_a) << ','
            << io::format_double(cmp.final_b) << ',' << io::format_double(cmp.ratio) << '\n';
    }
    return cmp;
}

}  // namespace rvi
