// SPDX-License-Identifier: MIT
#include <optional>
#include <string>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rvi/error.hpp"
#include "rvi/experiment.hpp"
#include "rvi/io.hpp"

namespace py = pybind11;
using namespace rvi;

namespace {

struct Setup {
    ControlProblem problem;
    GridSpec grid;
};

Setup make_setup(const std::string& name, double h, double half_width, std::size_t controls) {
    auto p = preset(name, {controls, 0.0});
    auto g = GridSpec::centered(p.dim, half_width, h);
    validate_on_grid(p, g);
    return {std::move(p), std::move(g)};
}

py::array_t<double> coordinates(const GridSpec& g) {
    py::array_t<double> out({static_cast<py::ssize_t>(g.size()), static_cast<py::ssize_t>(g.dim())});
    auto a = out.mutable_unchecked<2>();
    for (std::size_t n = 0; n < g.size(); ++n) {
        const Vec2 x = g.coordinate(n);
        for (int i = 0; i < g.dim(); ++i) a(n, i) = x[i];
    }
    return out;
}

py::array_t<double> values(const Field& f) {
    return py::array_t<double>(static_cast<py::ssize_t>(f.size()), f.values().data());
}

py::dict solve(const std::string& name, double h, double half_width, std::size_t controls) {
    const auto s = make_setup(name, h, half_width, controls);
    SolveReport rep;
    {
        py::gil_scoped_release release;
        const ControlledStencil st(s.problem, s.grid);
        rep = policy_iteration(st, zero_drift_policy(st));
    }
    py::dict d;
    d["rho"] = rep.rho;
    d["converged"] = rep.converged;
    d["iterations"] = rep.history.size();
    d["hjb_residual"] = rep.hjb_residual;
    d["x"] = coordinates(s.grid);
    d["value"] = values(rep.value);
    d["policy"] = rep.policy;
    return d;
}

py::dict evolve(const std::string& name, double h, double half_width, std::size_t controls, const std::string& mode,
                double T, double dt, double snapshot_every, double phi0, std::optional<double> rho) {
    const auto s = make_setup(name, h, half_width, controls);
    EvolutionConfig c;
    c.mode = parse_evolution_mode(mode);
    c.rho = rho;
    c.horizon = T;
    c.dt = dt;
    c.snapshot_every = snapshot_every;
    EvolutionTrajectory traj;
    {
        py::gil_scoped_release release;
        const ControlledStencil st(s.problem, s.grid);
        traj = run(st, Field(s.grid, phi0), c);
    }
    py::array_t<double> snaps({static_cast<py::ssize_t>(traj.snapshots.size()), static_cast<py::ssize_t>(s.grid.size())});
    auto a = snaps.mutable_unchecked<2>();
    for (std::size_t j = 0; j < traj.snapshots.size(); ++j) {
        for (std::size_t n = 0; n < s.grid.size(); ++n) a(j, n) = traj.snapshots[j][n];
    }
    py::dict d;
    d["dt"] = traj.dt;
    d["steps"] = traj.steps;
    d["times"] = traj.times;
    d["x"] = coordinates(s.grid);
    d["snapshots"] = snaps;
    d["anchor_series"] = traj.anchor_series;
    return d;
}

std::string run_json(const std::string& config, const std::vector<std::string>& overrides) {
    auto j = merge_config(nlohmann::json::parse(config));
    for (const auto& o : overrides) apply_override(j, o);
    const auto cfg = parse_config(j);
    RunManifest m;
    {
        py::gil_scoped_release release;
        m = run_experiment(cfg);
    }
    return m.data.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Relative value iteration for ergodic control on grids.";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

    m.attr("__version__") = RVI_VERSION;
    m.def("presets", [] { return preset_names(); });
    m.def("solve", &solve, py::arg("preset") = "lqg1d", py::arg("h") = 0.02, py::arg("half_width") = 4.0,
          py::arg("controls") = 0, "Policy iteration on the preset; returns rho, value and policy.");
    m.def("evolve", &evolve, py::arg("preset") = "lqg1d", py::arg("h") = 0.02, py::arg("half_width") = 4.0,
          py::arg("controls") = 0, py::arg("mode") = "rvi", py::arg("T") = 1.0, py::arg("dt") = 0.0,
          py::arg("snapshot_every") = 0.5, py::arg("phi0") = 0.0, py::arg("rho") = py::none());
    m.def("run_json", &run_json, py::arg("config"), py::arg("overrides") = std::vector<std::string>{});
}
