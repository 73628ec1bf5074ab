// SPDX-License-Identifier: MIT
// Small hand-built problems shared by the unit suites.
#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "rvi/grid.hpp"
#include "rvi/model.hpp"

namespace rvi::test {

/// 1D, a = diff, b = u, cost supplied.
inline ControlProblem drift_is_control(double diff, std::vector<double> controls,
                                       std::function<double(const Vec2&, const Control&)> cost) {
    ControlProblem p;
    p.name = "test-1d";
    p.dim = 1;
    p.drift = [](const Vec2&, const Control& u) { return Vec2{u[0], 0.0}; };
    p.diffusion = [diff](const Vec2&) {
        Mat2 a{};
        a[0][0] = diff;
        return a;
    };
    p.cost = std::move(cost);
    std::vector<Control> cs;
    for (double u : controls) cs.push_back({u, 0.0});
    p.controls = ControlSet(1, cs);
    return p;
}

inline ControlProblem constant_cost(double c, std::vector<double> controls = {-1.0, 0.0, 1.0}) {
    return drift_is_control(0.5, std::move(controls), [c](const Vec2&, const Control&) { return c; });
}

/// Values are multiples of 2^-20 so that adding small dyadic constants is exact.
inline Field dyadic_field(const GridSpec& grid, std::mt19937_64& rng, double scale = 4.0) {
    std::uniform_int_distribution<long> dist(-static_cast<long>(scale * (1 << 20)), static_cast<long>(scale * (1 << 20)));
    Field f(grid);
    for (std::size_t n = 0; n < grid.size(); ++n) f[n] = std::ldexp(static_cast<double>(dist(rng)), -20);
    return f;
}

inline double sup_abs(const Field& f) { return std::max(std::abs(f.min()), std::abs(f.max())); }

inline std::filesystem::path scratch(const std::string& name) {
    const auto p = std::filesystem::path(RVI_TEST_TMP) / name;
    std::filesystem::remove_all(p);
    return p;
}

}  // namespace rvi::test
