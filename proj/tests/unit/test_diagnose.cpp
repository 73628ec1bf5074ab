// SPDX-License-Identifier: MIT
#include <doctest.h>

#include <cmath>

#include "rvi/diagnose.hpp"
#include "rvi/error.hpp"
#include "support.hpp"

using namespace rvi;

namespace {

SolveReport quadratic_report(const GridSpec& g) {
    SolveReport r;
    r.grid = g;
    r.rho = 1.0;
    r.value = Field::sample(g, [](const Vec2& x) { return 1.0 + x[0] * x[0]; });
    r.policy.assign(g.size(), 0);
    return r;
}

EvolutionTrajectory series(const GridSpec& g, const std::vector<double>& anchors, double dt) {
    EvolutionTrajectory t;
    t.mode = EvolutionMode::vi;
    t.dt = dt;
    t.steps = anchors.size() - 1;
    t.anchor_series = anchors;
    t.times = {0.0};
    t.snapshots = {Field(g, anchors[0])};
    return t;
}

}  // namespace

TEST_SUITE("diagnose") {

TEST_CASE("sup error against the stationary target") {
    const auto g = GridSpec::centered(1, 2.0, 0.25);
    const auto rep = quadratic_report(g);
    const Field target = rep.value - rep.value.at_anchor() + rep.rho;
    CHECK(sup_error_on_compact(target, rep, 1.0) == 0.0);
    CHECK(sup_error_on_compact(target + 0.3, rep, 1.0) == doctest::Approx(0.3));
    CHECK_THROWS_AS(sup_error_on_compact(target, rep, 3.0), ConfigError);
    Field bumped = target;
    bumped[g.nearest_node({1.5, 0})] += 1.0;
    CHECK(sup_error_on_compact(bumped, rep, 1.0) == 0.0);
    CHECK(sup_error_on_compact(bumped, rep, 1.5) == doctest::Approx(1.0));
}

TEST_CASE("sup error grows with the radius") {
    const auto g = GridSpec::centered(1, 2.0, 0.125);
    const auto rep = quadratic_report(g);
    const Field phi = Field::sample(g, [](const Vec2& x) { return std::sin(3.0 * x[0]); });
    double prev = 0.0;
    for (double r = 0.0; r <= 2.0; r += 0.125) {
        const double e = sup_error_on_compact(phi, rep, r);
        CHECK(e >= prev);
        prev = e;
    }
}

TEST_CASE("oscillation") {
    const auto g = GridSpec::centered(1, 2.0, 0.25);
    const Box unit = Box::centered(1, 1.0);
    CHECK(oscillation(Field(g, 4.0), unit) == 0.0);
    const auto sq = Field::sample(g, [](const Vec2& x) { return x[0] * x[0]; });
    CHECK(oscillation(sq, unit) == doctest::Approx(1.0));
    CHECK(oscillation(sq + 7.5, unit) == doctest::Approx(oscillation(sq, unit)));
    CHECK_THROWS_AS(oscillation(sq, Box::centered(1, 5.0)), ConfigError);
}

TEST_CASE("B0 box wraps the level set with one cell") {
    const auto g = GridSpec::centered(1, 4.0, 0.02);
    const Box b = default_b0_box(preset("lqg1d"), g, 1.0);
    CHECK(b.lower[0] == doctest::Approx(-1.02));
    CHECK(b.upper[0] == doctest::Approx(1.02));
}

TEST_CASE("limit-comparable field") {
    const auto g = GridSpec::centered(1, 1.0, 0.5);
    const auto f = Field::sample(g, [](const Vec2& x) { return x[0] + 3.0; });
    CHECK(limit_comparable(f, EvolutionMode::rvi, 1.0)[0] == f[0]);
    CHECK(limit_comparable(f, EvolutionMode::vi, 1.0).at_anchor() == 1.0);
}

TEST_CASE("anchor drift: stationary series never violates") {
    const auto g = GridSpec::centered(1, 1.0, 0.5);
    const auto t = series(g, std::vector<double>(101, 2.0), 0.1);
    const auto r = anchor_drift_bounds(t, 0.0, 0.0, 0.0);
    CHECK(r.violations.empty());
    CHECK(r.pairs_checked == 101 * 100 / 2);
    CHECK(r.finite);
}

TEST_CASE("anchor drift: an injected spike flags exactly its pairs") {
    const auto g = GridSpec::centered(1, 1.0, 0.5);
    std::vector<double> a(21, 0.0);
    a[7] = 10.0;
    const auto r = anchor_drift_bounds(series(g, a, 0.1), 1.0, 0.0, 0.0);
    // a drop of 10 from step 7 to every later step; bound rho (t - s) <= 1.3
    CHECK(r.violations.size() == 13);
    for (const auto& v : r.violations) CHECK(v.t_early == doctest::Approx(0.7));
    CHECK(r.anchor_max == 10.0);
}

TEST_CASE("weighted growth bound on a VI run") {
    const auto p = preset("lqg1d", {9, 2.0});
    const auto g = GridSpec::centered(1, 2.0, 0.25);
    const ControlledStencil st(p, g);
    const auto rep = policy_iteration(st, zero_drift_policy(st));
    EvolutionConfig c;
    c.mode = EvolutionMode::vi;
    c.rho = rep.rho;
    c.horizon = 5.0;
    c.snapshot_every = 0.5;
    const auto t = run(st, Field(g, 3.0), c);
    const auto chk = weighted_growth_check(t, rep.value, rep.rho);
    CHECK(chk.holds);
    CHECK(chk.lhs.size() == t.snapshots.size());
    const auto rows = diagnostics_series(t, rep, rep, Box::centered(1, 1.0), 1.0);
    CHECK(rows.size() == t.snapshots.size());
    CHECK(std::isfinite(rows.back().mu_average));
}

}
