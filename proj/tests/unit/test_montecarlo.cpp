// SPDX-License-Identifier: MIT
#include <doctest.h>

#include <cmath>
#include <limits>

#include "rvi/error.hpp"
#include "rvi/montecarlo.hpp"
#include "support.hpp"

using namespace rvi;

namespace {

PolicySource minus_x() {
    return PolicySource::feedback([](const Vec2& x) { return Control{-x[0], 0.0}; });
}

PolicySource zero_control() {
    return PolicySource::feedback([](const Vec2&) { return Control{}; });
}

}  // namespace

TEST_SUITE("montecarlo") {

TEST_CASE("zero-noise path follows the linear ODE") {
    const auto p = preset("lqg1d");
    const auto g = GridSpec::centered(1, 4.0, 0.1);
    SimConfig c;
    c.x0 = {1.0, 0.0};
    c.horizon = 1.0;
    c.dt = 1e-4;
    c.zero_noise = true;
    const auto path = simulate_path(p, g, minus_x(), c);
    CHECK(path.states.back()[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-3));
    CHECK(path.times.size() == path.states.size());
    CHECK(path.controls.size() + 1 == path.states.size());
    CHECK_FALSE(path.clipped);
}

TEST_CASE("same seed gives bitwise-identical paths and reports") {
    const auto p = preset("lqg1d");
    const auto g = GridSpec::centered(1, 4.0, 0.1);
    SimConfig c;
    c.x0 = {0.5, 0.0};
    c.horizon = 2.0;
    const auto a = simulate_path(p, g, minus_x(), c, 3);
    const auto b = simulate_path(p, g, minus_x(), c, 3);
    REQUIRE(a.states.size() == b.states.size());
    for (std::size_t k = 0; k < a.states.size(); ++k) REQUIRE(a.states[k][0] == b.states[k][0]);
    const auto other = simulate_path(p, g, minus_x(), c, 4);
    CHECK(other.states.back()[0] != a.states.back()[0]);
    c.n_paths = 200;
    c.horizon = 5.0;
    c.burn_in = 1.0;
    const auto e1 = ergodic_cost_estimate(p, g, minus_x(), c);
    const auto e2 = ergodic_cost_estimate(p, g, minus_x(), c);
    CHECK(e1.mean == e2.mean);
    CHECK(e1.std_error == e2.std_error);
}

TEST_CASE("driftless increments average to zero") {
    const auto p = preset("lqg1d");
    const auto g = GridSpec::centered(1, 8.0, 0.1);
    SimConfig c;
    c.x0 = {0.5, 0.0};
    c.horizon = 1.0;
    c.n_paths = 10000;
    const auto x = Field::sample(g, [](const Vec2& y) { return y[0] - 0.5; });
    const auto r = terminal_expectation(p, g, zero_control(), x, c);
    CHECK(std::abs(r.mean) <= 3.0 * r.std_error);
    CHECK(r.clipped_paths <= r.n_paths);
}

TEST_CASE("ergodic cost of u = -x on lqg1d is 1") {
    // Euler-Maruyama's stationary variance is 1 / (2 - dt); dt = 0.002 keeps that bias below the error bar
    const auto p = preset("lqg1d");
    const auto g = GridSpec::centered(1, 6.0, 0.1);
    SimConfig c;
    c.horizon = 60.0;
    c.burn_in = 5.0;
    c.dt = 0.002;
    c.n_paths = 1000;
    const auto r = ergodic_cost_estimate(p, g, minus_x(), c);
    CHECK(std::abs(r.mean - 1.0) <= 3.0 * r.std_error);
    CHECK(r.std_error < 0.02);
    CHECK_FALSE(r.flagged);
}

TEST_CASE("constant cost is estimated exactly") {
    const auto p = test::constant_cost(1.5);
    const auto g = GridSpec::centered(1, 2.0, 0.1);
    SimConfig c;
    c.horizon = 10.0;
    c.burn_in = 2.0;
    c.n_paths = 50;
    const auto r = ergodic_cost_estimate(p, g, zero_control(), c);
    CHECK(r.mean == 1.5);
    CHECK(r.std_error == 0.0);
}

TEST_CASE("finite-horizon trivial cases") {
    const auto g = GridSpec::centered(1, 2.0, 0.1);
    const auto phi0 = Field::sample(g, [](const Vec2& x) { return x[0] * x[0]; });
    SimConfig c;
    c.x0 = {1.0, 0.0};
    c.horizon = 0.0;
    c.n_paths = 20;
    const auto r0 = finite_horizon_value(preset("lqg1d"), g, minus_x(), phi0, 1.0, c);
    CHECK(r0.mean == doctest::Approx(1.0));
    CHECK(r0.std_error == 0.0);
    c.horizon = 3.0;
    const auto r1 = finite_horizon_value(test::constant_cost(0.75), g, zero_control(), Field(g, 0.0), 0.75, c);
    CHECK(r1.mean == 0.0);
    CHECK(r1.std_error == 0.0);
}

TEST_CASE("clipping is counted and flagged") {
    const auto p = preset("lqg1d");
    const auto g = GridSpec::centered(1, 0.2, 0.1);
    SimConfig c;
    c.horizon = 2.0;
    c.burn_in = 0.5;
    c.n_paths = 100;
    const auto r = ergodic_cost_estimate(p, g, zero_control(), c);
    CHECK(r.clipped_paths == r.n_paths);
    CHECK(r.flagged);
    CHECK_FALSE(r.warning.empty());
}

TEST_CASE("non-finite states report the step") {
    auto p = preset("lqg1d");
    p.drift = [](const Vec2& x, const Control&) {
        return Vec2{x[0] > 0.5 ? std::numeric_limits<double>::infinity() : 1.0, 0.0};
    };
    const auto g = GridSpec::centered(1, 4.0, 0.1);
    SimConfig c;
    c.zero_noise = true;
    c.horizon = 2.0;
    c.dt = 0.1;
    try {
        simulate_path(p, g, zero_control(), c);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
}

TEST_CASE("config validation") {
    const auto p = preset("lqg1d");
    const auto g = GridSpec::centered(1, 1.0, 0.1);
    SimConfig c;
    c.dt = 0.0;
    CHECK_THROWS_AS(simulate_path(p, g, zero_control(), c), ConfigError);
    c.dt = 0.01;
    c.n_paths = 0;
    CHECK_THROWS_AS(ergodic_cost_estimate(p, g, zero_control(), c), ConfigError);
    c.n_paths = 1;
    c.horizon = 1.0;
    c.burn_in = 2.0;
    CHECK_THROWS_AS(ergodic_cost_estimate(p, g, zero_control(), c), ConfigError);
    CHECK_THROWS_AS(PolicySource::stationary(p, g, {0}), DimensionError);
}

TEST_CASE("time-reversed policies need dense VI snapshots") {
    const auto p = preset("lqg1d", {9, 2.0});
    const auto g = GridSpec::centered(1, 2.0, 0.25);
    const ControlledStencil st(p, g);
    EvolutionConfig ec;
    ec.mode = EvolutionMode::vi;
    ec.rho = 1.0;
    ec.horizon = 2.0;
    ec.snapshot_every = 1.0;
    ec.store_policies = true;
    ec.policy_every = 0.1;
    const auto vi = run(st, Field(g, 0.0), ec);
    CHECK_NOTHROW(PolicySource::time_reversed(p, vi, 2.0, 0.2));
    CHECK_THROWS_AS(PolicySource::time_reversed(p, vi, 2.0, 0.05), ConfigError);
    ec.mode = EvolutionMode::rvi;
    const auto rv = run(st, Field(g, 0.0), ec);
    CHECK_THROWS_AS(PolicySource::time_reversed(p, rv, 2.0, 0.2), ConfigError);
    const auto src = PolicySource::time_reversed(p, vi, 2.0, 0.2);
    // at s = 0 the control is v_T, at s = T it is v_0
    const Vec2 x{1.0, 0.0};
    CHECK(src(0.0, x)[0] == p.controls[vi.policies.back()[g.nearest_node(x)]][0]);
    CHECK(src(2.0, x)[0] == p.controls[vi.policies.front()[g.nearest_node(x)]][0]);
}

TEST_CASE("pairwise sum") {
    std::vector<double> v(1000, 0.1);
    CHECK(pairwise_sum(v) == doctest::Approx(100.0).epsilon(1e-14));
    CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
}

}
