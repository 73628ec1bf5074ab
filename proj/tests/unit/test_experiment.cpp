// SPDX-License-Identifier: MIT
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "rvi/error.hpp"
#include "rvi/experiment.hpp"
#include "rvi/io.hpp"
#include "support.hpp"

using namespace rvi;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json quick(const fs::path& out, const std::string& mode) {
    json j = merge_config({});
    apply_override(j, "problem.h=0.1");
    apply_override(j, "problem.controls=41");
    apply_override(j, "mode=" + mode);
    apply_override(j, "evolve.T=3");
    apply_override(j, "mc.paths=200");
    apply_override(j, "mc.T=12");
    apply_override(j, "mc.burn_in=2");
    apply_override(j, "mc.fh_T=2");
    j["out"] = out.string();
    return j;
}

std::set<std::string> listed(const RunManifest& m) {
    std::set<std::string> s;
    for (const auto& f : m.data["files"]) s.insert(f["path"].get<std::string>());
    return s;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("phi0 specs") {
    CHECK(Phi0Spec::parse("zero").kind == Phi0Spec::Kind::zero);
    CHECK(Phi0Spec::parse("constant:5").param == 5.0);
    CHECK(Phi0Spec::parse("quadratic:2").kind == Phi0Spec::Kind::quadratic);
    CHECK(Phi0Spec::parse("vstar").kind == Phi0Spec::Kind::vstar);
    for (const char* bad : {"", "constant", "constant:", "constant:x", "quadratic:1e999", "zero:1", "cubic:1"}) {
        CHECK_THROWS_AS(Phi0Spec::parse(bad), ConfigError);
    }
    const auto g = GridSpec::centered(1, 1.0, 0.5);
    CHECK(Phi0Spec::parse("quadratic:2").make(g, nullptr)[0] == 2.0);
    CHECK_THROWS_AS(Phi0Spec::parse("vstar").make(g, nullptr), ConfigError);
}

TEST_CASE("config parsing and overrides") {
    const auto c = parse_config(json::object());
    CHECK(c.preset == "lqg1d");
    CHECK(c.mode == RunMode::full);
    json j = merge_config({{"evolve", {{"T", 12.5}}}});
    apply_override(j, "evolve.phi0=constant:5");
    apply_override(j, "seed=7");
    apply_override(j, "mc.x0=[0.5]");
    const auto d = parse_config(j);
    CHECK(d.T == 12.5);
    CHECK(d.phi0.param == 5.0);
    CHECK(d.seed == 7);
    CHECK(d.mc_x0[0] == 0.5);
    CHECK(parse_config(d.to_json()).to_json() == d.to_json());
    CHECK_THROWS_AS(merge_config({{"bogus", 1}}), ConfigError);
    CHECK_THROWS_AS(apply_override(j, "evolve.nope=1"), ConfigError);
    CHECK_THROWS_AS(apply_override(j, "evolve=1"), ConfigError);
    CHECK_THROWS_AS(apply_override(j, "noequals"), ConfigError);
    for (const char* bad : {"problem.h=-1", "evolve.T=0", "mode=bogus", "evolve.method=rk4", "mc.paths=0",
                            "problem.h=0.3", "diagnose.radius=9", "problem.h=\"x\"", "mc.burn_in=500"}) {
        json k = merge_config({});
        apply_override(k, bad);
        CHECK_THROWS_AS(parse_config(k), ConfigError);
    }
}

TEST_CASE("invalid preset fails before touching the filesystem") {
    const auto out = test::scratch("bad_preset");
    json j = merge_config({});
    apply_override(j, "problem.preset=nosuch");
    j["out"] = out.string();
    try {
        parse_config(j);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("nosuch") != std::string::npos);
    }
    CHECK_FALSE(fs::exists(out));
}

TEST_CASE("pia mode lists solve artifacts only") {
    const auto out = test::scratch("pia");
    const auto m = run_experiment(parse_config(quick(out, "pia")));
    CHECK(m.exit_code == 0);
    CHECK(listed(m) == std::set<std::string>{"solve_report.json", "value.csv", "policy.csv"});
    CHECK(fs::exists(out / "manifest.json"));
    for (const auto& f : m.data["files"]) CHECK(f["sha256"] == io::sha256_file(out / f["path"].get<std::string>()));
    std::ifstream csv(out / "value.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "x,value");
}

TEST_CASE("full mode writes the complete inventory and is deterministic") {
    const auto a = test::scratch("full_a");
    const auto b = test::scratch("full_b");
    const auto ma = run_experiment(parse_config(quick(a, "full")));
    const auto mb = run_experiment(parse_config(quick(b, "full")));
    REQUIRE(ma.exit_code == 0);
    const auto files = listed(ma);
    for (const char* need : {"solve_report.json", "diagnostics.csv", "mc_report.json", "coupling.csv", "trajectory.json",
                             "trajectory_snapshot_0000.csv", "trajectory_anchor.csv"}) {
        CHECK(files.count(need) == 1);
    }
    for (std::size_t i = 0; i < ma.data["files"].size(); ++i) {
        CHECK(ma.data["files"][i]["sha256"] == mb.data["files"][i]["sha256"]);
    }
    const auto cmp = compare_runs(a / "manifest.json", b / "manifest.json", a / "cmp.csv");
    for (const auto& r : cmp.rows) CHECK(r.difference == 0.0);
    CHECK(fs::exists(a / "cmp_final.csv"));
    const auto report = io::read_json(a / "mc_report.json");
    CHECK(report.contains("ergodic"));
    CHECK(report.contains("finite_horizon"));
}

TEST_CASE("compare rejects different presets and probe boxes") {
    const auto a = test::scratch("cmp_a");
    const auto b = test::scratch("cmp_b");
    const auto c = test::scratch("cmp_c");
    auto ja = quick(a, "rvi");
    auto jb = quick(b, "rvi");
    apply_override(jb, "problem.preset=doublewell-1d");
    auto jc = quick(c, "rvi");
    apply_override(jc, "diagnose.radius=0.5");
    run_experiment(parse_config(ja));
    run_experiment(parse_config(jb));
    run_experiment(parse_config(jc));
    CHECK_THROWS_AS(compare_runs(a / "manifest.json", b / "manifest.json"), ConfigError);
    CHECK_THROWS_AS(compare_runs(a / "manifest.json", c / "manifest.json"), ConfigError);
    const auto p = test::scratch("cmp_p");
    run_experiment(parse_config(quick(p, "pia")));
    CHECK_THROWS_AS(compare_runs(a / "manifest.json", p / "manifest.json"), ConfigError);
}

TEST_CASE("phase failure leaves a failed manifest with a partial inventory") {
    const auto out = test::scratch("fail");
    auto j = quick(out, "full");
    apply_override(j, "solve.max_iter=1");
    const auto m = run_experiment(parse_config(j));
    CHECK(m.exit_code == 1);
    CHECK(m.data["status"] == "failed");
    CHECK(m.data["failure"]["phase"] == "solve");
    CHECK(listed(m).count("solve_report.json") == 1);
    CHECK(listed(m).count("diagnostics.csv") == 0);
    CHECK(fs::exists(out / "manifest.json"));
}

TEST_CASE("vi and rvi-min modes run") {
    for (const char* mode : {"vi", "rvi-min"}) {
        const auto out = test::scratch(std::string("mode_") + mode);
        const auto m = run_experiment(parse_config(quick(out, mode)));
        CHECK(m.exit_code == 0);
        CHECK(listed(m).count("diagnostics.csv") == 1);
    }
}

}
