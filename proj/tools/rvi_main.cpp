// SPDX-License-Identifier: MIT
// rvi: command-line front end for the ergodic control pipeline.
//
//   rvi solve    --config run.json --set problem.h=0.01 --out runs/pia
//   rvi evolve   --set mode=vi --set evolve.T=20
//   rvi simulate --seed 7
//   rvi full     --out runs/full
//   rvi compare  runs/h02/manifest.json runs/h01/manifest.json --out cmp.csv
//
// Exit codes: 0 success, 1 numerical failure, 2 configuration error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rvi/error.hpp"
#include "rvi/experiment.hpp"
#include "rvi/io.hpp"

namespace {

struct CommonOptions {
    std::string config;
    std::vector<std::string> sets;
    std::string out;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--set", opts.sets, "override, dotted key=value (repeatable)");
    cmd->add_option("--out", opts.out, "output directory");
    cmd->add_option("--seed", opts.seed, "Monte Carlo seed");
}

nlohmann::json load_config(const CommonOptions& opts) {
    nlohmann::json user = nlohmann::json::object();
    if (!opts.config.empty()) user = rvi::io::read_json(opts.config);
    auto merged = rvi::merge_config(user);
    for (const auto& s : opts.sets) rvi::apply_override(merged, s);
    if (!opts.out.empty()) merged["out"] = opts.out;
    if (opts.seed) merged["seed"] = *opts.seed;
    return merged;
}

int run(const CommonOptions& opts, const std::optional<std::string>& forced_mode) {
    auto cfg_json = load_config(opts);
    if (forced_mode) {
        const auto mode = cfg_json["mode"].get<std::string>();
        if (*forced_mode == "evolve") {
            if (mode != "vi" && mode != "rvi" && mode != "rvi-min") cfg_json["mode"] = "rvi";
        } else {
            cfg_json["mode"] = *forced_mode;
        }
    }
    const auto cfg = rvi::parse_config(cfg_json);
    const auto manifest = rvi::run_experiment(cfg);
    const auto& d = manifest.data;
    if (manifest.exit_code != 0) {
        std::cerr << "rvi: phase '" << d["failure"]["phase"].get<std::string>()
                  << "' failed: " << d["failure"]["message"].get<std::string>() << '\n';
    }
    std::cout << "mode " << rvi::to_string(cfg.mode) << ", status " << d["status"].get<std::string>();
    if (d["summary"].contains("rho")) std::cout << ", rho " << rvi::io::format_double(d["summary"]["rho"].get<double>());
    if (d["summary"].contains("final_sup_error")) {
        std::cout << ", final sup error " << rvi::io::format_double(d["summary"]["final_sup_error"].get<double>());
    }
    std::cout << "\nmanifest " << manifest.path.string() << '\n';
    return manifest.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Relative value iteration for ergodic control of diffusions"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(RVI_VERSION));

    CommonOptions opts;
    auto* solve = app.add_subcommand("solve", "stationary solve by policy iteration");
    auto* evolve = app.add_subcommand("evolve", "VI / RVI time marching (mode from config, default rvi)");
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo check of the solved policy");
    auto* full = app.add_subcommand("full", "solve, evolve, couple, simulate, diagnose");
    for (auto* cmd : {solve, evolve, simulate, full}) add_common(cmd, opts);

    std::string manifest_a;
    std::string manifest_b;
    std::string compare_out;
    auto* compare = app.add_subcommand("compare", "sup-error differences between two runs");
    compare->add_option("manifest_a", manifest_a)->required()->check(CLI::ExistingFile);
    compare->add_option("manifest_b", manifest_b)->required()->check(CLI::ExistingFile);
    compare->add_option("--out", compare_out, "CSV for the per-time table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (compare->parsed()) {
            const auto cmp = rvi::compare_runs(manifest_a, manifest_b, compare_out);
            std::cout << "time,sup_error_a,sup_error_b,abs_difference\n";
            for (const auto& r : cmp.rows) {
                std::cout << rvi::io::format_double(r.time) << ',' << rvi::io::format_double(r.sup_error_a) << ','
                          << rvi::io::format_double(r.sup_error_b) << ',' << rvi::io::format_double(r.difference)
                          << '\n';
            }
            std::cout << "final ratio " << rvi::io::format_double(cmp.ratio) << '\n';
            return 0;
        }
        if (solve->parsed()) return run(opts, "pia");
        if (evolve->parsed()) return run(opts, "evolve");
        if (simulate->parsed()) return run(opts, "mc-check");
        return run(opts, "full");
    } catch (const rvi::ConfigError& e) {
        std::cerr << "rvi: configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "rvi: " << e.what() << '\n';
        return 1;
    }
}
