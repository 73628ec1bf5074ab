// SPDX-License-Identifier: MIT
/**
 * @file experiment.hpp
 * @brief Config ingestion and the solve / evolve / simulate / diagnose pipeline.
 *
 * Configs are nested JSON objects. Command-line overrides use dotted keys
 * ("evolve.T=10"); only keys present in the defaults are accepted.
 */
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rvi/evolve.hpp"
#include "rvi/model.hpp"
#include "rvi/stationary.hpp"

namespace rvi {

enum class RunMode { vi, rvi, rvi_min, pia, mc_check, full };

std::string to_string(RunMode mode);
RunMode parse_run_mode(const std::string& s);

/// Initial condition for the evolution phases.
struct Phi0Spec {
    enum class Kind { zero, constant, quadratic, vstar } kind = Kind::zero;
    double param = 0.0;

    /// "zero", "constant:c", "quadratic:a" (a |x|^2) or "vstar".
    static Phi0Spec parse(const std::string& s);
    std::string str() const;
    /// `vstar` needs the stationary value function.
    Field make(const GridSpec& grid, const Field* vstar) const;
};

struct ExperimentConfig {
    std::string preset = "lqg1d";
    double half_width = 4.0;
    double h = 0.02;
    std::size_t controls = 0;  ///< 0 keeps the preset default
    double u_max = 0.0;        ///< 0 keeps the preset default
    RunMode mode = RunMode::full;

    double T = 30.0;
    double dt = 0.0;  ///< 0 selects the explicit stability bound
    double snapshot_every = 0.5;
    double policy_every = 0.1;
    Phi0Spec phi0;
    TimeMethod method = TimeMethod::explicit_euler;

    double solve_tol = 1e-8;
    std::size_t solve_max_iter = 100;

    std::size_t mc_paths = 10000;
    double mc_T = 200.0;
    double mc_burn_in = 20.0;
    double mc_dt = 0.01;
    Vec2 mc_x0{};
    double fh_T = 10.0;
    double fh_x0 = 1.0;

    double radius = 1.0;
    double eps = 0.0;  ///< 0 selects 10 dt + 2 solve.tol

    std::uint64_t seed = 20240601;
    std::filesystem::path out = "runs/latest";

    nlohmann::json to_json() const;
};

/// Default config as JSON; the key set that overrides may touch.
nlohmann::json default_config_json();

/// Merges `user` into the defaults. Unknown keys throw ConfigError.
nlohmann::json merge_config(const nlohmann::json& user);

/// Applies "dotted.key=value"; value is parsed as JSON, falling back to a string.
void apply_override(nlohmann::json& config, const std::string& assignment);

/// Builds and fully validates a config (preset exists, grid constructs,
/// numeric fields in range, phi0 parses). Throws ConfigError.
ExperimentConfig parse_config(const nlohmann::json& config);

struct PhaseTiming {
    std::string phase;
    double seconds = 0.0;
};

struct RunManifest {
    nlohmann::json data;
    std::filesystem::path path;
    /// 0 success, 1 numerical failure, 2 configuration error.
    int exit_code = 0;
};

/// Runs the phases of `config.mode` into `config.out`. manifest.json is
/// written last. Phase failures are recorded in the manifest, not thrown.
RunManifest run_experiment(const ExperimentConfig& config);

struct ComparisonRow {
    double time = 0.0;
    double sup_error_a = 0.0;
    double sup_error_b = 0.0;
    double difference = 0.0;
};

struct Comparison {
    std::vector<ComparisonRow> rows;
    double final_a = 0.0;
    double final_b = 0.0;
    /// final_a / final_b.
    double ratio = 0.0;
};

/// Per-time sup-error differences of two runs with diagnostics series.
/// Throws ConfigError when presets or probe boxes differ. Writes
/// `out_csv` (per time) and `<stem>_final.csv` next to it when non-empty.
Comparison compare_runs(const std::filesystem::path& manifest_a, const std::filesystem::path& manifest_b,
                        const std::filesystem::path& out_csv = {});

}  // namespace rvi
