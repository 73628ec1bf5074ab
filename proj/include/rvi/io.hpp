// SPDX-License-Identifier: MIT
/**
 * @file io.hpp
 * @brief CSV/JSON persistence. Floats are written with 17 significant digits.
 */
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rvi/diagnose.hpp"
#include "rvi/evolve.hpp"
#include "rvi/montecarlo.hpp"
#include "rvi/stationary.hpp"

namespace rvi::io {

using nlohmann::json;

std::string format_double(double v);

/// Header "x,value" (1D) or "x0,x1,value" (2D).
void write_field_csv(const std::filesystem::path& path, const Field& f);
/// Header "x,control_index,u" (1D grid) or "x0,x1,control_index,u0,u1".
void write_policy_csv(const std::filesystem::path& path, const GridSpec& grid, const std::vector<std::size_t>& policy,
                      const ControlSet& controls);
void write_diagnostics_csv(const std::filesystem::path& path, const std::vector<DiagnosticsRecord>& records);
std::vector<DiagnosticsRecord> read_diagnostics_csv(const std::filesystem::path& path);

json grid_to_json(const GridSpec& grid);
json to_json(const SolveReport& report);
json to_json(const EstimateReport& report);

/// Writes snapshot_XXXX.csv files and the trajectory.json manifest into `dir`.
/// Returns the paths written, manifest last.
std::vector<std::filesystem::path> write_trajectory(const std::filesystem::path& dir, const std::string& stem,
                                                    const EvolutionTrajectory& traj);

void write_json(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace rvi::io
