// SPDX-License-Identifier: MIT
#include "rvi/io.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "rvi/error.hpp"

namespace rvi::io {

namespace fs = std::filesystem;

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 40> buf{};
    std::snprintf(buf.data(), buf.size(), "%.17g", v);
    return buf.data();
}

namespace {

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    return out;
}

void write_coords(std::ostream& os, const GridSpec& grid, std::size_t node) {
    const Vec2 x = grid.coordinate(node);
    os << format_double(x[0]);
    if (grid.dim() == 2) os << ',' << format_double(x[1]);
}

json nan_safe(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

}  // namespace

void write_field_csv(const fs::path& path, const Field& f) {
    auto out = open_out(path);
    const auto& grid = f.grid();
    out << (grid.dim() == 1 ? "x,value\n" : "x0,x1,value\n");
    for (std::size_t n = 0; n < grid.size(); ++n) {
        write_coords(out, grid, n);
        out << ',' << format_double(f[n]) << '\n';
    }
}

void write_policy_csv(const fs::path& path, const GridSpec& grid, const std::vector<std::size_t>& policy,
                      const ControlSet& controls) {
    auto out = open_out(path);
    const bool two_u = controls.control_dim() == 2;
    out << (grid.dim() == 1 ? "x" : "x0,x1") << ",control_index," << (two_u ? "u0,u1" : "u") << '\n';
    for (std::size_t n = 0; n < grid.size(); ++n) {
        write_coords(out, grid, n);
        const auto& u = controls[policy[n]];
        out << ',' << policy[n] << ',' << format_double(u[0]);
        if (two_u) out << ',' << format_double(u[1]);
        out << '\n';
    }
}

void write_diagnostics_csv(const fs::path& path, const std::vector<DiagnosticsRecord>& records) {
    auto out = open_out(path);
    out << "time,sup_error_on_compact,oscillation_b0,anchor_value,weighted_norm_vs_vstar,mu_average\n";
    for (const auto& r : records) {
        out << format_double(r.time) << ',' << format_double(r.sup_error_on_compact) << ','
            << format_double(r.oscillation_b0) << ',' << format_double(r.anchor_value) << ','
            << format_double(r.weighted_norm_vs_vstar) << ',' << format_double(r.mu_average) << '\n';
    }
}

std::vector<DiagnosticsRecord> read_diagnostics_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    if (line.rfind("time,sup_error_on_compact", 0) != 0) throw ConfigError(path.string() + " is not a diagnostics CSV");
    std::vector<DiagnosticsRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::array<double, 6> v{};
        std::stringstream ss(line);
        std::string cell;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!std::getline(ss, cell, ',')) throw ConfigError("short row in " + path.string());
            v[i] = std::strtod(cell.c_str(), nullptr);
        }
        out.push_back({v[0], v[1], v[2], v[3], v[4], v[5]});
    }
    return out;
}

json grid_to_json(const GridSpec& grid) {
    json j;
    j["dim"] = grid.dim();
    j["lower"] = json::array();
    j["upper"] = json::array();
    j["nodes"] = json::array();
    j["spacing"] = json::array();
    for (int i = 0; i < grid.dim(); ++i) {
        j["lower"].push_back(grid.lower()[i]);
        j["upper"].push_back(grid.upper()[i]);
        j["nodes"].push_back(grid.nodes_along(i));
        j["spacing"].push_back(grid.spacing(i));
    }
    j["anchor_index"] = grid.anchor_index();
    return j;
}

json to_json(const SolveReport& report) {
    json j;
    j["rho"] = report.rho;
    j["rho_mu"] = nan_safe(report.rho_mu);
    j["converged"] = report.converged;
    j["hjb_residual"] = report.hjb_residual;
    j["iterations"] = report.history.size();
    j["source"] = report.source;
    j["mu_value"] = nan_safe(report.mu_value);
    j["value_min"] = report.value.min();
    j["value_at_anchor"] = report.value.at_anchor();
    j["grid"] = grid_to_json(report.grid);
    j["history"] = json::array();
    for (const auto& h : report.history) {
        j["history"].push_back({{"rho", h.rho},
                                {"policy_changes", h.policy_changes},
                                {"poisson_residual", h.poisson_residual},
                                {"hjb_residual", h.hjb_residual}});
    }
    return j;
}

json to_json(const EstimateReport& report) {
    return json{{"mean", report.mean},
                {"std_error", report.std_error},
                {"n_paths", report.n_paths},
                {"clipped_paths", report.clipped_paths},
                {"flagged", report.flagged},
                {"warning", report.warning}};
}

std::vector<fs::path> write_trajectory(const fs::path& dir, const std::string& stem, const EvolutionTrajectory& traj) {
    fs::create_directories(dir);
    std::vector<fs::path> written;
    json manifest;
    manifest["mode"] = to_string(traj.mode);
    manifest["method"] = traj.method;
    manifest["dt"] = traj.dt;
    manifest["steps"] = traj.steps;
    manifest["rho"] = traj.has_rho ? json(traj.rho) : json(nullptr);
    manifest["times"] = traj.times;
    manifest["snapshots"] = json::array();
    for (std::size_t j = 0; j < traj.snapshots.size(); ++j) {
        std::ostringstream name;
        name << stem << "_snapshot_" << std::setw(4) << std::setfill('0') << j << ".csv";
        const fs::path p = dir / name.str();
        write_field_csv(p, traj.snapshots[j]);
        written.push_back(p);
        manifest["snapshots"].push_back(name.str());
    }
    manifest["diagnostics"] = json::array();
    for (const auto& d : traj.diagnostics) {
        manifest["diagnostics"].push_back({{"oscillation", nan_safe(d.oscillation)}, {"sup_error", nan_safe(d.sup_error)}});
    }
    const fs::path anchors = dir / (stem + "_anchor.csv");
    {
        auto out = open_out(anchors);
        out << "time,anchor_value\n";
        for (std::size_t k = 0; k < traj.anchor_series.size(); ++k) {
            out << format_double(traj.time_of_step(k)) << ',' << format_double(traj.anchor_series[k]) << '\n';
        }
    }
    written.push_back(anchors);
    manifest["anchor_series"] = anchors.filename().string();
    const fs::path mpath = dir / (stem + ".json");
    write_json(mpath, manifest);
    written.push_back(mpath);
    return written;
}

void write_json(const fs::path& path, const json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md.data(), &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
}

}  // namespace rvi::io
