// SPDX-License-Identifier: MIT
#include "rvi/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "rvi/error.hpp"

namespace rvi {

ControlledStencil::ControlledStencil(const ControlProblem& problem, const GridSpec& grid)
    : grid_(grid), num_controls_(problem.controls.size()) {
    if (problem.dim != grid.dim()) throw ConfigError("problem and grid dimensions differ");
    if (num_controls_ == 0) throw ConfigError("control set is empty");

    const int d = grid.dim();
    const std::size_t n = grid.size();
    const std::size_t m = num_controls_;
    for (int i = 0; i < d; ++i) {
        if (grid.nodes_along(i) < 2) throw ConfigError("difference stencils need at least two nodes per axis");
        inv_h_[i] = 1.0 / grid.spacing(i);
    }

    cost_.resize(n * m);
    for (int i = 0; i < d; ++i) drift_[static_cast<std::size_t>(i)].resize(n * m);
    diffusion_.resize(n);
    forward_.resize(n);
    backward_.resize(n);

    for (std::size_t node = 0; node < n; ++node) {
        const Vec2 x = grid.coordinate(node);
        const auto idx = grid.multi_index(node);

        auto neighbour = [&](int di, int dj) -> std::uint32_t {
            const long i0 = static_cast<long>(idx[0]) + di;
            const long i1 = static_cast<long>(idx[1]) + dj;
            if (i0 < 0 || i0 >= static_cast<long>(grid.nodes_along(0))) return kNone;
            if (i1 < 0 || i1 >= static_cast<long>(grid.nodes_along(1))) return kNone;
            return static_cast<std::uint32_t>(
                grid.flat_index({static_cast<std::size_t>(i0), static_cast<std::size_t>(i1)}));
        };

        forward_[node] = {kNone, kNone};
        backward_[node] = {kNone, kNone};
        forward_[node][0] = neighbour(1, 0);
        backward_[node][0] = neighbour(-1, 0);
        if (d == 2) {
            forward_[node][1] = neighbour(0, 1);
            backward_[node][1] = neighbour(0, -1);
        }

        const Mat2 a = problem.diffusion(x);
        const double cross = d == 2 ? a[0][1] : 0.0;
        const double cross_w = d == 2 ? std::abs(cross) * inv_h_[0] * inv_h_[1] : 0.0;

        DiffusionRow row;
        auto push = [&](std::uint32_t nb, double w) {
            if (nb == kNone || w == 0.0) return;
            row.neighbour[row.count] = nb;
            row.weight[row.count] = w;
            ++row.count;
        };
        for (int i = 0; i < d; ++i) {
            const double w = a[i][i] * inv_h_[i] * inv_h_[i] - cross_w;
            if (!(w >= 0.0) || !std::isfinite(w)) {
                std::ostringstream os;
                os << "negative off-diagonal weight at node " << node << ": axis-" << i
                   << " diffusion term a_ii/h^2 - |a_12|/(h0 h1) = " << w;
                throw MonotonicityError(os.str());
            }
            push(backward_[node][static_cast<std::size_t>(i)], w);
            push(forward_[node][static_cast<std::size_t>(i)], w);
        }
        if (cross_w > 0.0) {
            if (cross > 0.0) {
                push(neighbour(-1, -1), cross_w);
                push(neighbour(1, 1), cross_w);
            } else {
                push(neighbour(1, -1), cross_w);
                push(neighbour(-1, 1), cross_w);
            }
        }
        diffusion_[node] = row;

        double diff_rate = 0.0;
        for (std::uint8_t k = 0; k < row.count; ++k) diff_rate += row.weight[k];

        for (std::size_t k = 0; k < m; ++k) {
            const auto& u = problem.controls[k];
            cost_[node * m + k] = problem.cost(x, u);
            const Vec2 b = problem.drift(x, u);
            double rate = diff_rate;
            for (int i = 0; i < d; ++i) {
                drift_[static_cast<std::size_t>(i)][node * m + k] = b[i];
                if (b[i] > 0.0 && forward_[node][static_cast<std::size_t>(i)] != kNone) rate += b[i] * inv_h_[i];
                if (b[i] < 0.0 && backward_[node][static_cast<std::size_t>(i)] != kNone) rate -= b[i] * inv_h_[i];
            }
            max_exit_rate_ = std::max(max_exit_rate_, rate);
        }
    }
}

double ControlledStencil::diffusion_part(std::size_t node, std::span<const double> phi) const {
    const auto& row = diffusion_[node];
    const double c = phi[node];
    double s = 0.0;
    for (std::uint8_t k = 0; k < row.count; ++k) s += row.weight[k] * (phi[row.neighbour[k]] - c);
    return s;
}

void ControlledStencil::one_sided(std::size_t node, std::span<const double> phi, Vec2& up, Vec2& down) const {
    const double c = phi[node];
    up = {};
    down = {};
    for (int i = 0; i < grid_.dim(); ++i) {
        const auto ai = static_cast<std::size_t>(i);
        const auto fw = forward_[node][ai];
        const auto bw = backward_[node][ai];
        up[i] = fw != kNone ? (phi[fw] - c) * inv_h_[i] : 0.0;
        down[i] = bw != kNone ? (phi[bw] - c) * inv_h_[i] : 0.0;
    }
}

double ControlledStencil::drift_and_cost(std::size_t node, std::size_t control, const Vec2& up,
                                         const Vec2& down) const {
    const std::size_t at = node * num_controls_ + control;
    const double b0 = drift_[0][at];
    double v = cost_[at] + std::max(b0, 0.0) * up[0] - std::min(b0, 0.0) * down[0];
    if (grid_.dim() == 2) {
        const double b1 = drift_[1][at];
        v += std::max(b1, 0.0) * up[1] - std::min(b1, 0.0) * down[1];
    }
    return v;
}

double ControlledStencil::apply(std::size_t node, std::size_t control, std::span<const double> phi) const {
    return hamiltonian_at(node, control, phi) - cost(node, control);
}

double ControlledStencil::hamiltonian_at(std::size_t node, std::size_t control, std::span<const double> phi) const {
    Vec2 up, down;
    one_sided(node, phi, up, down);
    return diffusion_part(node, phi) + drift_and_cost(node, control, up, down);
}

void ControlledStencil::min_hamiltonian(std::span<const double> phi, std::span<double> value,
                                        std::span<std::size_t> argmin) const {
    const std::size_t n = num_nodes();
    const std::size_t m = num_controls_;
    if (phi.size() != n || value.size() != n || argmin.size() != n) {
        throw DimensionError("min_hamiltonian: field length does not match the grid");
    }
    const int d = grid_.dim();

#pragma omp parallel for schedule(static)
    for (std::size_t node = 0; node < n; ++node) {
        Vec2 up, down;
        one_sided(node, phi, up, down);
        const double* r = cost_.data() + node * m;
        const double* b0 = drift_[0].data() + node * m;
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_k = 0;
        if (d == 1) {
            for (std::size_t k = 0; k < m; ++k) {
                const double v = r[k] + std::max(b0[k], 0.0) * up[0] - std::min(b0[k], 0.0) * down[0];
                if (v < best) {
                    best = v;
                    best_k = k;
                }
            }
        } else {
            const double* b1 = drift_[1].data() + node * m;
            for (std::size_t k = 0; k < m; ++k) {
                double v = r[k] + std::max(b0[k], 0.0) * up[0] - std::min(b0[k], 0.0) * down[0];
                v += std::max(b1[k], 0.0) * up[1] - std::min(b1[k], 0.0) * down[1];
                if (v < best) {
                    best = v;
                    best_k = k;
                }
            }
        }
        value[node] = diffusion_part(node, phi) + best;
        argmin[node] = best_k;
    }
}

HamiltonianResult ControlledStencil::min_hamiltonian(const Field& phi) const {
    require_same_grid(phi.grid(), grid_, "min_hamiltonian");
    HamiltonianResult out{Field(grid_), std::vector<std::size_t>(grid_.size())};
    min_hamiltonian(phi.values(), out.value.values(), out.argmin);
    return out;
}

GeneratorMatrix ControlledStencil::policy_generator(std::span<const std::size_t> policy) const {
    const std::size_t n = num_nodes();
    if (policy.size() != n) throw DimensionError("policy length does not match the grid");
    const int d = grid_.dim();

    GeneratorMatrix g;
    g.grid = grid_;
    g.upwind.assign(n, {0, 0});
    g.q.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    g.q.reserve(Eigen::VectorXi::Constant(static_cast<Eigen::Index>(n), 7));

    std::vector<std::pair<std::uint32_t, double>> entries;
    for (std::size_t node = 0; node < n; ++node) {
        const std::size_t k = policy[node];
        if (k >= num_controls_) throw ConfigError("policy entry out of range at node " + std::to_string(node));
        entries.clear();
        const auto& row = diffusion_[node];
        for (std::uint8_t j = 0; j < row.count; ++j) entries.emplace_back(row.neighbour[j], row.weight[j]);
        for (int i = 0; i < d; ++i) {
            const auto ai = static_cast<std::size_t>(i);
            const double b = drift_[ai][node * num_controls_ + k];
            if (b > 0.0 && forward_[node][ai] != kNone) {
                entries.emplace_back(forward_[node][ai], b * inv_h_[i]);
                g.upwind[node][ai] = 1;
            } else if (b < 0.0 && backward_[node][ai] != kNone) {
                entries.emplace_back(backward_[node][ai], -b * inv_h_[i]);
                g.upwind[node][ai] = -1;
            }
        }
        std::sort(entries.begin(), entries.end());
        // Merge duplicates (diffusion + drift to the same neighbour).
        std::size_t w = 0;
        for (std::size_t j = 0; j < entries.size(); ++j) {
            if (w > 0 && entries[w - 1].first == entries[j].first) {
                entries[w - 1].second += entries[j].second;
            } else {
                entries[w++] = entries[j];
            }
        }
        entries.resize(w);
        // Diagonal is minus the ascending-column sum of the off-diagonals.
        double off = 0.0;
        for (const auto& [col, val] : entries) off += val;
        bool diag_done = false;
        for (const auto& [col, val] : entries) {
            if (!diag_done && col > node) {
                g.q.insert(static_cast<Eigen::Index>(node), static_cast<Eigen::Index>(node)) = -off;
                diag_done = true;
            }
            g.q.insert(static_cast<Eigen::Index>(node), static_cast<Eigen::Index>(col)) = val;
        }
        if (!diag_done) g.q.insert(static_cast<Eigen::Index>(node), static_cast<Eigen::Index>(node)) = -off;
    }
    g.q.makeCompressed();
    return g;
}

GeneratorMatrix ControlledStencil::control_generator(std::size_t control) const {
    if (control >= num_controls_) throw ConfigError("control index out of range");
    const std::vector<std::size_t> policy(num_nodes(), control);
    return policy_generator(policy);
}

Field ControlledStencil::policy_cost(std::span<const std::size_t> policy) const {
    if (policy.size() != num_nodes()) throw DimensionError("policy length does not match the grid");
    Field out(grid_);
    for (std::size_t node = 0; node < num_nodes(); ++node) out[node] = cost(node, policy[node]);
    return out;
}

GeneratorMatrix build_generator(const ControlProblem& problem, const GridSpec& grid, const Control& u) {
    ControlProblem single = problem;
    single.controls = ControlSet(problem.controls.control_dim(), {u});
    return ControlledStencil(single, grid).control_generator(0);
}

Field apply_generator(const GeneratorMatrix& g, const Field& f) {
    require_same_grid(g.grid, f.grid(), "apply_generator");
    if (g.size() != f.size()) throw DimensionError("apply_generator: matrix and field sizes differ");
    Field out(f.grid());
    for (Eigen::Index i = 0; i < g.q.outerSize(); ++i) {
        const double fi = f[static_cast<std::size_t>(i)];
        double s = 0.0;
        for (SparseRowMatrix::InnerIterator it(g.q, i); it; ++it) {
            if (it.col() != i) s += it.value() * (f[static_cast<std::size_t>(it.col())] - fi);
        }
        out[static_cast<std::size_t>(i)] = s;
    }
    return out;
}

HamiltonianResult min_hamiltonian(const ControlProblem& problem, const GridSpec& grid, const Field& phi) {
    return ControlledStencil(problem, grid).min_hamiltonian(phi);
}

Field discrete_gradient(const Field& f, int axis) {
    const auto& grid = f.grid();
    if (axis < 0 || axis >= grid.dim()) throw DimensionError("gradient axis out of range");
    const auto ai = static_cast<std::size_t>(axis);
    const std::size_t na = grid.nodes_along(axis);
    const double h = grid.spacing(axis);
    Field out(grid);
    for (std::size_t node = 0; node < grid.size(); ++node) {
        auto idx = grid.multi_index(node);
        const std::size_t i = idx[ai];
        auto shifted = [&](std::size_t j) {
            auto k = idx;
            k[ai] = j;
            return f[grid.flat_index(k)];
        };
        if (i == 0) {
            out[node] = (shifted(1) - shifted(0)) / h;
        } else if (i + 1 == na) {
            out[node] = (shifted(i) - shifted(i - 1)) / h;
        } else {
            out[node] = (shifted(i + 1) - shifted(i - 1)) / (2.0 * h);
        }
    }
    return out;
}

}  // namespace rvi
