// SPDX-License-Identifier: MIT
/**
 * @file discretize.hpp
 * @brief Monotone finite-difference approximation of the controlled generator.
 *
 * L^u f(x) = a^{ij}(x) d_ij f + b^i(x,u) d_i f is replaced by a continuous-time
 * Markov chain generator on the grid:
 *
 *   - a^{ii} d_ii: second-order central differences;
 *   - 2 a^{12} d_12 (2D only): 7-point positive stencil along the diagonal
 *     matching the sign of a^{12}; requires a^{ii}/h_i^2 >= |a^{12}|/(h_0 h_1);
 *   - b^i d_i: first-order upwind, forward weighted by b^+, backward by b^-.
 *
 * Neighbours outside the box are dropped (reflecting closure), so every row
 * sums to zero and every off-diagonal weight is nonnegative.
 */
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/SparseCore>

#include "rvi/grid.hpp"
#include "rvi/model.hpp"

namespace rvi {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Sparse CTMC generator on a grid.
struct GeneratorMatrix {
    GridSpec grid;
    SparseRowMatrix q;
    /// Per node, per axis: +1 forward difference used, -1 backward, 0 no drift.
    std::vector<std::array<std::int8_t, kMaxDim>> upwind;

    std::size_t size() const { return static_cast<std::size_t>(q.rows()); }
};

/// Per-node minimum of L^u phi + r(., u) and the control index attaining it.
struct HamiltonianResult {
    Field value;
    std::vector<std::size_t> argmin;
};

/// Control-indexed coefficient tables for one (problem, grid) pair.
///
/// Costs and drifts are evaluated once at construction; the hot loops below
/// only touch flat arrays. Immutable after construction.
class ControlledStencil {
public:
    ControlledStencil(const ControlProblem& problem, const GridSpec& grid);

    const GridSpec& grid() const { return grid_; }
    std::size_t num_nodes() const { return grid_.size(); }
    std::size_t num_controls() const { return num_controls_; }

    double cost(std::size_t node, std::size_t control) const { return cost_[node * num_controls_ + control]; }
    double drift(std::size_t node, std::size_t control, int axis) const {
        return drift_[static_cast<std::size_t>(axis)][node * num_controls_ + control];
    }

    /// (L^u phi)(node) for control index u.
    double apply(std::size_t node, std::size_t control, std::span<const double> phi) const;
    /// (L^u phi + r(., u))(node), bitwise identical to the min_hamiltonian candidates.
    double hamiltonian_at(std::size_t node, std::size_t control, std::span<const double> phi) const;

    /// Hot path: value[n] = min_u [L^u phi + r](n); ties go to the smallest index.
    void min_hamiltonian(std::span<const double> phi, std::span<double> value,
                         std::span<std::size_t> argmin) const;
    HamiltonianResult min_hamiltonian(const Field& phi) const;

    /// Generator of the chain under a stationary policy (control index per node).
    GeneratorMatrix policy_generator(std::span<const std::size_t> policy) const;
    /// Generator for a single control value applied at every node.
    GeneratorMatrix control_generator(std::size_t control) const;
    /// r(x, policy(x)).
    Field policy_cost(std::span<const std::size_t> policy) const;

    /// max over nodes and controls of the total exit rate |q_ii|.
    double max_exit_rate() const { return max_exit_rate_; }
    /// Explicit Euler step with dt * max exit rate = safety, which keeps every
    /// update a convex combination of neighbouring values.
    double stable_dt(double safety = 0.9) const { return safety / max_exit_rate_; }

private:
    struct DiffusionRow {
        std::array<std::uint32_t, 6> neighbour{};
        std::array<double, 6> weight{};
        std::uint8_t count = 0;
    };
    static constexpr std::uint32_t kNone = 0xffffffffu;

    double diffusion_part(std::size_t node, std::span<const double> phi) const;
    /// Upwind one-sided difference quotients; zero across a reflecting face.
    void one_sided(std::size_t node, std::span<const double> phi, Vec2& up, Vec2& down) const;
    double drift_and_cost(std::size_t node, std::size_t control, const Vec2& up, const Vec2& down) const;

    GridSpec grid_;
    std::size_t num_controls_ = 0;
    std::vector<double> cost_;
    std::array<std::vector<double>, kMaxDim> drift_;
    std::vector<DiffusionRow> diffusion_;
    /// forward_[n][i] / backward_[n][i]: neighbour along axis i or kNone.
    std::vector<std::array<std::uint32_t, kMaxDim>> forward_;
    std::vector<std::array<std::uint32_t, kMaxDim>> backward_;
    Vec2 inv_h_{};
    double max_exit_rate_ = 0.0;
};

/// Generator for the fixed control value u.
GeneratorMatrix build_generator(const ControlProblem& problem, const GridSpec& grid, const Control& u);

/// Q f computed as sum_{j != i} q_ij (f_j - f_i), so constants map to exactly zero.
Field apply_generator(const GeneratorMatrix& g, const Field& f);

/// Convenience wrapper that assembles a ControlledStencil per call.
HamiltonianResult min_hamiltonian(const ControlProblem& problem, const GridSpec& grid, const Field& phi);

/// Reporting gradient along one axis: central in the interior, one-sided at faces.
Field discrete_gradient(const Field& f, int axis);

}  // namespace rvi
