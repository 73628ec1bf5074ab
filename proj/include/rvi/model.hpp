// SPDX-License-Identifier: MIT
/**
 * @file model.hpp
 * @brief Controlled diffusion models and the built-in preset catalog.
 *
 * A problem is dX = b(X,U) dt + sigma(X) dW with a(x) = sigma sigma^T / 2,
 * running cost r(x,u) >= 0 and a finite control set. Coefficients are plain
 * callables; there is no expression language.
 */
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rvi/grid.hpp"

namespace rvi {

/// Control point in R^m (m <= 2, unused components zero).
using Control = Vec2;

/// Finite ordered discretization of the compact control space.
class ControlSet {
public:
    ControlSet() = default;
    /// Throws ConfigError on an empty list or duplicated values.
    ControlSet(int control_dim, std::vector<Control> values);

    /// `count` evenly spaced points on [lo, hi] (1D controls).
    static ControlSet uniform(double lo, double hi, std::size_t count);
    /// Tensor product of `count_per_axis` points on [lo, hi]^2, axis 0 fastest.
    static ControlSet uniform_square(double lo, double hi, std::size_t count_per_axis);

    int control_dim() const { return dim_; }
    std::size_t size() const { return values_.size(); }
    const Control& operator[](std::size_t i) const { return values_[i]; }
    const std::vector<Control>& values() const { return values_; }

private:
    int dim_ = 1;
    std::vector<Control> values_;
};

/// Closed-form ergodic solution, when a preset has one.
struct ExactSolution {
    double rho = 0.0;
    /// Value function up to an additive constant.
    std::function<double(const Vec2&)> value;
    /// Optimal feedback u*(x).
    std::function<Control(const Vec2&)> control;
};

struct ControlProblem {
    std::string name;
    int dim = 1;
    std::function<Vec2(const Vec2& x, const Control& u)> drift;
    /// a(x) = sigma(x) sigma(x)^T / 2.
    std::function<Mat2(const Vec2& x)> diffusion;
    /// Optional dispersion matrix; simulation falls back to sqrt(2 a(x)).
    std::function<Mat2(const Vec2& x)> sigma;
    std::function<double(const Vec2& x, const Control& u)> cost;
    ControlSet controls;
    std::optional<ExactSolution> exact;

    /// min over the control set of cost(x, .).
    double min_cost(const Vec2& x) const;
};

/// Knobs for the preset catalog. Zero means "preset default".
struct PresetOptions {
    std::size_t control_points = 0;  ///< per control axis; 41 in 1D, 21 per axis in 2D
    double control_bound = 0.0;      ///< |u| <= bound; preset default otherwise
};

/// Names accepted by preset().
const std::vector<std::string>& preset_names();

/// Builds "lqg1d", "lqg2d", "bounded-drift-1d" or "doublewell-1d".
ControlProblem preset(const std::string& name, const PresetOptions& options = {});

/// Checks nonnegative cost, finite coefficients and positive definite a(x)
/// at every node for every control. Throws ConfigError naming the first
/// offending node.
void validate_on_grid(const ControlProblem& problem, const GridSpec& grid);

/// Grid version of the sub-rho level set {x : min_u r(x,u) <= rho}.
struct LevelSet {
    std::vector<std::size_t> nodes;
    /// No node of the set lies on the truncation boundary.
    bool strictly_inside = true;
    /// min over the complement of (min_u r - rho); +inf when the complement is empty.
    double margin = 0.0;
    /// Smallest node-aligned box containing the set (meaningless when empty).
    Box bounding_box;
};

LevelSet near_monotone_level_set(const ControlProblem& problem, double rho, const GridSpec& grid);

}  // namespace rvi
