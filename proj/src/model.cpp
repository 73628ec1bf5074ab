// SPDX-License-Identifier: MIT
#include "rvi/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rvi/error.hpp"

namespace rvi {

ControlSet::ControlSet(int control_dim, std::vector<Control> values) : dim_(control_dim), values_(std::move(values)) {
    if (dim_ < 1 || dim_ > kMaxDim) throw ConfigError("control dimension must be 1 or 2");
    if (values_.empty()) throw ConfigError("control set is empty");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        for (std::size_t j = i + 1; j < values_.size(); ++j) {
            if (values_[i] == values_[j]) {
                throw ConfigError("control set has duplicate entries at " + std::to_string(i) + " and " +
                                  std::to_string(j));
            }
        }
    }
}

ControlSet ControlSet::uniform(double lo, double hi, std::size_t count) {
    if (count == 0) throw ConfigError("control count must be positive");
    std::vector<Control> v;
    v.reserve(count);
    if (count == 1) {
        v.push_back({0.5 * (lo + hi), 0.0});
    } else {
        for (std::size_t k = 0; k < count; ++k) {
            const double s = static_cast<double>(k) / static_cast<double>(count - 1);
            double u = lo + s * (hi - lo);
            // Keep the symmetric midpoint exactly zero.
            if (2 * k + 1 == count) u = 0.5 * (lo + hi);
            v.push_back({u, 0.0});
        }
    }
    return ControlSet(1, std::move(v));
}

ControlSet ControlSet::uniform_square(double lo, double hi, std::size_t count_per_axis) {
    const auto axis = uniform(lo, hi, count_per_axis);
    std::vector<Control> v;
    v.reserve(axis.size() * axis.size());
    for (std::size_t j = 0; j < axis.size(); ++j) {
        for (std::size_t i = 0; i < axis.size(); ++i) v.push_back({axis[i][0], axis[j][0]});
    }
    return ControlSet(2, std::move(v));
}

double ControlProblem::min_cost(const Vec2& x) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& u : controls.values()) best = std::min(best, cost(x, u));
    return best;
}

namespace {

Mat2 scalar_matrix(int dim, double s) {
    Mat2 m{};
    for (int i = 0; i < dim; ++i) m[i][i] = s;
    return m;
}

ControlProblem unit_noise_base(std::string name, int dim) {
    ControlProblem p;
    p.name = std::move(name);
    p.dim = dim;
    p.drift = [](const Vec2&, const Control& u) { return u; };
    p.diffusion = [dim](const Vec2&) { return scalar_matrix(dim, 0.5); };
    p.sigma = [dim](const Vec2&) { return scalar_matrix(dim, 1.0); };
    return p;
}

std::size_t points_or(std::size_t requested, std::size_t fallback) {
    return requested == 0 ? fallback : requested;
}

double bound_or(double requested, double fallback) {
    return requested > 0.0 ? requested : fallback;
}

}  // namespace

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"lqg1d", "lqg2d", "bounded-drift-1d", "doublewell-1d"};
    return names;
}

ControlProblem preset(const std::string& name, const PresetOptions& options) {
    if (name == "lqg1d") {
        auto p = unit_noise_base(name, 1);
        const double ub = bound_or(options.control_bound, 4.0);
        p.controls = ControlSet::uniform(-ub, ub, points_or(options.control_points, 41));
        p.cost = [](const Vec2& x, const Control& u) { return x[0] * x[0] + u[0] * u[0]; };
        // V = x^2 solves (1/2) V'' + min_u (u V' + u^2) + x^2 = 1.
        p.exact = ExactSolution{
            1.0, [](const Vec2& x) { return x[0] * x[0]; }, [](const Vec2& x) { return Control{-x[0], 0.0}; }};
        return p;
    }
    if (name == "lqg2d") {
        auto p = unit_noise_base(name, 2);
        const double ub = bound_or(options.control_bound, 4.0);
        p.controls = ControlSet::uniform_square(-ub, ub, points_or(options.control_points, 21));
        p.cost = [](const Vec2& x, const Control& u) {
            return x[0] * x[0] + x[1] * x[1] + u[0] * u[0] + u[1] * u[1];
        };
        p.exact = ExactSolution{2.0, [](const Vec2& x) { return x[0] * x[0] + x[1] * x[1]; },
                                [](const Vec2& x) { return Control{-x[0], -x[1]}; }};
        return p;
    }
    if (name == "bounded-drift-1d") {
        auto p = unit_noise_base(name, 1);
        const double ub = bound_or(options.control_bound, 1.0);
        p.controls = ControlSet::uniform(-ub, ub, points_or(options.control_points, 41));
        p.cost = [](const Vec2& x, const Control&) { return x[0] * x[0]; };
        return p;
    }
    if (name == "doublewell-1d") {
        auto p = unit_noise_base(name, 1);
        const double ub = bound_or(options.control_bound, 4.0);
        p.controls = ControlSet::uniform(-ub, ub, points_or(options.control_points, 41));
        p.cost = [](const Vec2& x, const Control& u) {
            const double w = x[0] * x[0] - 1.0;
            return w * w + u[0] * u[0];
        };
        return p;
    }
    std::ostringstream os;
    os << "unknown preset '" << name << "' (expected one of:";
    for (const auto& n : preset_names()) os << ' ' << n;
    os << ')';
    throw ConfigError(os.str());
}

void validate_on_grid(const ControlProblem& problem, const GridSpec& grid) {
    if (problem.dim != grid.dim()) throw ConfigError("problem and grid dimensions differ");
    if (problem.controls.size() == 0) throw ConfigError("control set is empty");
    for (std::size_t n = 0; n < grid.size(); ++n) {
        const Vec2 x = grid.coordinate(n);
        const Mat2 a = problem.diffusion(x);
        bool ok = std::isfinite(a[0][0]) && a[0][0] > 0.0;
        if (problem.dim == 2) {
            const double det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            ok = ok && std::isfinite(a[1][1]) && std::isfinite(a[0][1]) && a[0][1] == a[1][0] && det > 0.0;
        }
        if (!ok) throw ConfigError("diffusion matrix not symmetric positive definite at node " + std::to_string(n));
        for (std::size_t k = 0; k < problem.controls.size(); ++k) {
            const auto& u = problem.controls[k];
            const double r = problem.cost(x, u);
            const Vec2 b = problem.drift(x, u);
            if (!std::isfinite(r) || r < 0.0) {
                throw ConfigError("cost negative or non-finite at node " + std::to_string(n) + ", control " +
                                  std::to_string(k));
            }
            for (int i = 0; i < problem.dim; ++i) {
                if (!std::isfinite(b[i])) {
                    throw ConfigError("drift non-finite at node " + std::to_string(n) + ", control " +
                                      std::to_string(k));
                }
            }
        }
    }
}

LevelSet near_monotone_level_set(const ControlProblem& problem, double rho, const GridSpec& grid) {
    LevelSet out;
    out.margin = std::numeric_limits<double>::infinity();
    out.bounding_box.dim = grid.dim();
    Vec2 lo{}, hi{};
    for (int i = 0; i < grid.dim(); ++i) {
        lo[i] = std::numeric_limits<double>::infinity();
        hi[i] = -std::numeric_limits<double>::infinity();
    }
    for (std::size_t n = 0; n < grid.size(); ++n) {
        const Vec2 x = grid.coordinate(n);
        const double excess = problem.min_cost(x) - rho;
        if (excess <= 0.0) {
            out.nodes.push_back(n);
            if (grid.on_boundary(n)) out.strictly_inside = false;
            for (int i = 0; i < grid.dim(); ++i) {
                lo[i] = std::min(lo[i], x[i]);
                hi[i] = std::max(hi[i], x[i]);
            }
        } else {
            out.margin = std::min(out.margin, excess);
        }
    }
    out.bounding_box.lower = lo;
    out.bounding_box.upper = hi;
    return out;
}

}  // namespace rvi
