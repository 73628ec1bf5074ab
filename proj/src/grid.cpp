// SPDX-License-Identifier: MIT
#include "rvi/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rvi/error.hpp"

namespace rvi {

bool Box::contains(const Vec2& x, double slack) const {
    for (int i = 0; i < dim; ++i) {
        if (x[i] < lower[i] - slack || x[i] > upper[i] + slack) return false;
    }
    return true;
}

Box Box::centered(int dim, double radius) {
    Box b;
    b.dim = dim;
    for (int i = 0; i < dim; ++i) {
        b.lower[i] = -radius;
        b.upper[i] = radius;
    }
    return b;
}

GridSpec::GridSpec(int dim, Vec2 lower, Vec2 upper, std::array<std::size_t, kMaxDim> n)
    : dim_(dim), lower_(lower), upper_(upper), n_(n) {
    if (dim < 1 || dim > kMaxDim) throw ConfigError("grid dimension must be 1 or 2");
    std::array<std::size_t, kMaxDim> anchor_idx{0, 0};
    for (int i = 0; i < kMaxDim; ++i) {
        if (i >= dim) {
            lower_[i] = upper_[i] = 0.0;
            n_[i] = 1;
            h_[i] = 0.0;
            continue;
        }
        if (n_[i] < 1) throw ConfigError("grid needs at least one node per axis");
        if (n_[i] == 1) {
            if (lower_[i] != 0.0 || upper_[i] != 0.0) throw ConfigError("a single-node axis must sit at the origin");
            h_[i] = 0.0;
            continue;
        }
        if (!(lower_[i] <= 0.0 && upper_[i] >= 0.0 && lower_[i] < upper_[i])) {
            std::ostringstream os;
            os << "grid axis " << i << " bounds [" << lower_[i] << ", " << upper_[i] << "] must contain the origin";
            throw ConfigError(os.str());
        }
        h_[i] = (upper_[i] - lower_[i]) / static_cast<double>(n_[i] - 1);
        const double k = -lower_[i] / h_[i];
        const double kr = std::round(k);
        if (std::abs(k - kr) > 1e-9 * std::max(1.0, k)) {
            throw ConfigError("origin does not fall on a grid node along axis " + std::to_string(i));
        }
        anchor_idx[i] = static_cast<std::size_t>(kr);
    }
    anchor_ = flat_index(anchor_idx);
}

GridSpec GridSpec::centered(int dim, double half_width, double h) {
    if (!(half_width > 0.0) || !(h > 0.0)) throw ConfigError("grid half-width and spacing must be positive");
    const double cells = half_width / h;
    const double cr = std::round(cells);
    if (std::abs(cells - cr) > 1e-9 * std::max(1.0, cells) || cr < 1) {
        throw ConfigError("half-width must be an integer multiple of the spacing");
    }
    const auto n = static_cast<std::size_t>(2 * cr + 1);
    Vec2 lo{}, hi{};
    std::array<std::size_t, kMaxDim> counts{1, 1};
    for (int i = 0; i < dim; ++i) {
        lo[i] = -half_width;
        hi[i] = half_width;
        counts[i] = n;
    }
    return GridSpec(dim, lo, hi, counts);
}

std::size_t GridSpec::size() const {
    std::size_t s = 1;
    for (int i = 0; i < dim_; ++i) s *= n_[i];
    return s;
}

std::array<std::size_t, kMaxDim> GridSpec::multi_index(std::size_t node) const {
    return {node % n_[0], node / n_[0]};
}

std::size_t GridSpec::flat_index(const std::array<std::size_t, kMaxDim>& idx) const {
    return idx[0] + n_[0] * idx[1];
}

Vec2 GridSpec::coordinate(std::size_t node) const {
    const auto idx = multi_index(node);
    Vec2 x{};
    for (int i = 0; i < dim_; ++i) {
        // Anchor-relative so the origin is exactly 0.
        const auto anchor_i = multi_index(anchor_)[i];
        x[i] = (static_cast<double>(idx[i]) - static_cast<double>(anchor_i)) * h_[i];
    }
    return x;
}

bool GridSpec::on_boundary(std::size_t node) const {
    const auto idx = multi_index(node);
    for (int i = 0; i < dim_; ++i) {
        if (idx[i] == 0 || idx[i] + 1 == n_[i]) return true;
    }
    return false;
}

std::size_t GridSpec::nearest_node(const Vec2& x) const {
    std::array<std::size_t, kMaxDim> idx{0, 0};
    for (int i = 0; i < dim_; ++i) {
        if (n_[i] == 1) continue;
        const double k = std::round((x[i] - lower_[i]) / h_[i]);
        const double kc = std::clamp(k, 0.0, static_cast<double>(n_[i] - 1));
        idx[i] = static_cast<std::size_t>(kc);
    }
    return flat_index(idx);
}

Field::Field(GridSpec grid, double fill) : grid_(std::move(grid)), values_(grid_.size(), fill) {}

Field::Field(GridSpec grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
        throw DimensionError("field has " + std::to_string(values_.size()) + " values for a grid of " +
                             std::to_string(grid_.size()) + " nodes");
    }
}

Field Field::sample(const GridSpec& grid, const std::function<double(const Vec2&)>& f) {
    Field out(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] = f(grid.coordinate(i));
    return out;
}

double Field::min() const { return *std::min_element(values_.begin(), values_.end()); }
double Field::max() const { return *std::max_element(values_.begin(), values_.end()); }

bool Field::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double Field::interpolate(const Vec2& x) const {
    const int d = grid_.dim();
    std::array<std::size_t, kMaxDim> lo{0, 0};
    std::array<std::size_t, kMaxDim> hi{0, 0};
    Vec2 frac{};
    for (int i = 0; i < d; ++i) {
        const auto n = grid_.nodes_along(i);
        if (n == 1) continue;  // degenerate axis
        const double s = std::clamp((x[i] - grid_.lower()[i]) / grid_.spacing(i), 0.0,
                                    static_cast<double>(n - 1));
        auto k = static_cast<std::size_t>(std::floor(s));
        if (k >= n - 1) k = n - 2;
        lo[i] = k;
        hi[i] = k + 1;
        frac[i] = s - static_cast<double>(k);
    }
    const auto at = [&](std::size_t i0, std::size_t i1) { return values_[grid_.flat_index({i0, i1})]; };
    const double v0 = at(lo[0], lo[1]) + frac[0] * (at(hi[0], lo[1]) - at(lo[0], lo[1]));
    if (d == 1) return v0;
    const double v1 = at(lo[0], hi[1]) + frac[0] * (at(hi[0], hi[1]) - at(lo[0], hi[1]));
    return v0 + frac[1] * (v1 - v0);
}

Field& Field::operator+=(double c) {
    for (auto& v : values_) v += c;
    return *this;
}

Field& Field::operator-=(double c) {
    for (auto& v : values_) v -= c;
    return *this;
}

Field operator+(const Field& a, const Field& b) {
    require_same_grid(a.grid(), b.grid(), "field addition");
    Field out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
    return out;
}

Field operator-(const Field& a, const Field& b) {
    require_same_grid(a.grid(), b.grid(), "field subtraction");
    Field out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
    return out;
}

Field operator*(double c, Field f) {
    for (auto& v : f.values()) v *= c;
    return f;
}

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what) {
    if (!(a == b)) throw DimensionError(std::string(what) + ": grids differ");
}

}  // namespace rvi
