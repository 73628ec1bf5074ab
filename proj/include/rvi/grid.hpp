// SPDX-License-Identifier: MIT
/**
 * @file grid.hpp
 * @brief Truncated rectangular grids over R^d (d = 1, 2) and sampled fields.
 *
 * Nodes are stored axis-0 fastest: index = i0 + n0 * i1. The truncation box
 * must contain the origin on a node; that node is the anchor used by the
 * relative value iteration.
 */
#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace rvi {

inline constexpr int kMaxDim = 2;

/// Point in R^d, unused trailing components are zero.
using Vec2 = std::array<double, kMaxDim>;
/// Symmetric d x d matrix, row-major, unused entries zero.
using Mat2 = std::array<std::array<double, kMaxDim>, kMaxDim>;

/// Axis-aligned box [lower, upper] in R^d.
struct Box {
    int dim = 1;
    Vec2 lower{};
    Vec2 upper{};

    bool contains(const Vec2& x, double slack = 0.0) const;
    /// Centered cube of half-width `radius`.
    static Box centered(int dim, double radius);
};

class GridSpec {
public:
    GridSpec() = default;

    /// Throws ConfigError unless the box contains the origin on a node. A
    /// single-node axis must be the degenerate interval [0, 0].
    GridSpec(int dim, Vec2 lower, Vec2 upper, std::array<std::size_t, kMaxDim> n);

    /// Grid over [-half_width, half_width]^dim with spacing h on every axis.
    static GridSpec centered(int dim, double half_width, double h);

    int dim() const { return dim_; }
    const Vec2& lower() const { return lower_; }
    const Vec2& upper() const { return upper_; }
    std::size_t nodes_along(int axis) const { return n_[axis]; }
    double spacing(int axis) const { return h_[axis]; }
    std::size_t size() const;
    std::size_t anchor_index() const { return anchor_; }
    Box box() const { return Box{dim_, lower_, upper_}; }

    /// Per-axis integer coordinates of a node.
    std::array<std::size_t, kMaxDim> multi_index(std::size_t node) const;
    std::size_t flat_index(const std::array<std::size_t, kMaxDim>& idx) const;
    Vec2 coordinate(std::size_t node) const;
    /// True when the node lies on any face of the truncation box.
    bool on_boundary(std::size_t node) const;
    /// Nearest node to x after clamping into the box.
    std::size_t nearest_node(const Vec2& x) const;

    bool operator==(const GridSpec& other) const = default;

private:
    int dim_ = 1;
    Vec2 lower_{};
    Vec2 upper_{};
    std::array<std::size_t, kMaxDim> n_{1, 1};
    Vec2 h_{};
    std::size_t anchor_ = 0;
};

/// A real function sampled at every node of a grid.
class Field {
public:
    Field() = default;
    explicit Field(GridSpec grid, double fill = 0.0);
    Field(GridSpec grid, std::vector<double> values);

    /// Samples f at every node coordinate.
    static Field sample(const GridSpec& grid, const std::function<double(const Vec2&)>& f);

    const GridSpec& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    double at_anchor() const { return values_[grid_.anchor_index()]; }

    double min() const;
    double max() const;
    bool all_finite() const;
    /// Multilinear interpolation, x clamped into the box.
    double interpolate(const Vec2& x) const;

    Field& operator+=(double c);
    Field& operator-=(double c);
    friend Field operator+(Field f, double c) { return f += c; }
    friend Field operator-(Field f, double c) { return f -= c; }
    friend Field operator+(const Field& a, const Field& b);
    friend Field operator-(const Field& a, const Field& b);
    friend Field operator*(double c, Field f);

private:
    GridSpec grid_;
    std::vector<double> values_;
};

/// Throws DimensionError when the grids differ.
void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what);

}  // namespace rvi
