#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <memory>
#include <ostream>
#include <span>
#include <vector>

#include "core.hpp"

namespace wel {

/// Uniform square lattice over a bounding rectangle, with an interior mask
/// selecting the degrees of freedom and an optional conformal exponent psi
/// (metric g = e^{2 psi} delta). Immutable once built.
///
/// Nodes are stored row-major: k = j * nx + i, x = origin.x + i h.
class Grid2D {
public:
    Grid2D(int nx, int ny, double h, Point origin, std::vector<std::uint8_t> mask,
           std::vector<double> psi = {})
        : nx_(nx), ny_(ny), h_(h), origin_(origin), mask_(std::move(mask)), psi_(std::move(psi)) {
        if (nx < 4 || ny < 4) throw InvalidArgument("grid needs at least 4 nodes per axis");
        if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("grid spacing must be positive");
        if (mask_.size() != size()) throw InvalidArgument("mask size does not match lattice");
        if (!psi_.empty() && psi_.size() != size())
            throw InvalidArgument("conformal exponent size does not match lattice");

        index_.assign(size(), -1);
        for (int j = 0; j < ny_; ++j) {
            for (int i = 0; i < nx_; ++i) {
                const std::size_t k = index(i, j);
                if (!mask_[k]) continue;
                if (i == 0 || j == 0 || i == nx_ - 1 || j == ny_ - 1)
                    throw InvalidArgument("interior node on the lattice edge");
                index_[k] = static_cast<std::int64_t>(interior_.size());
                interior_.push_back(k);
            }
        }
        if (!psi_.empty()) {
            area_.resize(size());
            inv_area_.resize(size());
            for (std::size_t k = 0; k < size(); ++k) {
                if (!std::isfinite(psi_[k])) throw InvalidArgument("conformal exponent not finite");
                area_[k] = std::exp(2.0 * psi_[k]);
                inv_area_[k] = std::exp(-2.0 * psi_[k]);
            }
        }
    }

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double h() const { return h_; }
    Point origin() const { return origin_; }
    std::size_t size() const { return static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_); }

    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(i);
    }
    int column(std::size_t k) const { return static_cast<int>(k % static_cast<std::size_t>(nx_)); }
    int row(std::size_t k) const { return static_cast<int>(k / static_cast<std::size_t>(nx_)); }
    std::size_t stride_x() const { return 1; }
    std::size_t stride_y() const { return static_cast<std::size_t>(nx_); }

    Point node(int i, int j) const { return {origin_.x + i * h_, origin_.y + j * h_}; }
    Point node(std::size_t k) const { return node(column(k), row(k)); }

    bool interior(std::size_t k) const { return mask_[k] != 0; }
    const std::vector<std::uint8_t>& mask() const { return mask_; }
    /// Interior nodes in increasing node order; position in this list is the dof index.
    const std::vector<std::size_t>& interior_nodes() const { return interior_; }
    std::size_t interior_count() const { return interior_.size(); }
    /// Dof index of node k, or -1 for boundary nodes.
    std::int64_t dof(std::size_t k) const { return index_[k]; }

    bool has_conformal_factor() const { return !psi_.empty(); }
    double psi(std::size_t k) const { return psi_.empty() ? 0.0 : psi_[k]; }
    /// e^{2 psi}: dvol_g = area_factor dx.
    double area_factor(std::size_t k) const { return area_.empty() ? 1.0 : area_[k]; }
    /// e^{-2 psi}: Delta_g = inv_area_factor Delta, |df|_g^2 = inv_area_factor |df|^2.
    double inv_area_factor(std::size_t k) const { return inv_area_.empty() ? 1.0 : inv_area_[k]; }
    const std::vector<double>& psi_values() const { return psi_; }

    /// Same node layout and mask; the metric may differ.
    bool same_lattice(const Grid2D& o) const {
        return nx_ == o.nx_ && ny_ == o.ny_ && h_ == o.h_ && origin_ == o.origin_ && mask_ == o.mask_;
    }

    /// Closed extent of the lattice, used for "point inside the domain" checks.
    bool in_bounding_box(Point p) const {
        const double tol = 1e-12 * h_;
        return p.x >= origin_.x - tol && p.y >= origin_.y - tol &&
               p.x <= origin_.x + (nx_ - 1) * h_ + tol && p.y <= origin_.y + (ny_ - 1) * h_ + tol;
    }

    /// Boundary nodes adjacent to the interior (nearest candidates for distance queries).
    std::vector<std::size_t> boundary_ring() const {
        std::vector<std::size_t> ring;
        for (std::size_t k = 0; k < size(); ++k) {
            if (mask_[k]) continue;
            const int i = column(k), j = row(k);
            const bool touches = (i > 0 && mask_[k - 1]) || (i + 1 < nx_ && mask_[k + 1]) ||
                                 (j > 0 && mask_[k - stride_y()]) || (j + 1 < ny_ && mask_[k + stride_y()]);
            if (touches) ring.push_back(k);
        }
        return ring;
    }

private:
    int nx_;
    int ny_;
    double h_;
    Point origin_;
    std::vector<std::uint8_t> mask_;
    std::vector<double> psi_;
    std::vector<double> area_;
    std::vector<double> inv_area_;
    std::vector<std::size_t> interior_;
    std::vector<std::int64_t> index_;
};

using GridPtr = std::shared_ptr<const Grid2D>;

/// Lattice spacing for a given nodes-per-unit resolution: h = 1 / (resolution - 1).
inline double spacing_for_resolution(int resolution) { return 1.0 / (resolution - 1); }

/// Resolution giving h = 1 / cells.
constexpr int resolution_for_cells(int cells) { return cells + 1; }

namespace detail {

inline int cells_along(double length, double h) {
    const double n = length / h;
    const double rounded = std::round(n);
    if (std::abs(n - rounded) > 1e-9 * std::max(1.0, n))
        throw InvalidArgument("extent is not a whole number of square cells");
    return static_cast<int>(rounded);
}

}  // namespace detail

/// Rectangle [origin, origin + (width, height)] with a one-node boundary layer.
inline GridPtr build_rectangle(Point origin, double width, double height, int resolution) {
    if (!(width > 0.0) || !(height > 0.0)) throw InvalidArgument("rectangle size must be positive");
    if (resolution < 4) throw InvalidArgument("resolution must be at least 4");
    const double h = spacing_for_resolution(resolution);
    const int nx = detail::cells_along(width, h) + 1;
    const int ny = detail::cells_along(height, h) + 1;
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(nx) * ny, 0);
    for (int j = 1; j < ny - 1; ++j)
        for (int i = 1; i < nx - 1; ++i) mask[static_cast<std::size_t>(j) * nx + i] = 1;
    return std::make_shared<const Grid2D>(nx, ny, h, origin, std::move(mask));
}

/// Disk as a masked bounding box. The center is a lattice node; interior nodes
/// satisfy |x - center| < radius - h/2.
inline GridPtr build_disk(Point center, double radius, int resolution) {
    if (resolution < 4) throw InvalidArgument("resolution must be at least 4");
    const double h = spacing_for_resolution(resolution);
    if (!(radius > 2.0 * h)) throw InvalidArgument("disk radius must exceed two cells");
    const int half = static_cast<int>(std::ceil(radius / h)) + 2;
    const int n = 2 * half + 1;
    const Point origin{center.x - half * h, center.y - half * h};
    const double cutoff = radius - 0.5 * h;
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(n) * n, 0);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const double r = std::hypot((i - half) * h, (j - half) * h);
            mask[static_cast<std::size_t>(j) * n + i] = r < cutoff ? 1 : 0;
        }
    }
    return std::make_shared<const Grid2D>(n, n, h, origin, std::move(mask));
}

/// Result of moving a requested singular point off the lattice.
struct SnappedPoint {
    Point requested;
    Point used;
    bool offset = false;
};

/// Singular points that land on a node are shifted by (h/2, h/2).
inline SnappedPoint offset_from_nodes(const Grid2D& grid, Point p) {
    const double h = grid.h();
    const double fi = (p.x - grid.origin().x) / h;
    const double fj = (p.y - grid.origin().y) / h;
    const double tol = 1e-9;
    const bool on_node = std::abs(fi - std::round(fi)) < tol && std::abs(fj - std::round(fj)) < tol;
    if (!on_node) return {p, p, false};
    return {p, {p.x + 0.5 * h, p.y + 0.5 * h}, true};
}

/// Geometric description of a domain, resolvable at any resolution.
struct DomainSpec {
    enum class Kind { Rectangle, Disk };
    Kind kind = Kind::Disk;
    Point origin{0.0, 0.0};  // rectangle lower-left corner, or disk center
    double width = 1.0;
    double height = 1.0;
    double radius = 1.0;

    static DomainSpec rectangle(Point origin, double width, double height) {
        return {Kind::Rectangle, origin, width, height, 0.0};
    }
    static DomainSpec disk(Point center, double radius) { return {Kind::Disk, center, 0.0, 0.0, radius}; }

    GridPtr build(int resolution) const {
        return kind == Kind::Rectangle ? build_rectangle(origin, width, height, resolution)
                                       : build_disk(origin, radius, resolution);
    }
};

/// CSV dump `x,y,mask[,psi]`, 17 significant digits.
inline void write_grid_csv(std::ostream& os, const Grid2D& grid) {
    const bool psi = grid.has_conformal_factor();
    os << (psi ? "x,y,mask,psi\n" : "x,y,mask\n");
    os << std::setprecision(17);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const Point p = grid.node(k);
        os << p.x << ',' << p.y << ',' << int(grid.interior(k));
        if (psi) os << ',' << grid.psi(k);
        os << '\n';
    }
}

}  // namespace wel
