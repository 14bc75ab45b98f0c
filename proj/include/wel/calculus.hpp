#pragma once

#include <cmath>
#include <cstddef>

#include "field.hpp"
#include "grid.hpp"

// Collocated finite-difference calculus on masked lattices. Derivatives are
// evaluated on interior nodes and are zero elsewhere; every interior node has
// its four lattice neighbours in bounds, so no stencil reads outside the grid
// except the wide Laplacian, which treats off-lattice values as zero.

namespace wel {

/// Centered-difference gradient (coefficients of df).
inline OneForm gradient(const ScalarField& f) {
    const Grid2D& g = f.grid();
    const double inv2h = 0.5 / g.h();
    const std::size_t sy = g.stride_y();
    OneForm w(f.grid_ptr());
    auto a = w.a();
    auto b = w.b();
    for (std::size_t k : g.interior_nodes()) {
        a[k] = (f[k + 1] - f[k - 1]) * inv2h;
        b[k] = (f[k + sy] - f[k - sy]) * inv2h;
    }
    return w;
}

/// Compact 5-point Laplace-Beltrami operator e^{-2 psi} Delta_h. The stencil is
/// summed as differences so that constants map to exactly zero.
inline ScalarField laplacian(const ScalarField& f) {
    const Grid2D& g = f.grid();
    const double inv_h2 = 1.0 / (g.h() * g.h());
    const std::size_t sy = g.stride_y();
    ScalarField out(f.grid_ptr());
    for (std::size_t k : g.interior_nodes()) {
        const double c = f[k];
        const double s = ((f[k + 1] - c) + (f[k - 1] - c)) + ((f[k + sy] - c) + (f[k - sy] - c));
        out[k] = g.inv_area_factor(k) * s * inv_h2;
    }
    return out;
}

/// Laplacian of `f` using the metric of `grid` (lattice must match).
inline ScalarField laplacian(const ScalarField& f, const GridPtr& grid) { return laplacian(f.on(grid)); }

/// Wide Laplacian: composition of centered differences, (f_{i+2} - 2 f_i + f_{i-2}) / 4h^2 per
/// axis, scaled by e^{-2 psi}. Adjoint-exact partner of `gradient` for compactly supported fields.
inline ScalarField laplacian_wide(const ScalarField& f) {
    const Grid2D& g = f.grid();
    const double inv_4h2 = 0.25 / (g.h() * g.h());
    const int nx = g.nx(), ny = g.ny();
    ScalarField out(f.grid_ptr());
    auto val = [&](int i, int j) { return (i < 0 || j < 0 || i >= nx || j >= ny) ? 0.0 : f[g.index(i, j)]; };
    for (std::size_t k : g.interior_nodes()) {
        const int i = g.column(k), j = g.row(k);
        const double c = f[k];
        const double s = ((val(i + 2, j) - c) + (val(i - 2, j) - c)) + ((val(i, j + 2) - c) + (val(i, j - 2) - c));
        out[k] = g.inv_area_factor(k) * s * inv_4h2;
    }
    return out;
}

/// Flat divergence d_x a + d_y b by centered differences.
inline ScalarField divergence(const OneForm& w) {
    const Grid2D& g = w.grid();
    const double inv2h = 0.5 / g.h();
    const std::size_t sy = g.stride_y();
    auto a = w.a();
    auto b = w.b();
    ScalarField out(w.grid_ptr());
    for (std::size_t k : g.interior_nodes())
        out[k] = (a[k + 1] - a[k - 1]) * inv2h + (b[k + sy] - b[k - sy]) * inv2h;
    return out;
}

/// Scalar curl star d w = e^{-2 psi} (d_x b - d_y a).
inline ScalarField curl(const OneForm& w) {
    const Grid2D& g = w.grid();
    const double inv2h = 0.5 / g.h();
    const std::size_t sy = g.stride_y();
    auto a = w.a();
    auto b = w.b();
    ScalarField out(w.grid_ptr());
    for (std::size_t k : g.interior_nodes())
        out[k] = g.inv_area_factor(k) * ((b[k + 1] - b[k - 1]) * inv2h - (a[k + sy] - a[k - sy]) * inv2h);
    return out;
}

/// Hodge star on one-forms in 2D, (a, b) -> (-b, a). Conformally invariant.
inline OneForm hodge_star(const OneForm& w) {
    OneForm out(w.grid_ptr());
    for (std::size_t k = 0; k < w.size(); ++k) out.set(k, perp(w.at(k)));
    return out;
}

/// Transpose of `gradient` under the plain nodal sum: for one-forms supported on
/// interior nodes this is minus the centered divergence, evaluated at every node
/// (including the boundary ring).
inline ScalarField gradient_adjoint(const OneForm& w) {
    const Grid2D& g = w.grid();
    const double inv2h = 0.5 / g.h();
    const std::size_t sy = g.stride_y();
    auto a = w.a();
    auto b = w.b();
    ScalarField out(w.grid_ptr());
    for (std::size_t k : g.interior_nodes()) {
        out[k + 1] += a[k] * inv2h;
        out[k - 1] -= a[k] * inv2h;
        out[k + sy] += b[k] * inv2h;
        out[k - sy] -= b[k] * inv2h;
    }
    return out;
}

/// Midpoint rule over interior nodes: sum f e^{2 psi} h^2.
inline double integrate(const ScalarField& f) {
    const Grid2D& g = f.grid();
    double s = 0.0;
    for (std::size_t k : g.interior_nodes()) s += f[k] * g.area_factor(k);
    return s * g.h() * g.h();
}

/// sqrt of integral |f|^2 dvol_g.
inline double l2_norm(const ScalarField& f) {
    const Grid2D& g = f.grid();
    double s = 0.0;
    for (std::size_t k : g.interior_nodes()) s += f[k] * f[k] * g.area_factor(k);
    return std::sqrt(s) * g.h();
}

/// sqrt of integral |w|_g^2 dvol_g. The metric factors cancel for one-forms in 2D.
inline double l2_norm(const OneForm& w) {
    const Grid2D& g = w.grid();
    auto a = w.a();
    auto b = w.b();
    double s = 0.0;
    for (std::size_t k : g.interior_nodes()) s += a[k] * a[k] + b[k] * b[k];
    return std::sqrt(s) * g.h();
}

/// Integral of <u, v>_g dvol_g over interior nodes (metric factors cancel).
inline double inner(const OneForm& u, const OneForm& v) {
    const Grid2D& g = u.grid();
    double s = 0.0;
    for (std::size_t k : g.interior_nodes()) s += u.a()[k] * v.a()[k] + u.b()[k] * v.b()[k];
    return s * g.h() * g.h();
}

}  // namespace wel
