#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "calculus.hpp"
#include "cg.hpp"
#include "core.hpp"
#include "field.hpp"
#include "grid.hpp"

namespace wel {

enum class WeightFamily { PowerProduct, GreenExponential, Sampled };

inline const char* to_string(WeightFamily f) {
    switch (f) {
        case WeightFamily::PowerProduct: return "power_product";
        case WeightFamily::GreenExponential: return "green_exponential";
        case WeightFamily::Sampled: return "sampled";
    }
    return "unknown";
}

struct WeightOptions {
    double omega_tol = 1e-12;  ///< omega below this is a zero of the weight
    double g_tol = 1e-8;       ///< |grad omega| below this is a critical point
    CgOptions cg{1e-12, 200000};
};

struct WeightProvenance {
    WeightFamily family = WeightFamily::Sampled;
    std::vector<SnappedPoint> points;
    std::vector<double> alphas;
};

/// A sampled weight omega >= 0 with its gradient, kappa and the node sets
/// where omega vanishes (singular) or grad omega vanishes (critical).
struct Weight {
    ScalarField omega;
    OneForm grad_omega;
    ScalarField grad_norm;
    ScalarField kappa;
    std::optional<double> kappa_constant;
    std::vector<std::size_t> singular_nodes;
    std::vector<std::size_t> critical_nodes;
    std::vector<std::uint8_t> node_flags;  // bit 0 singular, bit 1 critical
    WeightProvenance provenance;
    WeightOptions options;

    const Grid2D& grid() const { return omega.grid(); }
    const GridPtr& grid_ptr() const { return omega.grid_ptr(); }
    bool singular(std::size_t k) const { return (node_flags[k] & 1u) != 0; }
    bool critical(std::size_t k) const { return (node_flags[k] & 2u) != 0; }
    bool excluded(std::size_t k) const { return node_flags[k] != 0; }

    /// Max of omega over interior nodes.
    double sup_omega() const {
        double m = 0.0;
        for (std::size_t k : grid().interior_nodes()) m = std::max(m, omega[k]);
        return m;
    }

    /// c * omega (c > 0). kappa is unchanged since ln(c omega) differs by a constant.
    Weight scaled(double c) const {
        if (!(c > 0.0)) throw InvalidArgument("weight scale must be positive");
        Weight w = *this;
        w.omega *= c;
        w.grad_omega *= c;
        w.grad_norm *= c;
        return w;
    }

    /// The same samples on a lattice-compatible grid (typically one with a conformal factor).
    Weight on(const GridPtr& grid) const {
        Weight w = *this;
        w.omega = omega.on(grid);
        w.grad_omega = grad_omega.on(grid);
        w.grad_norm = grad_norm.on(grid);
        w.kappa = kappa.on(grid);
        return w;
    }
};

namespace detail {

// Bilinear interpolant of a vector field over the unit square; true when it
// has a zero in the closed cell.
inline bool bilinear_has_zero(const std::array<Vec2, 4>& v) {
    // corners: v[0] = (0,0), v[1] = (1,0), v[2] = (0,1), v[3] = (1,1)
    auto sign_change = [](double a, double b, double c, double d) {
        const double lo = std::min({a, b, c, d}), hi = std::max({a, b, c, d});
        return lo <= 0.0 && hi >= 0.0;
    };
    if (!sign_change(v[0].x, v[1].x, v[2].x, v[3].x) || !sign_change(v[0].y, v[1].y, v[2].y, v[3].y)) return false;

    double scale = 0.0;
    for (const Vec2& c : v) scale = std::max(scale, norm(c));
    if (scale == 0.0) return true;

    auto F = [&](double s, double t) {
        return (1 - s) * (1 - t) * v[0] + s * (1 - t) * v[1] + (1 - s) * t * v[2] + s * t * v[3];
    };
    const std::array<Vec2, 5> starts{{{0.5, 0.5}, {0.1, 0.1}, {0.9, 0.1}, {0.1, 0.9}, {0.9, 0.9}}};
    for (const Vec2& start : starts) {
        double s = start.x, t = start.y;
        for (int it = 0; it < 40; ++it) {
            const Vec2 f = F(s, t);
            if (norm(f) <= 1e-13 * scale) break;
            const Vec2 ds = (1 - t) * (v[1] - v[0]) + t * (v[3] - v[2]);
            const Vec2 dt = (1 - s) * (v[2] - v[0]) + s * (v[3] - v[1]);
            const double det = ds.x * dt.y - dt.x * ds.y;
            if (std::abs(det) < 1e-300) break;
            s -= (f.x * dt.y - dt.x * f.y) / det;
            t -= (ds.x * f.y - f.x * ds.y) / det;
            if (!std::isfinite(s) || !std::isfinite(t)) break;
        }
        const double slack = 1e-9;
        if (std::isfinite(s) && std::isfinite(t) && s >= -slack && s <= 1 + slack && t >= -slack && t <= 1 + slack &&
            norm(F(s, t)) <= 1e-10 * scale)
            return true;
    }
    return false;
}

/// Fills grad_norm, the singular/critical sets and node_flags.
inline void classify_nodes(Weight& w) {
    const Grid2D& g = w.grid();
    const std::size_t n = g.size();
    w.grad_norm = ScalarField(w.grid_ptr());
    for (std::size_t k = 0; k < n; ++k) w.grad_norm[k] = norm(w.grad_omega.at(k));

    w.node_flags.assign(n, 0);
    for (std::size_t k = 0; k < n; ++k)
        if (w.omega[k] < w.options.omega_tol) w.node_flags[k] |= 1u;
    // Nodes within one cell of a prescribed zero/pole location.
    const double reach = g.h() * (1.0 + 1e-9);
    for (const SnappedPoint& sp : w.provenance.points) {
        const int ic = static_cast<int>(std::floor((sp.used.x - g.origin().x) / g.h()));
        const int jc = static_cast<int>(std::floor((sp.used.y - g.origin().y) / g.h()));
        for (int j = jc - 1; j <= jc + 2; ++j)
            for (int i = ic - 1; i <= ic + 2; ++i) {
                if (i < 0 || j < 0 || i >= g.nx() || j >= g.ny()) continue;
                const std::size_t k = g.index(i, j);
                if (norm(g.node(k) - sp.used) <= reach) w.node_flags[k] |= 1u;
            }
    }

    for (std::size_t k : g.interior_nodes())
        if (!(w.node_flags[k] & 1u) && w.grad_norm[k] < w.options.g_tol) w.node_flags[k] |= 2u;

    // Cells whose bilinear gradient interpolant vanishes inside contain a
    // critical point that no node resolves.
    const std::size_t sy = g.stride_y();
    for (int j = 0; j + 1 < g.ny(); ++j) {
        for (int i = 0; i + 1 < g.nx(); ++i) {
            const std::size_t k0 = g.index(i, j);
            const std::array<std::size_t, 4> c{k0, k0 + 1, k0 + sy, k0 + sy + 1};
            bool usable = true;
            for (std::size_t k : c) usable = usable && g.interior(k) && !(w.node_flags[k] & 1u);
            if (!usable) continue;
            const std::array<Vec2, 4> v{w.grad_omega.at(c[0]), w.grad_omega.at(c[1]), w.grad_omega.at(c[2]),
                                        w.grad_omega.at(c[3])};
            if (bilinear_has_zero(v))
                for (std::size_t k : c) w.node_flags[k] |= 2u;
        }
    }

    w.singular_nodes.clear();
    w.critical_nodes.clear();
    for (std::size_t k = 0; k < n; ++k) {
        if (w.node_flags[k] & 1u) w.singular_nodes.push_back(k);
        else if (w.node_flags[k] & 2u) w.critical_nodes.push_back(k);
    }
}

inline Weight make_weight(ScalarField omega, OneForm grad, ScalarField kappa, std::optional<double> kappa_constant,
                          WeightProvenance prov, const WeightOptions& opt) {
    GridPtr grid = omega.grid_ptr();
    Weight w{std::move(omega), std::move(grad), ScalarField(grid), std::move(kappa), kappa_constant, {}, {}, {},
             std::move(prov), opt};
    classify_nodes(w);
    return w;
}

}  // namespace detail

/// omega(x) = prod_i |x - x_i|^{alpha_i}; kappa = 0. Points landing on a node
/// are moved by (h/2, h/2) first.
inline Weight power_product_weight(const std::vector<Point>& points, const std::vector<double>& alphas,
                                   const GridPtr& grid, const WeightOptions& opt = {}) {
    if (points.empty() || points.size() != alphas.size())
        throw InvalidArgument("power product weight needs matching, non-empty points and exponents");
    WeightProvenance prov{WeightFamily::PowerProduct, {}, alphas};
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!(alphas[i] > 0.0)) throw InvalidArgument("weight exponents must be positive");
        if (!grid->in_bounding_box(points[i])) throw InvalidArgument("weight point lies outside the domain");
        prov.points.push_back(offset_from_nodes(*grid, points[i]));
    }

    ScalarField omega(grid);
    OneForm grad(grid);
    for (std::size_t k = 0; k < grid->size(); ++k) {
        const Point x = grid->node(k);
        double log_omega = 0.0;
        Vec2 dlog{};
        for (std::size_t i = 0; i < prov.points.size(); ++i) {
            const Vec2 d = x - prov.points[i].used;
            const double r2 = dot(d, d);
            log_omega += 0.5 * alphas[i] * std::log(r2);
            dlog += (alphas[i] / r2) * d;
        }
        omega[k] = std::exp(log_omega);
        grad.set(k, omega[k] * dlog);
    }
    return detail::make_weight(std::move(omega), std::move(grad), ScalarField(grid), 0.0, std::move(prov), opt);
}

/// Discrete Dirichlet Green's function: -Delta_h G = delta_p / h^2 with the unit
/// mass on the node nearest p, G = 0 off the interior mask. The flat operator is
/// used because the 2D Green's function is conformally invariant.
inline ScalarField green_function(const GridPtr& grid, Point p, const CgOptions& opt = {1e-12, 200000}) {
    const Grid2D& g = *grid;
    const int i = static_cast<int>(std::lround((p.x - g.origin().x) / g.h()));
    const int j = static_cast<int>(std::lround((p.y - g.origin().y) / g.h()));
    if (i < 0 || j < 0 || i >= g.nx() || j >= g.ny() || !g.interior(g.index(i, j)))
        throw InvalidArgument("Green's function pole must lie in the interior");
    const std::size_t source = g.index(i, j);

    DirichletLaplacian op(grid);
    std::vector<double> rhs(op.size(), 0.0);
    rhs[static_cast<std::size_t>(g.dof(source))] = 1.0 / (g.h() * g.h());
    const auto inv_diag = op.inverse_diagonal();
    CgResult r = conjugate_gradient(op, rhs, opt, inv_diag);
    return from_dofs(grid, r.x);
}

/// omega = exp(-sum_i alpha_i G_{p_i}); kappa = 0 away from the poles.
/// An empty list gives omega = 1.
inline Weight green_exponential_weight(const std::vector<Point>& points, const std::vector<double>& alphas,
                                       const GridPtr& grid, const WeightOptions& opt = {}) {
    if (points.size() != alphas.size()) throw InvalidArgument("points and exponents differ in length");
    WeightProvenance prov{WeightFamily::GreenExponential, {}, alphas};
    ScalarField log_omega(grid);
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!(alphas[i] > 0.0)) throw InvalidArgument("weight exponents must be positive");
        prov.points.push_back({points[i], points[i], false});
        log_omega -= alphas[i] * green_function(grid, points[i], opt.cg);
    }
    ScalarField omega(grid);
    for (std::size_t k = 0; k < grid->size(); ++k) omega[k] = std::exp(log_omega[k]);
    OneForm grad = gradient(log_omega).scaled_by(omega);
    return detail::make_weight(std::move(omega), std::move(grad), ScalarField(grid), 0.0, std::move(prov), opt);
}

/// Weight from raw samples. The gradient is taken by centered differences. When
/// `kappa` is not given it is estimated as -Delta_g ln(omega) (a diagnostic).
inline Weight sampled_weight(const ScalarField& omega, std::optional<double> kappa = std::nullopt,
                             const WeightOptions& opt = {}) {
    const GridPtr& grid = omega.grid_ptr();
    for (double v : omega.values())
        if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("weight samples must be finite and non-negative");
    OneForm grad = gradient(omega);
    ScalarField kap(grid, kappa.value_or(0.0));
    if (!kappa) {
        ScalarField log_omega(grid);
        for (std::size_t k = 0; k < grid->size(); ++k)
            log_omega[k] = omega[k] > opt.omega_tol ? std::log(omega[k]) : std::log(opt.omega_tol);
        kap = laplacian(log_omega);
        kap *= -1.0;
    }
    return detail::make_weight(omega, std::move(grad), std::move(kap), kappa,
                               WeightProvenance{WeightFamily::Sampled, {}, {}}, opt);
}

struct WeakResidual {
    double value = 0.0;
    bool flagged = false;  ///< test function touches a singular node or its neighbours
};

/// Quadrature of the weak weight equation against phi:
///   integral (4|grad omega|_g^2 - 2 kappa omega^2) phi - omega^2 Delta_g phi dvol_g.
/// Only the samples of omega are used (|grad omega| by centered differences), so
/// the residual checks the sampled weight rather than its construction.
/// The last term is summed as integral Delta_h(omega^2) phi, which equals the
/// direct form for phi vanishing near the boundary and is exactly zero for
/// constant omega.
inline WeakResidual weak_equation_residual(const Weight& w, const ScalarField& kappa, const ScalarField& phi) {
    const Grid2D& g = w.grid();
    if (!phi.grid().same_lattice(g) || !kappa.grid().same_lattice(g)) throw InvalidArgument("lattice mismatch");
    const std::size_t sy = g.stride_y();
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (phi[k] == 0.0) continue;
        const bool inner = g.interior(k) && g.interior(k + 1) && g.interior(k - 1) && g.interior(k + sy) &&
                           g.interior(k - sy);
        if (!inner) throw InvalidArgument("test function must vanish within one cell of the boundary");
    }

    ScalarField omega_sq(w.grid_ptr());
    for (std::size_t k = 0; k < g.size(); ++k) omega_sq[k] = w.omega[k] * w.omega[k];
    const OneForm d_omega = gradient(w.omega);
    const double inv_h2 = 1.0 / (g.h() * g.h());

    WeakResidual out;
    double s = 0.0;
    for (std::size_t k : g.interior_nodes()) {
        if (phi[k] == 0.0) continue;
        const Vec2 dw = d_omega.at(k);
        const double c = omega_sq[k];
        const double lap = ((omega_sq[k + 1] - c) + (omega_sq[k - 1] - c)) +
                           ((omega_sq[k + sy] - c) + (omega_sq[k - sy] - c));
        // 4|dw|_g^2 dvol_g = 4|dw|^2 dx, Delta_g phi dvol_g = Delta phi dx
        s += (4.0 * dot(dw, dw) - 2.0 * kappa[k] * c * g.area_factor(k)) * phi[k] - lap * inv_h2 * phi[k];
        if (w.singular(k) || w.singular(k + 1) || w.singular(k - 1) || w.singular(k + sy) || w.singular(k - sy))
            out.flagged = true;
    }
    out.value = s * g.h() * g.h();
    return out;
}

inline WeakResidual weak_equation_residual(const Weight& w, const ScalarField& phi) {
    return weak_equation_residual(w, w.kappa, phi);
}

}  // namespace wel
