#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

#include "cg.hpp"
#include "core.hpp"
#include "field.hpp"
#include "grid.hpp"

namespace wel {

struct EigenResult {
    double lambda1 = 0.0;
    int iterations = 0;      ///< outer inverse-iteration steps
    int cg_iterations = 0;   ///< total inner CG iterations
    double h = 0.0;
};

struct EigenOptions {
    double tol = 1e-10;  ///< stop when successive Rayleigh quotients differ by < tol * lambda
    int max_iter = 500;
    CgOptions cg{1e-11, 200000};
};

/// Smallest eigenvalue of the 5-point Dirichlet Laplace-Beltrami operator,
/// -Delta_h u = lambda e^{2 psi} u, by inverse power iteration with CG solves.
inline EigenResult first_dirichlet_eigenvalue(const GridPtr& grid, const EigenOptions& opt = {}) {
    const Grid2D& g = *grid;
    if (g.interior_count() == 0) throw InvalidArgument("grid has no interior");
    DirichletLaplacian op(grid);
    const std::size_t n = op.size();
    std::vector<double> mass(n);
    for (std::size_t d = 0; d < n; ++d) mass[d] = g.area_factor(g.interior_nodes()[d]);
    const auto inv_diag = op.inverse_diagonal();

    auto mass_norm = [&](const std::vector<double>& v) {
        double s = 0.0;
        for (std::size_t d = 0; d < n; ++d) s += mass[d] * v[d] * v[d];
        return std::sqrt(s);
    };

    std::vector<double> x(n, 1.0), rhs(n), ax(n), guess(n);
    const double x_scale = mass_norm(x);
    for (double& v : x) v /= x_scale;

    EigenResult res;
    res.h = g.h();
    double lambda_prev = 0.0;
    double lambda = 0.0;
    for (int it = 1; it <= opt.max_iter; ++it) {
        for (std::size_t d = 0; d < n; ++d) {
            rhs[d] = mass[d] * x[d];
            guess[d] = lambda > 0.0 ? x[d] / lambda : 0.0;
        }
        CgResult solve = conjugate_gradient(op, rhs, opt.cg, inv_diag, guess);
        res.cg_iterations += solve.iterations;
        const double s = mass_norm(solve.x);
        for (std::size_t d = 0; d < n; ++d) x[d] = solve.x[d] / s;
        op(x, ax);
        lambda = detail::dot(x, ax);  // x is mass-normalized
        res.iterations = it;
        if (it > 1 && std::abs(lambda - lambda_prev) < opt.tol * lambda) {
            res.lambda1 = lambda;
            return res;
        }
        lambda_prev = lambda;
    }
    throw SolverFailure("inverse power iteration did not converge", opt.max_iter,
                        std::abs(lambda - lambda_prev) / lambda);
}

/// Field on the truncated half-cylinder [0, t_max] x S^1 stored as Fourier
/// modes m = -M..M in theta, each a complex profile on nt + 1 equispaced t nodes.
class CylinderField {
public:
    CylinderField(double t_max, int nt, int M) : t_max_(t_max), nt_(nt), M_(M) {
        if (!(t_max > 0.0) || nt < 4 || M < 1) throw InvalidArgument("invalid cylinder discretization");
        modes_.assign(static_cast<std::size_t>(2 * M + 1), std::vector<std::complex<double>>(nt + 1));
    }

    /// Samples u(t, theta) and takes the discrete Fourier transform in theta
    /// (4M + 4 samples, so modes up to M are free of aliasing for band-limited u).
    template <class Fn>
    static CylinderField from_function(Fn&& u, double t_max, int nt, int M) {
        CylinderField c(t_max, nt, M);
        const int nth = 4 * M + 4;
        std::vector<double> row(nth);
        for (int k = 0; k <= nt; ++k) {
            const double t = c.t(k);
            for (int j = 0; j < nth; ++j) row[j] = u(t, 2.0 * pi * j / nth);
            c.set_row(k, row);
        }
        return c;
    }

    double t_max() const { return t_max_; }
    int nt() const { return nt_; }
    int max_mode() const { return M_; }
    double dt() const { return t_max_ / nt_; }
    double t(int k) const { return k * dt(); }

    std::vector<std::complex<double>>& mode(int m) { return modes_.at(static_cast<std::size_t>(m + M_)); }
    const std::vector<std::complex<double>>& mode(int m) const { return modes_.at(static_cast<std::size_t>(m + M_)); }

    /// u(t_k, theta) reconstructed from the modes.
    double value(int k, double theta) const {
        double s = 0.0;
        for (int m = -M_; m <= M_; ++m) s += std::real(mode(m)[k] * std::polar(1.0, m * theta));
        return s;
    }

    /// u(t, theta) with linear interpolation in t.
    double value_at(double t, double theta) const {
        if (t < 0.0 || t > t_max_) return 0.0;
        const double s = t / dt();
        const int k = std::min(static_cast<int>(s), nt_ - 1);
        const double w = s - k;
        return (1.0 - w) * value(k, theta) + w * value(k + 1, theta);
    }

    void set_row(int k, const std::vector<double>& samples) {
        const int nth = static_cast<int>(samples.size());
        for (int m = -M_; m <= M_; ++m) {
            std::complex<double> acc{};
            for (int j = 0; j < nth; ++j) {
                const long long phase = (static_cast<long long>(m) * j) % nth;
                acc += samples[j] * std::polar(1.0, -2.0 * pi * static_cast<double>(phase) / nth);
            }
            mode(m)[k] = acc / static_cast<double>(nth);
        }
    }

private:
    double t_max_;
    int nt_;
    int M_;
    std::vector<std::vector<std::complex<double>>> modes_;
};

struct CylinderOptions {
    double t_max = 12.0;
    int nt = 1024;
    int M = 32;
};

namespace detail {

inline double bilinear_sample(const ScalarField& f, Point p) {
    const Grid2D& g = f.grid();
    const double s = (p.x - g.origin().x) / g.h();
    const double t = (p.y - g.origin().y) / g.h();
    const int i = static_cast<int>(std::floor(s));
    const int j = static_cast<int>(std::floor(t));
    if (i < 0 || j < 0 || i + 1 >= g.nx() || j + 1 >= g.ny()) return 0.0;
    const double u = s - i, v = t - j;
    const std::size_t k = g.index(i, j), sy = g.stride_y();
    return (1 - u) * (1 - v) * f[k] + u * (1 - v) * f[k + 1] + (1 - u) * v * f[k + sy] + u * v * f[k + sy + 1];
}

}  // namespace detail

/// Log-polar pull-back of f on the unit disk centered at the origin:
/// u(t, theta) = |x| f(x) with x = e^{-t} (cos theta, sin theta).
inline CylinderField logpolar_transform(const ScalarField& f, const CylinderOptions& opt = {}) {
    const Grid2D& g = f.grid();
    const double r_min = std::exp(-opt.t_max);
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (f[k] == 0.0) continue;
        const double r = norm(g.node(k));
        if (r >= 1.0 || r <= r_min)
            throw InvalidArgument("field support leaves the annulus representable on the cylinder");
    }
    return CylinderField::from_function(
        [&](double t, double theta) {
            const double r = std::exp(-t);
            return r * detail::bilinear_sample(f, {r * std::cos(theta), r * std::sin(theta)});
        },
        opt.t_max, opt.nt, opt.M);
}

/// Inverse of `logpolar_transform`: f(x) = u(-ln|x|, theta) / |x| inside the annulus, 0 elsewhere.
inline ScalarField inverse_logpolar(const CylinderField& u, const GridPtr& grid) {
    ScalarField f(grid);
    const double r_min = std::exp(-u.t_max());
    for (std::size_t k = 0; k < grid->size(); ++k) {
        const Point p = grid->node(k);
        const double r = norm(p);
        if (r >= 1.0 || r <= r_min) continue;
        f[k] = u.value_at(-std::log(r), std::atan2(p.y, p.x)) / r;
    }
    return f;
}

struct CylinderEnergies {
    double zeroth = 0.0;               ///< integral |u|^2 e^{-2 eps t}
    double first = 0.0;                ///< integral (|grad u|^2 + |u|^2) e^{-2 eps t}
    std::optional<double> fourth;      ///< integral |u_tt|^2 + |u_t theta|^2 + 2|u_t|^2 + |u_theta theta + u|^2 (eps = 0)
};

namespace detail {

// Composite Simpson on an even number of intervals, trapezoid otherwise.
inline double integrate_t(const std::vector<double>& v, double dt) {
    const std::size_t n = v.size() - 1;
    if (n % 2 == 0) {
        double s = v.front() + v.back();
        for (std::size_t k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * v[k];
        return s * dt / 3.0;
    }
    double s = 0.5 * (v.front() + v.back());
    for (std::size_t k = 1; k < n; ++k) s += v[k];
    return s * dt;
}

inline std::vector<std::complex<double>> d_dt(const std::vector<std::complex<double>>& u, double dt) {
    const std::size_t n = u.size();
    std::vector<std::complex<double>> d(n);
    for (std::size_t k = 1; k + 1 < n; ++k) d[k] = (u[k + 1] - u[k - 1]) / (2.0 * dt);
    d[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dt);
    d[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * dt);
    return d;
}

inline std::vector<std::complex<double>> d2_dt2(const std::vector<std::complex<double>>& u, double dt) {
    const std::size_t n = u.size();
    std::vector<std::complex<double>> d(n);
    const double inv = 1.0 / (dt * dt);
    for (std::size_t k = 1; k + 1 < n; ++k) d[k] = (u[k + 1] - 2.0 * u[k] + u[k - 1]) * inv;
    d[0] = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) * inv;
    d[n - 1] = (2.0 * u[n - 1] - 5.0 * u[n - 2] + 4.0 * u[n - 3] - u[n - 4]) * inv;
    return d;
}

}  // namespace detail

/// Mode-wise (Parseval) energies of u on the cylinder. Theta derivatives are
/// exact in Fourier space; t derivatives use centered differences.
inline CylinderEnergies cylinder_energies(const CylinderField& u, double eps = 0.0) {
    if (eps < 0.0) throw InvalidArgument("eps must be non-negative");
    const int nt = u.nt();
    const double dt = u.dt();
    std::vector<double> z(nt + 1, 0.0), f1(nt + 1, 0.0), f4(nt + 1, 0.0);
    for (int m = -u.max_mode(); m <= u.max_mode(); ++m) {
        const auto& c = u.mode(m);
        const auto ct = detail::d_dt(c, dt);
        const auto ctt = detail::d2_dt2(c, dt);
        const double m2 = static_cast<double>(m) * m;
        for (int k = 0; k <= nt; ++k) {
            const double a0 = std::norm(c[k]);
            const double a1 = std::norm(ct[k]);
            const double w = std::exp(-2.0 * eps * u.t(k));
            z[k] += a0 * w;
            f1[k] += (a1 + (m2 + 1.0) * a0) * w;
            f4[k] += std::norm(ctt[k]) + m2 * a1 + 2.0 * a1 + (1.0 - m2) * (1.0 - m2) * a0;
        }
    }
    CylinderEnergies e;
    const double two_pi = 2.0 * pi;
    e.zeroth = two_pi * detail::integrate_t(z, dt);
    e.first = two_pi * detail::integrate_t(f1, dt);
    if (eps == 0.0) e.fourth = two_pi * detail::integrate_t(f4, dt);
    return e;
}

}  // namespace wel
