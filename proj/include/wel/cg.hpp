#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "core.hpp"
#include "field.hpp"
#include "grid.hpp"

namespace wel {

struct CgOptions {
    double tol = 1e-10;  ///< relative residual target ||A x - b|| <= tol ||b||
    int max_iter = 50000;
};

struct CgResult {
    std::vector<double> x;
    int iterations = 0;
    double relative_residual = 0.0;
};

namespace detail {

inline double dot(std::span<const double> u, std::span<const double> v) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
}

}  // namespace detail

/// Preconditioned conjugate gradients for symmetric positive (semi)definite
/// operators. `apply(x, y)` writes y = A x. `inv_diag`, when non-empty, is a
/// Jacobi preconditioner. Consistent singular systems converge to the solution
/// closest to the starting guess.
///
/// Throws SolverFailure when the iteration budget runs out or a search
/// direction has non-positive curvature (indefinite operator); the exception
/// carries the best iterate seen.
template <class Apply>
CgResult conjugate_gradient(Apply&& apply, std::span<const double> rhs, const CgOptions& opt,
                            std::span<const double> inv_diag = {}, std::span<const double> x0 = {}) {
    const std::size_t n = rhs.size();
    CgResult res;
    res.x.assign(n, 0.0);
    if (!x0.empty()) res.x.assign(x0.begin(), x0.end());

    const double bnorm = std::sqrt(detail::dot(rhs, rhs));
    if (bnorm == 0.0) {
        res.x.assign(n, 0.0);
        return res;
    }

    std::vector<double> r(n), z(n), p(n), q(n);
    apply(std::span<const double>(res.x), std::span<double>(q));
    for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - q[i];

    auto precondition = [&] {
        if (inv_diag.empty()) {
            z = r;
        } else {
            for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
        }
    };

    double rnorm = std::sqrt(detail::dot(r, r));
    std::vector<double> best = res.x;
    double best_rel = rnorm / bnorm;
    if (best_rel <= opt.tol) {
        res.relative_residual = best_rel;
        return res;
    }

    precondition();
    p = z;
    double rz = detail::dot(r, z);
    for (int it = 1; it <= opt.max_iter; ++it) {
        apply(std::span<const double>(p), std::span<double>(q));
        const double curvature = detail::dot(p, q);
        if (!(curvature > 0.0))
            throw SolverFailure("conjugate gradients met non-positive curvature; operator is not positive definite",
                                it, best_rel, best);
        const double alpha = rz / curvature;
        for (std::size_t i = 0; i < n; ++i) {
            res.x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        rnorm = std::sqrt(detail::dot(r, r));
        const double rel = rnorm / bnorm;
        if (!std::isfinite(rel)) throw SolverFailure("conjugate gradients diverged", it, best_rel, best);
        if (rel < best_rel) {
            best_rel = rel;
            best = res.x;
        }
        if (rel <= opt.tol) {
            res.iterations = it;
            res.relative_residual = rel;
            return res;
        }
        precondition();
        const double rz_next = detail::dot(r, z);
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    throw SolverFailure("conjugate gradients exceeded the iteration budget", opt.max_iter, best_rel, best);
}

/// Maps interior-node fields to dof vectors and back.
inline std::vector<double> to_dofs(const ScalarField& f) {
    const auto& nodes = f.grid().interior_nodes();
    std::vector<double> v(nodes.size());
    for (std::size_t d = 0; d < nodes.size(); ++d) v[d] = f[nodes[d]];
    return v;
}

inline ScalarField from_dofs(const GridPtr& grid, std::span<const double> v) {
    ScalarField f(grid);
    const auto& nodes = grid->interior_nodes();
    for (std::size_t d = 0; d < nodes.size(); ++d) f[nodes[d]] = v[d];
    return f;
}

struct FieldSolve {
    ScalarField x;
    int iterations = 0;
    double relative_residual = 0.0;
};

using FieldOperator = std::function<ScalarField(const ScalarField&)>;

/// Solves apply(x) = rhs on the interior-mask subspace (x = 0 on boundary nodes).
inline FieldSolve cg_solve(const FieldOperator& apply, const ScalarField& rhs, const CgOptions& opt = {}) {
    const GridPtr& grid = rhs.grid_ptr();
    auto op = [&](std::span<const double> x, std::span<double> y) {
        const ScalarField out = apply(from_dofs(grid, x));
        const auto& nodes = grid->interior_nodes();
        for (std::size_t d = 0; d < nodes.size(); ++d) y[d] = out[nodes[d]];
    };
    const std::vector<double> b = to_dofs(rhs);
    CgResult r = conjugate_gradient(op, b, opt);
    return {from_dofs(grid, r.x), r.iterations, r.relative_residual};
}

/// Flat 5-point Dirichlet operator -Delta_h restricted to interior dofs. SPD.
class DirichletLaplacian {
public:
    explicit DirichletLaplacian(GridPtr grid) : grid_(std::move(grid)) {
        const Grid2D& g = *grid_;
        const auto& nodes = g.interior_nodes();
        neighbours_.resize(nodes.size());
        const std::size_t sy = g.stride_y();
        for (std::size_t d = 0; d < nodes.size(); ++d) {
            const std::size_t k = nodes[d];
            neighbours_[d] = {g.dof(k + 1), g.dof(k - 1), g.dof(k + sy), g.dof(k - sy)};
        }
        inv_h2_ = 1.0 / (g.h() * g.h());
    }

    std::size_t size() const { return neighbours_.size(); }
    const GridPtr& grid() const { return grid_; }

    void operator()(std::span<const double> x, std::span<double> y) const {
        for (std::size_t d = 0; d < neighbours_.size(); ++d) {
            double s = 4.0 * x[d];
            for (std::int64_t q : neighbours_[d])
                if (q >= 0) s -= x[static_cast<std::size_t>(q)];
            y[d] = s * inv_h2_;
        }
    }

    /// Jacobi preconditioner (constant diagonal 4/h^2).
    std::vector<double> inverse_diagonal() const { return std::vector<double>(size(), 0.25 / inv_h2_); }

private:
    GridPtr grid_;
    std::vector<std::array<std::int64_t, 4>> neighbours_;
    double inv_h2_ = 0.0;
};

}  // namespace wel
