#pragma once

#include "core.hpp"

namespace wel {

/// Symmetric 2x2 matrix [[a11, a12], [a12, a22]].
struct Sym2 {
    double a11 = 0.0;
    double a12 = 0.0;
    double a22 = 0.0;

    constexpr double trace() const { return a11 + a22; }
    /// <A : u (x) v> = sum_ij A_ij u_i v_j.
    constexpr double contract(const Vec2& u, const Vec2& v) const {
        return a11 * u.x * v.x + a12 * (u.x * v.y + u.y * v.x) + a22 * u.y * v.y;
    }
};

struct Sym2Identity {
    double lhs = 0.0;
    double rhs = 0.0;
};

/// Both sides of the two-dimensional symmetric-matrix identity
///
///   2 <A:b(x)c><b,c> - <A:b(x)b>|c|^2 - <A:c(x)c>|b|^2 = -tr(A) <b, c_perp>^2,
///
/// with c_perp = (-c2, c1). Expanding in the eigenbasis of A gives the
/// left side as -sum_{i,j} mu_i (b_i c_j - c_i b_j)^2; in 2D this collapses to
/// the trace times the squared cross product, with a minus sign.
///
/// Both sides are accumulated in extended precision and rounded once, so the
/// cancellation inside the left side does not swamp small results.
inline Sym2Identity sym2_identity(const Sym2& A, const Vec2& b, const Vec2& c) {
    using ld = long double;
    const ld a11 = A.a11, a12 = A.a12, a22 = A.a22;
    const ld b1 = b.x, b2 = b.y, c1 = c.x, c2 = c.y;
    auto contract = [&](ld u1, ld u2, ld v1, ld v2) { return a11 * u1 * v1 + a12 * (u1 * v2 + u2 * v1) + a22 * u2 * v2; };
    const ld bc = b1 * c1 + b2 * c2;
    const ld bb = b1 * b1 + b2 * b2;
    const ld cc = c1 * c1 + c2 * c2;
    const ld lhs = 2 * contract(b1, b2, c1, c2) * bc - contract(b1, b2, b1, b2) * cc - contract(c1, c2, c1, c2) * bb;
    // <b, c_perp> with c_perp = (-c2, c1)
    const ld b_cperp = -b1 * c2 + b2 * c1;
    const ld rhs = -(a11 + a22) * b_cperp * b_cperp;
    return {static_cast<double>(lhs), static_cast<double>(rhs)};
}

/// Relative defect |lhs - rhs| / (|lhs| + |rhs| + 1).
inline double relative_defect(const Sym2Identity& s) {
    return std::abs(s.lhs - s.rhs) / (std::abs(s.lhs) + std::abs(s.rhs) + 1.0);
}

}  // namespace wel
