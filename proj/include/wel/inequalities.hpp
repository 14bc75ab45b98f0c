#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "calculus.hpp"
#include "core.hpp"
#include "field.hpp"
#include "grid.hpp"
#include "test_functions.hpp"
#include "weights.hpp"

namespace wel {

enum class InequalityKind { Ckn, Elliptic, Epsilon };
enum class Verdict { Pass, PassTrivially, Fail };

inline const char* to_string(InequalityKind k) {
    switch (k) {
        case InequalityKind::Ckn: return "CKN";
        case InequalityKind::Elliptic: return "ELLIPTIC";
        case InequalityKind::Epsilon: return "EPSILON";
    }
    return "unknown";
}

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "pass";
        case Verdict::PassTrivially: return "pass-trivially";
        case Verdict::Fail: return "fail";
    }
    return "unknown";
}

inline bool passed(Verdict v) { return v != Verdict::Fail; }

/// C(eps) = (8 eps^2 + 5 (1 + eps)^4) / (8 (1 + eps)^2); tends to 5/8 as eps -> 0.
inline double epsilon_constant(double eps) {
    const double q = (1.0 + eps) * (1.0 + eps);
    return (8.0 * eps * eps + 5.0 * q * q) / (8.0 * q);
}

struct InequalityConstants {
    std::optional<double> lambda1;
    std::optional<double> kappa;  ///< set when the weight's kappa is a constant
    std::optional<double> tau;
    std::optional<double> eps;
    std::optional<double> C;
    double sup_omega = 0.0;
};

struct InequalityReport {
    InequalityKind which = InequalityKind::Ckn;
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
    double margin = 0.0;
    double h = 0.0;
    double tol_h = 0.0;
    InequalityConstants constants;
    std::size_t excluded_nodes = 0;
    std::optional<std::uint64_t> seed;
    Verdict verdict = Verdict::Pass;
    bool hypothesis_ok = true;
    bool flagged = false;                   ///< supp f touches singular nodes
    std::optional<double> rhs_regularized;  ///< |grad omega|^2 + delta in place of |grad omega|^2
};

struct CheckOptions {
    double c_tol = 10.0;           ///< verdict slack tol_h = c_tol * h
    double regularization = 1e-10; ///< delta of the diagnostic regularized rhs
};

namespace detail {

inline bool touches(const Grid2D& g, const ScalarField& f, std::size_t k) {
    const std::size_t sy = g.stride_y();
    if (f[k] != 0.0) return true;
    const int i = g.column(k), j = g.row(k);
    return (i > 0 && f[k - 1] != 0.0) || (i + 1 < g.nx() && f[k + 1] != 0.0) ||
           (j > 0 && f[k - sy] != 0.0) || (j + 1 < g.ny() && f[k + sy] != 0.0);
}

struct Support {
    std::size_t excluded = 0;
    bool singular = false;
};

inline Support inspect_support(const Weight& w, const ScalarField& f) {
    Support s;
    const Grid2D& g = w.grid();
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!w.excluded(k) || !touches(g, f, k)) continue;
        ++s.excluded;
        if (w.singular(k)) s.singular = true;
    }
    return s;
}

/// Integral of (omega^4 / |grad omega|_g^2) |Delta_g f|^2 dvol_g with the
/// critical-node policy: +infinity if a critical node carries Delta f != 0.
struct HessianTerm {
    double value = 0.0;
    double regularized = 0.0;
};

inline HessianTerm weighted_laplacian_energy(const Weight& w, const ScalarField& lap, double delta) {
    const Grid2D& g = w.grid();
    HessianTerm t;
    bool infinite = false;
    for (std::size_t k : g.interior_nodes()) {
        const double L = lap[k];
        if (L == 0.0) continue;
        const double om = w.omega[k];
        const double om4 = om * om * om * om;
        const double gn2 = w.grad_norm[k] * w.grad_norm[k] * g.inv_area_factor(k);
        const double dv = g.area_factor(k);
        t.regularized += om4 / (gn2 + delta) * L * L * dv;
        if (w.critical(k) || gn2 == 0.0) {
            infinite = true;
            continue;
        }
        t.value += om4 / gn2 * L * L * dv;
    }
    const double h2 = g.h() * g.h();
    t.value = infinite ? std::numeric_limits<double>::infinity() : t.value * h2;
    t.regularized *= h2;
    return t;
}

inline std::optional<double> constant_kappa(const Weight& w) { return w.kappa_constant; }

inline std::pair<double, double> kappa_range(const Weight& w) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t k : w.grid().interior_nodes()) {
        if (w.singular(k)) continue;
        lo = std::min(lo, w.kappa[k]);
        hi = std::max(hi, w.kappa[k]);
    }
    return {lo, hi};
}

inline void finish(InequalityReport& r, const CheckOptions& opt) {
    r.tol_h = opt.c_tol * r.h;
    if (std::isinf(r.rhs)) {
        r.verdict = Verdict::PassTrivially;
        r.ratio = 0.0;
        r.margin = 1.0;
        return;
    }
    r.ratio = r.lhs == 0.0 ? 0.0 : r.lhs / r.rhs;
    r.margin = r.rhs == 0.0 ? 0.0 : (r.rhs - r.lhs) / r.rhs;
    r.verdict = r.lhs <= r.rhs * (1.0 + r.tol_h) ? Verdict::Pass : Verdict::Fail;
}

inline void check_lattice(const Weight& w, const ScalarField& f) {
    if (!f.grid().same_lattice(w.grid())) throw InvalidArgument("test function and weight live on different lattices");
}

}  // namespace detail

/// Weighted Hardy-type estimate
///   integral |grad omega|^2 |f|^2 <= integral omega^2 |grad f|^2   (dvol_g, metric norms),
/// valid when kappa <= lambda1 pointwise.
inline InequalityReport check_ckn(const Weight& w, const ScalarField& f, double lambda1,
                                  const CheckOptions& opt = {}) {
    detail::check_lattice(w, f);
    const Grid2D& g = f.grid();
    const OneForm df = gradient(f);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t k : g.interior_nodes()) {
        const double dv = g.area_factor(k), ig = g.inv_area_factor(k);
        const double gn = w.grad_norm[k];
        const Vec2 d = df.at(k);
        lhs += gn * gn * ig * f[k] * f[k] * dv;
        rhs += w.omega[k] * w.omega[k] * dot(d, d) * ig * dv;
    }
    const double h2 = g.h() * g.h();
    InequalityReport r;
    r.which = InequalityKind::Ckn;
    r.lhs = lhs * h2;
    r.rhs = rhs * h2;
    r.h = g.h();
    r.constants.lambda1 = lambda1;
    r.constants.kappa = detail::constant_kappa(w);
    r.constants.sup_omega = w.sup_omega();
    const auto support = detail::inspect_support(w, f);
    r.excluded_nodes = support.excluded;
    r.flagged = support.singular;
    r.hypothesis_ok = detail::kappa_range(w).second <= lambda1;
    detail::finish(r, opt);
    return r;
}

/// Homogeneous elliptic estimate with parameter tau in (0, 2]:
///   integral omega^2 |grad f|^2
///     <= tau^{-1} integral 2 omega^4/|grad omega|^2 |Delta_g f|^2 + 5 |grad omega|^2 |f|^2,
/// valid when -(lambda1/8)(2 - tau) <= kappa <= lambda1.
inline InequalityReport check_elliptic(const Weight& w, const ScalarField& f, double tau, double lambda1,
                                       const CheckOptions& opt = {}) {
    if (!(tau > 0.0) || tau > 2.0) throw InvalidArgument("tau must lie in (0, 2]");
    detail::check_lattice(w, f);
    const Grid2D& g = f.grid();
    const OneForm df = gradient(f);
    const ScalarField lap = laplacian(f);
    double lhs = 0.0, zeroth = 0.0;
    for (std::size_t k : g.interior_nodes()) {
        const double dv = g.area_factor(k), ig = g.inv_area_factor(k);
        const Vec2 d = df.at(k);
        lhs += w.omega[k] * w.omega[k] * dot(d, d) * ig * dv;
        zeroth += w.grad_norm[k] * w.grad_norm[k] * ig * f[k] * f[k] * dv;
    }
    const double h2 = g.h() * g.h();
    const auto hess = detail::weighted_laplacian_energy(w, lap, opt.regularization);

    InequalityReport r;
    r.which = InequalityKind::Elliptic;
    r.lhs = lhs * h2;
    r.rhs = (2.0 * hess.value + 5.0 * zeroth * h2) / tau;
    r.rhs_regularized = (2.0 * hess.regularized + 5.0 * zeroth * h2) / tau;
    r.h = g.h();
    r.constants.lambda1 = lambda1;
    r.constants.kappa = detail::constant_kappa(w);
    r.constants.tau = tau;
    r.constants.sup_omega = w.sup_omega();
    const auto support = detail::inspect_support(w, f);
    r.excluded_nodes = support.excluded;
    r.flagged = support.singular;
    const auto [kmin, kmax] = detail::kappa_range(w);
    r.hypothesis_ok = kmin >= -(lambda1 / 8.0) * (2.0 - tau) && kmax <= lambda1;
    detail::finish(r, opt);
    return r;
}

/// Inhomogeneous estimate for kappa = 0 and eps > 0:
///   integral omega^{2+2eps} |grad f|^2
///     <= C(eps) (sup omega)^{2 eps} / eps^2 integral omega^4/|grad omega|^2 |Delta_g f|^2.
inline InequalityReport check_epsilon(const Weight& w, const ScalarField& f, double eps,
                                      const CheckOptions& opt = {}) {
    if (!(eps > 0.0)) throw InvalidArgument("eps must be positive");
    detail::check_lattice(w, f);
    const Grid2D& g = f.grid();
    const OneForm df = gradient(f);
    const ScalarField lap = laplacian(f);
    double lhs = 0.0;
    for (std::size_t k : g.interior_nodes()) {
        const Vec2 d = df.at(k);
        lhs += std::pow(w.omega[k], 2.0 + 2.0 * eps) * dot(d, d) * g.inv_area_factor(k) * g.area_factor(k);
    }
    const double sup = w.sup_omega();
    const double C = epsilon_constant(eps);
    const double factor = C * std::pow(sup, 2.0 * eps) / (eps * eps);
    const auto hess = detail::weighted_laplacian_energy(w, lap, opt.regularization);

    InequalityReport r;
    r.which = InequalityKind::Epsilon;
    r.lhs = lhs * g.h() * g.h();
    r.rhs = factor * hess.value;
    r.rhs_regularized = factor * hess.regularized;
    r.h = g.h();
    r.constants.kappa = detail::constant_kappa(w);
    r.constants.eps = eps;
    r.constants.C = C;
    r.constants.sup_omega = sup;
    const auto support = detail::inspect_support(w, f);
    r.excluded_nodes = support.excluded;
    r.flagged = support.singular;
    const auto [kmin, kmax] = detail::kappa_range(w);
    r.hypothesis_ok = std::max(std::abs(kmin), std::abs(kmax)) <= 1e-12;
    detail::finish(r, opt);
    return r;
}

/// For a single-point power weight |x - x0|^alpha, both sides of
///   integral |x|^{2(alpha-1)} |f|^2 <= alpha^{-2} integral |x|^{2 alpha} |grad f|^2.
struct SharpenedCkn {
    double lhs = 0.0;
    double rhs = 0.0;
};

inline SharpenedCkn sharpened_power_ckn(const Weight& w, const ScalarField& f) {
    if (w.provenance.family != WeightFamily::PowerProduct || w.provenance.points.size() != 1)
        throw InvalidArgument("sharpened form needs a single-point power weight");
    detail::check_lattice(w, f);
    const double alpha = w.provenance.alphas[0];
    const Point x0 = w.provenance.points[0].used;
    const Grid2D& g = f.grid();
    const OneForm df = gradient(f);
    SharpenedCkn s;
    for (std::size_t k : g.interior_nodes()) {
        const double r = norm(g.node(k) - x0);
        const Vec2 d = df.at(k);
        s.lhs += std::pow(r, 2.0 * (alpha - 1.0)) * f[k] * f[k];
        s.rhs += std::pow(r, 2.0 * alpha) * dot(d, d);
    }
    const double h2 = g.h() * g.h();
    s.lhs *= h2;
    s.rhs *= h2 / (alpha * alpha);
    return s;
}

struct CheckParams {
    double lambda1 = 0.0;
    double tau = 2.0;
    double eps = 0.5;
};

inline InequalityReport run_check(InequalityKind kind, const Weight& w, const ScalarField& f,
                                  const CheckParams& p, const CheckOptions& opt = {}) {
    switch (kind) {
        case InequalityKind::Ckn: return check_ckn(w, f, p.lambda1, opt);
        case InequalityKind::Elliptic: return check_elliptic(w, f, p.tau, p.lambda1, opt);
        case InequalityKind::Epsilon: return check_epsilon(w, f, p.eps, opt);
    }
    throw InvalidArgument("unknown inequality kind");
}

struct SweepRow {
    double h = 0.0;
    InequalityReport report;
    double defect = 0.0;  ///< max(0, lhs - rhs) / rhs
};

using WeightBuilder = std::function<Weight(const GridPtr&)>;

/// Re-runs one check on a fixed closed-form test function at each resolution.
inline std::vector<SweepRow> refinement_sweep(InequalityKind kind, const WeightBuilder& build_weight,
                                              const DomainSpec& domain, const CheckParams& params,
                                              const std::vector<int>& resolutions, const BumpSet& f,
                                              const CheckOptions& opt = {}) {
    if (resolutions.size() < 2) throw InvalidArgument("a sweep needs at least two resolutions");
    std::vector<SweepRow> rows;
    for (int res : resolutions) {
        const GridPtr grid = domain.build(res);
        const Weight w = build_weight(grid);
        const ScalarField fs = f.sample(grid);
        SweepRow row;
        row.h = grid->h();
        row.report = run_check(kind, w, fs, params, opt);
        row.defect = std::isinf(row.report.rhs) || row.report.rhs == 0.0
                         ? 0.0
                         : std::max(0.0, row.report.lhs - row.report.rhs) / row.report.rhs;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace wel
