#pragma once

// JSON views of the library's reports. Non-finite numbers become the strings
// "inf", "-inf" or "nan" so that reports stay valid JSON.

#include <cmath>
#include <optional>
#include <string>

#include "json.hpp"
#include "wel/wel.hpp"

namespace wel::report {

using nlohmann::ordered_json;

inline ordered_json num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

template <class T>
ordered_json opt(const std::optional<T>& v) {
    if (!v) return nullptr;
    if constexpr (std::is_floating_point_v<T>) return num(*v);
    else return *v;
}

inline ordered_json to_json(const DomainSpec& d) {
    if (d.kind == DomainSpec::Kind::Disk)
        return {{"kind", "disk"}, {"center", {d.origin.x, d.origin.y}}, {"radius", d.radius}};
    return {{"kind", "rectangle"}, {"origin", {d.origin.x, d.origin.y}}, {"width", d.width}, {"height", d.height}};
}

inline ordered_json to_json(const WeightProvenance& p) {
    ordered_json pts = ordered_json::array();
    for (const SnappedPoint& s : p.points) {
        ordered_json e = {{"requested", {s.requested.x, s.requested.y}}, {"used", {s.used.x, s.used.y}}};
        pts.push_back(e);
    }
    return {{"family", to_string(p.family)}, {"points", pts}, {"alphas", p.alphas}};
}

inline ordered_json to_json(const InequalityReport& r) {
    ordered_json j;
    j["which"] = to_string(r.which);
    j["lhs"] = num(r.lhs);
    j["rhs"] = num(r.rhs);
    j["ratio"] = num(r.ratio);
    j["verdict"] = to_string(r.verdict);
    j["margin"] = num(r.margin);
    j["h"] = r.h;
    j["tol_h"] = r.tol_h;
    j["constants"] = {{"lambda1", opt(r.constants.lambda1)}, {"kappa", opt(r.constants.kappa)},
                      {"tau", opt(r.constants.tau)},         {"eps", opt(r.constants.eps)},
                      {"C", opt(r.constants.C)},             {"sup_omega", num(r.constants.sup_omega)}};
    j["excluded_nodes"] = r.excluded_nodes;
    j["seed"] = opt(r.seed);
    j["hypothesis_ok"] = r.hypothesis_ok;
    j["flagged"] = r.flagged;
    j["rhs_regularized"] = opt(r.rhs_regularized);
    return j;
}

inline ordered_json to_json(const SolveInfo& s) {
    ordered_json j = {{"iterations", s.iterations},
                      {"relative_residual", num(s.relative_residual)},
                      {"converged", s.converged}};
    if (!s.converged) j["failure"] = s.failure;
    return j;
}

inline ordered_json to_json(const GapReport& g) {
    return {{"eps", g.eps},
            {"lhs", num(g.lhs)},
            {"mid", num(g.mid)},
            {"rhs4", num(g.rhs4)},
            {"rhs4_perp", num(g.rhs4_perp)},
            {"C_eps", g.C_eps},
            {"sup_omega", num(g.sup_omega)},
            {"chain_bound", num(g.chain_bound)},
            {"end_to_end_bound", num(g.end_to_end_bound)},
            {"identity_defect", num(g.identity_defect)},
            {"perp_defect", num(g.perp_defect)},
            {"tol_h", g.tol_h},
            {"excluded_nodes", g.excluded_nodes},
            {"boundary_layer_nodes", g.boundary_layer_nodes},
            {"chain", to_string(g.chain)},
            {"identity", to_string(g.identity)},
            {"verdict", to_string(g.end_to_end)}};
}

inline ordered_json to_json(const DecompositionResult& r) {
    ordered_json j;
    j["residual_unweighted"] = num(r.unweighted.residual);
    j["residual_weighted"] = num(r.weighted.residual);
    j["norm_A"] = num(r.norm_A);
    j["norm_omega_A"] = num(r.norm_omega_A);
    j["energy_certificates"] = {
        {"unweighted", {{"at_solution", num(r.unweighted.energy)}, {"at_zero", num(r.unweighted.energy_at_zero)}}},
        {"weighted", {{"at_solution", num(r.weighted.energy)}, {"at_zero", num(r.weighted.energy_at_zero)}}}};
    j["gap"] = to_json(r.gap);
    j["iterations"] = {{"xi1", to_json(r.unweighted.solve_xi1)},
                       {"xi2", to_json(r.unweighted.solve_xi2)},
                       {"phi1", to_json(r.weighted.solve_phi1)},
                       {"phi2", to_json(r.weighted.solve_phi2)}};
    j["tolerances"] = {{"cg_tol", r.options.cg.tol},
                       {"cg_max_iter", r.options.cg.max_iter},
                       {"omega_tol", r.options.omega_tol},
                       {"conditioning_limit", r.options.conditioning_limit}};
    j["weight_ratio"] = num(r.weighted.weight_ratio);
    j["ill_conditioned"] = r.weighted.ill_conditioned;
    j["excluded_nodes"] = r.weighted.excluded_nodes;
    j["multiply_connected"] = r.multiply_connected;
    return j;
}

inline ordered_json to_json(const EigenResult& e, const DomainSpec& d) {
    return {{"lambda1", num(e.lambda1)},
            {"iterations", e.iterations},
            {"cg_iterations", e.cg_iterations},
            {"h", e.h},
            {"domain", to_json(d)}};
}

inline ordered_json to_json(const CylinderEnergies& e) {
    return {{"zeroth", num(e.zeroth)}, {"first", num(e.first)}, {"fourth", opt(e.fourth)}};
}

}  // namespace wel::report
