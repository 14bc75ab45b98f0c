// wel: command-line front end for the weighted elliptic laboratory.
//
// Exit codes: 0 pass, 1 criterion failure, 2 configuration error, 3 solver failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "report.hpp"
#include "wel/wel.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace wel;
using report::num;

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kConfig = 2;
constexpr int kSolver = 3;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- config

json defaults(const std::string& cmd) {
    const json common = {{"seed", 1}, {"out", nullptr}, {"json", false}};
    json d;
    if (cmd == "verify-weight") {
        d = {{"weight", "|x|"}, {"domain", "disk"}, {"resolutions", {64, 128}}, {"seeds", 5},
             {"bumps", 2},      {"margin", 4},      {"ratio_tol", 0.25}};
    } else if (cmd == "check") {
        d = {{"kind", "epsilon"}, {"weight", "|x|"}, {"domain", "disk"}, {"resolution", 128},
             {"seeds", 20},       {"bumps", 3},      {"margin", 3},      {"tau", 2.0},
             {"eps", 0.5},        {"lambda1", "zero"}, {"c_tol", 10.0}};
    } else if (cmd == "decompose") {
        d = {{"weight", "|x|"}, {"domain", "disk"}, {"resolution", 128}, {"bumps", 3},
             {"margin", 3},     {"eps", 0.5},       {"one_form", nullptr}, {"cg_tol", 1e-10},
             {"residual_tol", 1e-5}};
    } else if (cmd == "lemma-fuzz") {
        d = {{"samples", 1000000}, {"bound", 10.0}, {"defect_tol", 1e-12}};
    } else if (cmd == "logpolar") {
        d = {{"case", "sin-theta"}, {"eps", 0.0}, {"t_max", 12.0}, {"nt", 1024}, {"modes", 32},
             {"mode_file", nullptr}};
    } else if (cmd == "eigenvalue") {
        d = {{"domain", "square"}, {"resolution", 128}, {"tol", 1e-10}, {"expected", nullptr}, {"rel_tol", 0.01}};
    } else if (cmd == "sweep") {
        d = {{"kind", "ckn"}, {"weight", "|x|"}, {"domain", "disk"}, {"resolutions", {64, 128, 256}},
             {"bumps", 3},    {"margin", 3},      {"tau", 2.0},      {"eps", 0.5},
             {"lambda1", "zero"}, {"c_tol", 10.0}};
    }
    for (auto& [k, v] : common.items()) d[k] = v;
    d["g_tol"] = 1e-8;
    d["omega_tol"] = 1e-12;
    return d;
}

void merge_config_file(json& cfg, const std::string& path, const std::string& cmd) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json file;
    try {
        file = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    if (!file.is_object()) throw ConfigError("config must be a JSON object");
    for (auto& [k, v] : file.items()) {
        if (k == "command") {
            if (v != cmd) throw ConfigError("config is for command " + v.dump() + ", not " + cmd);
            continue;
        }
        if (!cfg.contains(k)) throw ConfigError("unknown config key '" + k + "' for " + cmd);
        cfg[k] = v;
    }
}

template <class T>
T get(const json& cfg, const char* key) {
    try {
        return cfg.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

int positive_int(const json& cfg, const char* key) {
    const auto v = get<std::int64_t>(cfg, key);
    if (v < 1 || v > std::numeric_limits<int>::max()) throw ConfigError(std::string(key) + " must be a positive integer");
    return static_cast<int>(v);
}

double positive(const json& cfg, const char* key) {
    const double v = get<double>(cfg, key);
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(key) + " must be positive");
    return v;
}

std::uint64_t seed_of(const json& cfg) {
    const auto& v = cfg.at("seed");
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        throw ConfigError("seed must be a non-negative integer");
    return v.get<std::uint64_t>();
}

/// Per-run seed derived from the master seed; independent of evaluation order.
std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t i) { return Rng::stream(seed, {i}).next(); }

Point point_of(const json& v) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ConfigError("points are [x, y] pairs");
    return {v[0].get<double>(), v[1].get<double>()};
}

void only_keys(const json& obj, std::initializer_list<const char*> keys, const char* what) {
    for (auto& [k, v] : obj.items()) {
        bool known = false;
        for (const char* key : keys) known = known || k == key;
        if (!known) throw ConfigError(std::string("unknown key '") + k + "' in " + what);
    }
}

DomainSpec parse_domain(const json& v) {
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "disk") return DomainSpec::disk({0.0, 0.0}, 1.0);
        if (s == "square") return DomainSpec::rectangle({0.0, 0.0}, 1.0, 1.0);
        if (s == "rectangle-1x2") return DomainSpec::rectangle({0.0, 0.0}, 1.0, 2.0);
        throw ConfigError("unknown domain '" + s + "' (disk, square, rectangle-1x2 or an object)");
    }
    if (!v.is_object() || !v.contains("kind")) throw ConfigError("domain must be a name or an object with 'kind'");
    const std::string kind = get<std::string>(v, "kind");
    if (kind == "disk") {
        only_keys(v, {"kind", "center", "radius"}, "disk domain");
        return DomainSpec::disk(v.contains("center") ? point_of(v["center"]) : Point{0.0, 0.0},
                                v.contains("radius") ? positive(v, "radius") : 1.0);
    }
    if (kind == "rectangle") {
        only_keys(v, {"kind", "origin", "width", "height"}, "rectangle domain");
        return DomainSpec::rectangle(v.contains("origin") ? point_of(v["origin"]) : Point{0.0, 0.0},
                                     v.contains("width") ? positive(v, "width") : 1.0,
                                     v.contains("height") ? positive(v, "height") : 1.0);
    }
    throw ConfigError("unknown domain kind '" + kind + "'");
}

/// Weight descriptor resolved into a builder over grids.
struct WeightDescriptor {
    json resolved;
    WeightBuilder build;
};

WeightDescriptor descriptor_from_object(const json& d, const WeightOptions& wopt) {
    if (!d.is_object() || !d.contains("family")) throw ConfigError("weight descriptor needs a 'family'");
    only_keys(d, {"family", "points", "alphas", "kappa", "expression", "field"}, "weight descriptor");
    const std::string family = get<std::string>(d, "family");
    std::vector<Point> points;
    std::vector<double> alphas;
    if (d.contains("points")) {
        if (!d["points"].is_array()) throw ConfigError("'points' must be an array");
        for (const auto& p : d["points"]) points.push_back(point_of(p));
    }
    if (d.contains("alphas")) alphas = get<std::vector<double>>(d, "alphas");
    if (points.size() != alphas.size()) throw ConfigError("'points' and 'alphas' differ in length");

    if (family == "power_product") {
        if (d.contains("kappa") && !(d["kappa"].is_number() && d["kappa"].get<double>() == 0.0))
            throw ConfigError("power-product weights have kappa = 0");
        return {d, [=](const GridPtr& g) { return power_product_weight(points, alphas, g, wopt); }};
    }
    if (family == "green_exponential") {
        if (d.contains("kappa") && !(d["kappa"].is_number() && d["kappa"].get<double>() == 0.0))
            throw ConfigError("Green-exponential weights have kappa = 0");
        return {d, [=](const GridPtr& g) { return green_exponential_weight(points, alphas, g, wopt); }};
    }
    if (family == "sampled") {
        std::optional<double> kappa;
        if (d.contains("kappa")) {
            if (d["kappa"].is_number()) kappa = d["kappa"].get<double>();
            else if (d["kappa"] != "field") throw ConfigError("kappa must be a number or \"field\"");
        }
        if (d.contains("expression") == d.contains("field"))
            throw ConfigError("sampled weight needs exactly one of 'expression' or 'field'");
        if (d.contains("expression")) {
            if (d["expression"] != "exp(|x|^2)") throw ConfigError("unsupported sampled expression");
            return {d, [=](const GridPtr& g) {
                        const ScalarField om = ScalarField::sample(g, [](Point x) { return std::exp(dot(x, x)); });
                        return sampled_weight(om, kappa, wopt);
                    }};
        }
        const std::string path = get<std::string>(d, "field");
        return {d, [=](const GridPtr& g) {
                    std::ifstream in(path);
                    if (!in) throw InvalidArgument("cannot open weight field " + path);
                    return sampled_weight(read_scalar_csv(in, g), kappa, wopt);
                }};
    }
    throw ConfigError("unknown weight family '" + family + "'");
}

WeightDescriptor parse_weight(const json& v, const WeightOptions& wopt) {
    if (v.is_object()) return descriptor_from_object(v, wopt);
    if (!v.is_string()) throw ConfigError("weight must be a shorthand string or a descriptor object");
    const std::string s = v.get<std::string>();
    if (!s.empty() && s.front() == '{') {
        json d;
        try {
            d = json::parse(s);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("malformed weight JSON: ") + e.what());
        }
        return descriptor_from_object(d, wopt);
    }
    json d;
    static const std::regex power(R"(\|x\|\^([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?))");
    std::smatch m;
    if (s == "1") {
        d = {{"family", "green_exponential"}, {"points", json::array()}, {"alphas", json::array()}};
    } else if (s == "|x|") {
        d = {{"family", "power_product"}, {"points", {{0.0, 0.0}}}, {"alphas", {1.0}}};
    } else if (std::regex_match(s, m, power)) {
        d = {{"family", "power_product"}, {"points", {{0.0, 0.0}}}, {"alphas", {std::stod(m[1])}}};
    } else if (s == "|x||x-e1|") {
        d = {{"family", "power_product"}, {"points", {{0.0, 0.0}, {1.0, 0.0}}}, {"alphas", {1.0, 1.0}}};
    } else if (s == "exp(|x|^2)") {
        d = {{"family", "sampled"}, {"expression", "exp(|x|^2)"}, {"kappa", -4.0}};
    } else {
        throw ConfigError("unknown weight shorthand '" + s + "'");
    }
    auto w = descriptor_from_object(d, wopt);
    w.resolved = d;
    return w;
}

WeightOptions weight_options(const json& cfg) {
    WeightOptions o;
    o.g_tol = positive(cfg, "g_tol");
    o.omega_tol = positive(cfg, "omega_tol");
    return o;
}

InequalityKind parse_kind(const json& cfg) {
    const std::string k = get<std::string>(cfg, "kind");
    if (k == "ckn") return InequalityKind::Ckn;
    if (k == "elliptic") return InequalityKind::Elliptic;
    if (k == "epsilon") return InequalityKind::Epsilon;
    throw ConfigError("kind must be ckn, elliptic or epsilon");
}

CheckParams parse_params(const json& cfg, const GridPtr& grid_for_lambda, json& lambda_report) {
    CheckParams p;
    p.tau = get<double>(cfg, "tau");
    p.eps = get<double>(cfg, "eps");
    if (!(p.tau > 0.0) || p.tau > 2.0) throw ConfigError("tau must lie in (0, 2]");
    if (!(p.eps > 0.0)) throw ConfigError("eps must be positive");
    const json& l = cfg.at("lambda1");
    if (l.is_number()) {
        p.lambda1 = l.get<double>();
        lambda_report = {{"mode", "explicit"}, {"value", p.lambda1}};
    } else if (l == "zero") {
        p.lambda1 = 0.0;
        lambda_report = {{"mode", "zero"}, {"value", 0.0}};
    } else if (l == "computed") {
        const EigenResult e = first_dirichlet_eigenvalue(grid_for_lambda);
        p.lambda1 = e.lambda1;
        lambda_report = {{"mode", "computed"}, {"value", e.lambda1}, {"iterations", e.iterations}};
    } else {
        throw ConfigError("lambda1 must be \"zero\", \"computed\" or a number");
    }
    return p;
}

std::vector<int> resolutions_of(const json& cfg) {
    const auto v = get<std::vector<std::int64_t>>(cfg, "resolutions");
    std::vector<int> r;
    for (auto x : v) {
        if (x < 4 || x > 1 << 14) throw ConfigError("resolutions must be between 4 and 16384");
        r.push_back(static_cast<int>(x));
    }
    return r;
}

// ---------------------------------------------------------------- output

struct Outcome {
    int code = kPass;
    json results;
    std::vector<std::string> summary;
};

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + p.string());
    out << text;
}

// ---------------------------------------------------------------- commands

Outcome cmd_verify_weight(const json& cfg) {
    const DomainSpec domain = parse_domain(cfg.at("domain"));
    const auto weight = parse_weight(cfg.at("weight"), weight_options(cfg));
    auto res = resolutions_of(cfg);
    if (res.size() < 2) throw ConfigError("verify-weight needs at least two resolutions");
    std::sort(res.begin(), res.end());
    const int seeds = positive_int(cfg, "seeds");
    const int bumps = positive_int(cfg, "bumps");
    const int margin = positive_int(cfg, "margin");
    const double ratio_tol = positive(cfg, "ratio_tol");
    const std::uint64_t seed = seed_of(cfg);

    std::vector<GridPtr> grids;
    std::vector<Weight> weights;
    for (int r : res) {
        grids.push_back(domain.build(resolution_for_cells(r)));
        weights.push_back(weight.build(grids.back()));
    }
    // Test functions are drawn once on the coarsest lattice and sampled on all.
    // Critical points of the weight are harmless for the weak equation.
    BumpOptions local;
    local.avoid_critical = false;
    std::vector<BumpSet> tests(seeds);
    for (int s = 0; s < seeds; ++s)
        tests[s] = random_bumps(*grids.front(), sub_seed(seed, s), bumps, margin, &weights.front(), local);

    std::vector<std::vector<WeakResidual>> table(seeds, std::vector<WeakResidual>(res.size()));
    parallel_for(static_cast<std::size_t>(seeds) * res.size(), [&](std::size_t idx) {
        const std::size_t s = idx / res.size(), r = idx % res.size();
        table[s][r] = weak_equation_residual(weights[r], tests[s].sample(grids[r]));
    });

    Outcome out;
    json rows = json::array();
    bool all_ok = true;
    for (int s = 0; s < seeds; ++s) {
        json row = {{"seed", sub_seed(seed, s)}};
        json vals = json::array(), ratios = json::array();
        bool exact = true, flagged = false;
        for (std::size_t r = 0; r < res.size(); ++r) {
            vals.push_back(num(table[s][r].value));
            exact = exact && table[s][r].value == 0.0;
            flagged = flagged || table[s][r].flagged;
        }
        bool ok = true;
        if (!exact) {
            for (std::size_t r = 0; r + 1 < res.size(); ++r) {
                const double q = std::abs(table[s][r].value) / std::abs(table[s][r + 1].value);
                const double expect = std::pow(static_cast<double>(res[r + 1]) / res[r], 2.0);
                ratios.push_back(num(q));
                ok = ok && std::abs(q - expect) <= ratio_tol * expect;
            }
        }
        row["residuals"] = vals;
        row["ratios"] = ratios;
        row["exact_zero"] = exact;
        row["flagged"] = flagged;
        row["pass"] = ok;
        all_ok = all_ok && ok;
        rows.push_back(row);
    }
    out.results = {{"resolutions", res}, {"runs", rows}, {"provenance", report::to_json(weights.front().provenance)}};
    out.code = all_ok ? kPass : kFail;
    out.summary.push_back(std::string("verify-weight: ") + (all_ok ? "pass" : "fail") + " (" + std::to_string(seeds) +
                          " test functions)");
    return out;
}

Outcome cmd_check(const json& cfg) {
    const InequalityKind kind = parse_kind(cfg);
    const DomainSpec domain = parse_domain(cfg.at("domain"));
    const auto weight = parse_weight(cfg.at("weight"), weight_options(cfg));
    const int cells = positive_int(cfg, "resolution");
    const int seeds = positive_int(cfg, "seeds");
    const int bumps = positive_int(cfg, "bumps");
    const int margin = positive_int(cfg, "margin");
    CheckOptions copt;
    copt.c_tol = positive(cfg, "c_tol");
    const std::uint64_t seed = seed_of(cfg);
    const GridPtr grid = domain.build(resolution_for_cells(cells));
    json lambda_report;
    const CheckParams params = parse_params(cfg, grid, lambda_report);
    const Weight w = weight.build(grid);

    std::vector<InequalityReport> reports(seeds);
    parallel_for(seeds, [&](std::size_t s) {
        const std::uint64_t sd = sub_seed(seed, s);
        const ScalarField f = random_test_function(grid, sd, bumps, margin, &w);
        reports[s] = run_check(kind, w, f, params, copt);
        reports[s].seed = sd;
    });

    Outcome out;
    json runs = json::array();
    int failed = 0;
    for (const auto& r : reports) {
        runs.push_back(report::to_json(r));
        if (!passed(r.verdict)) ++failed;
    }
    out.results = {{"lambda1", lambda_report}, {"provenance", report::to_json(w.provenance)}, {"runs", runs},
                   {"failed", failed}};
    out.code = failed == 0 ? kPass : kFail;
    out.summary.push_back(std::string("check ") + to_string(kind) + ": " + std::to_string(seeds - failed) + "/" +
                          std::to_string(seeds) + " pass");
    return out;
}

Outcome cmd_decompose(const json& cfg, const std::optional<std::filesystem::path>& outdir) {
    const DomainSpec domain = parse_domain(cfg.at("domain"));
    const auto weight = parse_weight(cfg.at("weight"), weight_options(cfg));
    const int cells = positive_int(cfg, "resolution");
    const double eps = positive(cfg, "eps");
    HodgeOptions hopt;
    hopt.cg.tol = positive(cfg, "cg_tol");
    hopt.omega_tol = positive(cfg, "omega_tol");
    const double residual_tol = positive(cfg, "residual_tol");
    const GridPtr grid = domain.build(resolution_for_cells(cells));
    const Weight w = weight.build(grid);

    OneForm A(grid);
    if (cfg.at("one_form").is_null()) {
        A = random_one_form(grid, seed_of(cfg), positive_int(cfg, "bumps"), positive_int(cfg, "margin"), &w);
    } else {
        const std::string path = get<std::string>(cfg, "one_form");
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open one-form file " + path);
        A = read_one_form_csv(in, grid);
    }
    const DecompositionResult r = decompose(A, w, eps, hopt);

    Outcome out;
    out.results = report::to_json(r);
    const bool recon = r.unweighted.residual <= residual_tol * r.norm_A &&
                       r.weighted.residual <= residual_tol * r.norm_omega_A;
    const bool gap = passed(r.gap.end_to_end);
    out.results["pass"] = {{"reconstruction", recon}, {"gap", gap}};
    out.code = !r.converged() ? kSolver : (recon && gap ? kPass : kFail);
    std::ostringstream s;
    s << "decompose: residuals " << r.unweighted.residual << " / " << r.weighted.residual << ", gap lhs " << r.gap.lhs
      << " vs bound " << r.gap.end_to_end_bound << " (" << to_string(r.gap.end_to_end) << ")";
    out.summary.push_back(s.str());
    if (!r.converged()) out.summary.push_back("solver failure: residuals above are from the best iterates");

    if (outdir) {
        auto dump = [&](const char* name, const auto& field) {
            std::ofstream f(*outdir / name);
            write_csv(f, field);
        };
        dump("A.csv", A);
        dump("xi1.csv", r.xi1());
        dump("xi2.csv", r.xi2());
        dump("phi1.csv", r.phi1());
        dump("phi2.csv", r.phi2());
    }
    return out;
}

Outcome cmd_lemma_fuzz(const json& cfg) {
    const auto samples = get<std::int64_t>(cfg, "samples");
    if (samples < 1) throw ConfigError("samples must be positive");
    const double bound = positive(cfg, "bound");
    const double tol = positive(cfg, "defect_tol");
    Rng rng = Rng::stream(seed_of(cfg), {0x73796d32ull});
    double worst = 0.0;
    Sym2 wa;
    Vec2 wb, wc;
    Sym2Identity wid;
    for (std::int64_t i = 0; i < samples; ++i) {
        const Sym2 A{rng.uniform(-bound, bound), rng.uniform(-bound, bound), rng.uniform(-bound, bound)};
        const Vec2 b{rng.uniform(-bound, bound), rng.uniform(-bound, bound)};
        const Vec2 c{rng.uniform(-bound, bound), rng.uniform(-bound, bound)};
        const Sym2Identity id = sym2_identity(A, b, c);
        const double d = relative_defect(id);
        if (d > worst || i == 0) {
            worst = d;
            wa = A;
            wb = b;
            wc = c;
            wid = id;
        }
    }
    Outcome out;
    out.results = {{"samples", samples},
                   {"max_relative_defect", num(worst)},
                   {"worst", {{"A", {{wa.a11, wa.a12}, {wa.a12, wa.a22}}},
                              {"b", {wb.x, wb.y}},
                              {"c", {wc.x, wc.y}},
                              {"lhs", num(wid.lhs)},
                              {"rhs", num(wid.rhs)}}}};
    out.code = worst <= tol ? kPass : kFail;
    std::ostringstream s;
    s << "lemma-fuzz: max relative defect " << worst << " over " << samples << " samples";
    out.summary.push_back(s.str());
    if (out.code != kPass) out.summary.push_back("worst triple: " + out.results["worst"].dump());
    return out;
}

CylinderField mode_file_field(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open mode file " + path);
    json d;
    try {
        d = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed mode file: ") + e.what());
    }
    only_keys(d, {"t_max", "nt", "M", "modes"}, "mode file");
    CylinderField u(positive(d, "t_max"), positive_int(d, "nt"), positive_int(d, "M"));
    for (const auto& m : d.at("modes")) {
        only_keys(m, {"m", "re", "im"}, "mode entry");
        const int k = get<int>(m, "m");
        if (std::abs(k) > u.max_mode()) throw ConfigError("mode index beyond M");
        const auto re = get<std::vector<double>>(m, "re");
        const auto im = m.contains("im") ? get<std::vector<double>>(m, "im") : std::vector<double>(re.size(), 0.0);
        if (re.size() != static_cast<std::size_t>(u.nt() + 1) || im.size() != re.size())
            throw ConfigError("mode profiles need nt + 1 samples");
        for (std::size_t i = 0; i < re.size(); ++i) u.mode(k)[i] = {re[i], im[i]};
    }
    return u;
}

Outcome cmd_logpolar(const json& cfg) {
    const double eps = get<double>(cfg, "eps");
    if (eps < 0.0) throw ConfigError("eps must be non-negative");
    const double t_max = positive(cfg, "t_max");
    const int nt = positive_int(cfg, "nt");
    const int M = positive_int(cfg, "modes");
    const std::string name = get<std::string>(cfg, "case");

    CylinderField u(t_max, std::max(nt, 4), M);
    if (name == "sin-theta") {
        u = CylinderField::from_function([](double, double th) { return std::sin(th); }, t_max, nt, M);
    } else if (name == "constant") {
        u = CylinderField::from_function([](double, double) { return 1.0; }, t_max, nt, M);
    } else if (name == "mode-file") {
        if (cfg.at("mode_file").is_null()) throw ConfigError("case mode-file needs mode_file");
        u = mode_file_field(get<std::string>(cfg, "mode_file"));
    } else {
        throw ConfigError("case must be sin-theta, constant or mode-file");
    }
    const CylinderEnergies e = cylinder_energies(u, eps);
    // The certificate always uses the unweighted sin(theta) field.
    const auto cert_u = CylinderField::from_function([](double, double th) { return std::sin(th); }, t_max, nt, M);
    const CylinderEnergies cert = cylinder_energies(cert_u, 0.0);
    const bool ok = cert.fourth && *cert.fourth <= 1e-10 && cert.zeroth > 0.0;

    Outcome out;
    out.results = {{"case", name},
                   {"energies", report::to_json(e)},
                   {"certificate", {{"case", "sin-theta"}, {"energies", report::to_json(cert)}, {"pass", ok}}}};
    out.code = ok ? kPass : kFail;
    std::ostringstream s;
    s << "logpolar " << name << ": zeroth " << e.zeroth << ", first " << e.first;
    if (e.fourth) s << ", fourth " << *e.fourth;
    out.summary.push_back(s.str());
    return out;
}

Outcome cmd_eigenvalue(const json& cfg) {
    const DomainSpec domain = parse_domain(cfg.at("domain"));
    const GridPtr grid = domain.build(resolution_for_cells(positive_int(cfg, "resolution")));
    EigenOptions eopt;
    eopt.tol = positive(cfg, "tol");
    const EigenResult e = first_dirichlet_eigenvalue(grid, eopt);
    Outcome out;
    out.results = report::to_json(e, domain);
    if (!cfg.at("expected").is_null()) {
        const double expected = get<double>(cfg, "expected");
        const double rel = std::abs(e.lambda1 - expected) / std::abs(expected);
        out.results["relative_error"] = num(rel);
        out.code = rel <= positive(cfg, "rel_tol") ? kPass : kFail;
    }
    std::ostringstream s;
    s << "eigenvalue: lambda1 = " << std::setprecision(10) << e.lambda1 << " (" << e.iterations << " iterations)";
    out.summary.push_back(s.str());
    return out;
}

Outcome cmd_sweep(const json& cfg) {
    const InequalityKind kind = parse_kind(cfg);
    const DomainSpec domain = parse_domain(cfg.at("domain"));
    const auto weight = parse_weight(cfg.at("weight"), weight_options(cfg));
    auto res = resolutions_of(cfg);
    if (res.size() < 2) throw ConfigError("a sweep needs at least two resolutions");
    std::sort(res.begin(), res.end());
    CheckOptions copt;
    copt.c_tol = positive(cfg, "c_tol");
    const GridPtr coarse = domain.build(resolution_for_cells(res.front()));
    json lambda_report;
    const CheckParams params = parse_params(cfg, coarse, lambda_report);
    const Weight wc = weight.build(coarse);
    const BumpSet f =
        random_bumps(*coarse, sub_seed(seed_of(cfg), 0), positive_int(cfg, "bumps"), positive_int(cfg, "margin"), &wc);

    std::vector<int> lattice;
    for (int r : res) lattice.push_back(resolution_for_cells(r));
    const std::vector<SweepRow> rows = refinement_sweep(kind, weight.build, domain, params, lattice, f, copt);

    Outcome out;
    json table = json::array();
    bool ok = true;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        table.push_back({{"resolution", res[i]},
                         {"h", rows[i].h},
                         {"ratio", num(rows[i].report.ratio)},
                         {"defect", num(rows[i].defect)},
                         {"report", report::to_json(rows[i].report)}});
        ok = ok && passed(rows[i].report.verdict);
    }
    out.results = {{"lambda1", lambda_report}, {"rows", table}};
    out.code = ok ? kPass : kFail;
    out.summary.push_back(std::string("sweep ") + to_string(kind) + ": " + (ok ? "pass" : "fail"));
    return out;
}

// ---------------------------------------------------------------- driver

struct Flags {
    std::string config;
    std::map<std::string, std::string> values;  // config key -> raw flag text
    bool json = false;
};

json flag_value(const std::string& key, const std::string& text) {
    // Numbers and JSON literals parse as JSON; anything else is a string.
    if (key == "weight" || key == "domain" || key == "kind" || key == "case" || key == "out" || key == "one_form" ||
        key == "mode_file")
        return text;
    // "64,128,256" is shorthand for a JSON list
    if (key == "resolutions" && !text.empty() && text.front() != '[') return flag_value(key, "[" + text + "]");
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
        return text;
    }
}

int run(int argc, char** argv) {
    CLI::App app{"Weighted elliptic inequalities laboratory"};
    app.require_subcommand(1);
    Flags flags;

    struct Subcommand {
        const char* name;
        const char* help;
        std::vector<std::pair<std::string, std::string>> options;  // flag, config key
    };
    const std::vector<std::pair<std::string, std::string>> common = {
        {"--seed", "seed"}, {"--out", "out"}, {"--g-tol", "g_tol"}, {"--omega-tol", "omega_tol"}};
    const std::vector<Subcommand> subcommands = {
        {"verify-weight", "Check the weak weight equation and its O(h^2) convergence",
         {{"--weight", "weight"}, {"--domain", "domain"}, {"--resolutions", "resolutions"}, {"--seeds", "seeds"},
          {"--bumps", "bumps"}, {"--margin", "margin"}, {"--ratio-tol", "ratio_tol"}}},
        {"check", "Evaluate one of the three weighted inequalities over seeded test functions",
         {{"--kind", "kind"}, {"--weight", "weight"}, {"--domain", "domain"}, {"--seeds", "seeds"},
          {"--bumps", "bumps"}, {"--margin", "margin"}, {"--tau", "tau"}, {"--eps", "eps"},
          {"--lambda1", "lambda1"}, {"--c-tol", "c_tol"}}},
        {"decompose", "Unweighted and weighted Hodge decompositions with the gap estimate",
         {{"--weight", "weight"}, {"--domain", "domain"}, {"--bumps", "bumps"}, {"--margin", "margin"},
          {"--eps", "eps"}, {"--one-form", "one_form"}, {"--cg-tol", "cg_tol"}, {"--residual-tol", "residual_tol"}}},
        {"lemma-fuzz", "Randomized test of the symmetric-matrix identity",
         {{"--samples", "samples"}, {"--bound", "bound"}, {"--defect-tol", "defect_tol"}}},
        {"logpolar", "Energies of named fields on the log-polar cylinder",
         {{"--case", "case"}, {"--eps", "eps"}, {"--t-max", "t_max"}, {"--nt", "nt"}, {"--modes", "modes"},
          {"--mode-file", "mode_file"}}},
        {"eigenvalue", "First Dirichlet eigenvalue by inverse power iteration",
         {{"--domain", "domain"}, {"--tol", "tol"}, {"--expected", "expected"}, {"--rel-tol", "rel_tol"}}},
        {"sweep", "Refinement sweep of one inequality on a fixed test function",
         {{"--kind", "kind"}, {"--weight", "weight"}, {"--domain", "domain"}, {"--resolutions", "resolutions"},
          {"--bumps", "bumps"}, {"--margin", "margin"}, {"--tau", "tau"}, {"--eps", "eps"},
          {"--lambda1", "lambda1"}, {"--c-tol", "c_tol"}}},
    };

    std::map<std::string, std::string> raw;
    std::string resolution_text;
    for (const Subcommand& sc : subcommands) {
        CLI::App* sub = app.add_subcommand(sc.name, sc.help);
        sub->add_option("--config", flags.config, "JSON config file; flags override its values");
        sub->add_flag("--json", flags.json, "Print the JSON report to stdout");
        sub->add_option("--resolution", resolution_text, "Cells per unit length (h = 1/N)");
        auto all = sc.options;
        all.insert(all.end(), common.begin(), common.end());
        for (const auto& [flag, key] : all) {
            const std::string k = key;
            sub->add_option_function<std::string>(flag, [&raw, k](const std::string& v) { raw[k] = v; },
                                                   "Overrides config key '" + key + "'");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    const std::string cmd = app.get_subcommands().front()->get_name();
    json cfg = defaults(cmd);
    if (!flags.config.empty()) merge_config_file(cfg, flags.config, cmd);
    for (const auto& [k, v] : raw) cfg[k] = flag_value(k, v);
    if (!resolution_text.empty()) {
        const json r = flag_value("resolution", resolution_text);
        if (cfg.contains("resolution")) {
            cfg["resolution"] = r;
        } else if (cfg.contains("resolutions")) {
            // a single resolution N becomes the pair (N, 2N) for convergence checks
            if (!r.is_number_integer()) throw ConfigError("--resolution must be an integer");
            cfg["resolutions"] = {r.get<std::int64_t>(), 2 * r.get<std::int64_t>()};
        } else {
            throw ConfigError(cmd + " takes no resolution");
        }
    }
    if (flags.json) cfg["json"] = true;

    std::optional<std::filesystem::path> outdir;
    if (!cfg.at("out").is_null()) {
        outdir = get<std::string>(cfg, "out");
        std::filesystem::create_directories(*outdir);
    }

    Outcome out;
    if (cmd == "verify-weight") out = cmd_verify_weight(cfg);
    else if (cmd == "check") out = cmd_check(cfg);
    else if (cmd == "decompose") out = cmd_decompose(cfg, outdir);
    else if (cmd == "lemma-fuzz") out = cmd_lemma_fuzz(cfg);
    else if (cmd == "logpolar") out = cmd_logpolar(cfg);
    else if (cmd == "eigenvalue") out = cmd_eigenvalue(cfg);
    else if (cmd == "sweep") out = cmd_sweep(cfg);

    // Output-only settings stay out of the embedded config so reports compare across output paths.
    json embedded = cfg;
    embedded.erase("out");
    embedded.erase("json");
    json rep = {{"command", cmd}, {"config", embedded}, {"results", out.results}, {"exit_code", out.code}};
    const std::string text = rep.dump(2) + "\n";
    if (outdir) write_file(*outdir / "report.json", text);
    if (get<bool>(cfg, "json")) {
        std::cout << text;
    } else {
        for (const auto& line : out.summary) std::cout << line << '\n';
    }
    return out.code;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kConfig;
    } catch (const InvalidArgument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return kConfig;
    } catch (const SolverFailure& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfig;
    }
}
