#include <cmath>

#include "catch_amalgamated.hpp"
#include "wel/test_functions.hpp"
#include "wel/weights.hpp"

using namespace wel;
using Catch::Approx;

namespace {

GridPtr disk(int cells) { return build_disk({0, 0}, 1, resolution_for_cells(cells)); }

BumpSet annulus_bumps() {
    return BumpSet{{{{0.45, 0.1}, 0.25, 1.0}, {{-0.3, -0.4}, 0.2, -0.7}}};
}

}  // namespace

TEST_CASE("power weight |x| has unit gradient") {
    const GridPtr g = disk(64);
    const Weight w = power_product_weight({{0, 0}}, {1.0}, g);
    REQUIRE(w.provenance.points.size() == 1);
    CHECK(w.provenance.points[0].offset);
    for (std::size_t k = 0; k < g->size(); ++k) {
        CHECK(w.omega[k] == Approx(norm(g->node(k) - w.provenance.points[0].used)).epsilon(1e-14));
        CHECK(w.grad_norm[k] == Approx(1.0).epsilon(1e-12));
    }
    CHECK(w.critical_nodes.empty());
    CHECK(w.kappa.max_abs() == 0.0);
}

TEST_CASE("two-point weight and its critical point") {
    const GridPtr g = disk(128);
    const Weight w = power_product_weight({{0, 0}, {1, 0}}, {1.0, 1.0}, g);
    const Point p0 = w.provenance.points[0].used, p1 = w.provenance.points[1].used;
    for (std::size_t k : g->interior_nodes()) {
        const Point x = g->node(k);
        CHECK(w.omega[k] == Approx(norm(x - p0) * norm(x - p1)).epsilon(1e-13));
    }
    REQUIRE_FALSE(w.critical_nodes.empty());
    for (std::size_t k : w.critical_nodes) CHECK(norm(g->node(k) - Point{0.5, 0.0}) < 3 * g->h());
}

TEST_CASE("weight invariants") {
    const GridPtr g = disk(64);
    for (const Weight& w : {power_product_weight({{0, 0}, {1, 0}}, {1.0, 1.0}, g),
                            power_product_weight({{0.2, -0.1}}, {0.5}, g),
                            green_exponential_weight({{0, 0}}, {2 * pi}, g)}) {
        for (std::size_t k = 0; k < g->size(); ++k) {
            CHECK(w.omega[k] >= 0.0);
            const Vec2 d = w.grad_omega.at(k);
            CHECK(w.grad_norm[k] * w.grad_norm[k] == Approx(dot(d, d)).epsilon(1e-12));
        }
        for (std::size_t k : g->interior_nodes()) {
            if (!w.singular(k)) CHECK(w.omega[k] > 0.0);
            if (!w.excluded(k)) CHECK(w.grad_norm[k] >= w.options.g_tol);
        }
    }
}

TEST_CASE("doubling the exponents squares the weight") {
    const GridPtr g = disk(32);
    const Weight a = power_product_weight({{0.1, 0.2}, {-0.3, 0.0}}, {0.7, 1.3}, g);
    const Weight b = power_product_weight({{0.1, 0.2}, {-0.3, 0.0}}, {1.4, 2.6}, g);
    for (std::size_t k = 0; k < g->size(); ++k) {
        CHECK(b.omega[k] == Approx(a.omega[k] * a.omega[k]).epsilon(1e-12));
        if (a.omega[k] > 0) CHECK(std::log(b.omega[k]) == Approx(2 * std::log(a.omega[k])).margin(1e-12));
    }
}

TEST_CASE("weight preconditions") {
    const GridPtr g = disk(16);
    CHECK_THROWS_AS(power_product_weight({}, {}, g), InvalidArgument);
    CHECK_THROWS_AS(power_product_weight({{0, 0}}, {0.0}, g), InvalidArgument);
    CHECK_THROWS_AS(power_product_weight({{0, 0}}, {1.0, 2.0}, g), InvalidArgument);
    CHECK_THROWS_AS(power_product_weight({{3, 0}}, {1.0}, g), InvalidArgument);
    CHECK_THROWS_AS(green_function(g, {5, 5}), InvalidArgument);
    CHECK_THROWS_AS(sampled_weight(ScalarField(g, -1.0)), InvalidArgument);
}

TEST_CASE("Green's function of the unit disk") {
    const GridPtr g = disk(64);
    const ScalarField G = green_function(g, {0, 0});
    double worst = 0.0;
    for (std::size_t k : g->interior_nodes()) {
        const double r = norm(g->node(k));
        if (r < 10 * g->h() || r > 1 - 10 * g->h()) continue;
        const double exact = -std::log(r) / (2 * pi);
        worst = std::max(worst, std::abs(G[k] - exact) / exact);
    }
    CHECK(worst < 0.03);
    for (std::size_t k = 0; k < g->size(); ++k)
        if (!g->interior(k)) CHECK(G[k] == 0.0);
}

TEST_CASE("Green's function of the square is symmetric") {
    const GridPtr g = build_rectangle({0, 0}, 1, 1, resolution_for_cells(32));
    const ScalarField G = green_function(g, {0.5, 0.5});
    const int n = g->nx() - 1;
    const double scale = G.max_abs();
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) {
            const double v = G[g->index(i, j)];
            CHECK(std::abs(v - G[g->index(j, i)]) < 1e-9 * scale);
            CHECK(std::abs(v - G[g->index(n - i, j)]) < 1e-9 * scale);
            CHECK(std::abs(v - G[g->index(i, n - j)]) < 1e-9 * scale);
        }
}

TEST_CASE("Green's function duality") {
    const GridPtr g = disk(64);
    const Point p{0.1, -0.2};
    const ScalarField G = green_function(g, p);
    const BumpSet phi{{{{0.0, 0.0}, 0.6, 1.0}}};
    const ScalarField f = phi.sample(g);
    const std::size_t src = g->index(static_cast<int>(std::lround((p.x - g->origin().x) / g->h())),
                                     static_cast<int>(std::lround((p.y - g->origin().y) / g->h())));
    // the discrete pairing of the 5-point operator is exact; the centered-gradient pairing is O(h^2)
    double five = 0.0;
    const ScalarField lap = laplacian(G);
    for (std::size_t k : g->interior_nodes()) five -= lap[k] * f[k] * g->h() * g->h();
    CHECK(five == Approx(f[src]).epsilon(1e-9));
    CHECK(inner(gradient(G), gradient(f)) == Approx(f[src]).epsilon(0.02));
}

TEST_CASE("Green-exponential weights") {
    const GridPtr g = disk(128);
    const Weight one = green_exponential_weight({}, {}, g);
    for (std::size_t k = 0; k < g->size(); ++k) CHECK(one.omega[k] == 1.0);

    const Weight w = green_exponential_weight({{0, 0}}, {2 * pi}, g);
    double worst = 0.0;
    for (std::size_t k : g->interior_nodes()) {
        const double r = norm(g->node(k));
        if (r <= 10 * g->h() || r >= 1 - 10 * g->h()) continue;
        worst = std::max(worst, std::abs(w.omega[k] - r) / r);
    }
    CHECK(worst < 0.02);
    for (std::size_t k = 0; k < g->size(); ++k)
        if (!g->interior(k)) CHECK(w.omega[k] == 1.0);
}

TEST_CASE("weak equation: constant weight gives exactly zero") {
    const GridPtr g = disk(64);
    const ScalarField f = annulus_bumps().sample(g);
    CHECK(weak_equation_residual(green_exponential_weight({}, {}, g), f).value == 0.0);
    const Weight c = sampled_weight(ScalarField(g, 2.5), 0.0);
    CHECK(weak_equation_residual(c, f).value == 0.0);
}

TEST_CASE("weak equation: |x| converges at second order") {
    const BumpSet phi = annulus_bumps();
    std::vector<double> r;
    for (int cells : {64, 128, 256}) {
        const GridPtr g = disk(cells);
        const Weight w = power_product_weight({{0, 0}}, {1.0}, g);
        const WeakResidual res = weak_equation_residual(w, phi.sample(g));
        CHECK_FALSE(res.flagged);
        r.push_back(std::abs(res.value));
    }
    CHECK(r[0] / r[1] == Approx(4.0).epsilon(0.25));
    CHECK(r[1] / r[2] == Approx(4.0).epsilon(0.25));
}

TEST_CASE("weak equation: exp(|x|^2) with kappa = -4") {
    const BumpSet phi = annulus_bumps();
    std::vector<double> r;
    for (int cells : {64, 128}) {
        const GridPtr g = disk(cells);
        const Weight w = sampled_weight(ScalarField::sample(g, [](Point x) { return std::exp(dot(x, x)); }), -4.0);
        r.push_back(std::abs(weak_equation_residual(w, phi.sample(g)).value));
        // with the wrong kappa the residual is O(1)
        CHECK(std::abs(weak_equation_residual(w, ScalarField(g, 0.0), phi.sample(g)).value) > 100 * r.back());
    }
    CHECK(r[0] / r[1] == Approx(4.0).epsilon(0.25));
}

TEST_CASE("estimated kappa of a sampled weight") {
    const GridPtr g = disk(64);
    const Weight w = sampled_weight(ScalarField::sample(g, [](Point x) { return std::exp(dot(x, x)); }));
    CHECK_FALSE(w.kappa_constant);
    for (std::size_t k : g->interior_nodes()) CHECK(w.kappa[k] == Approx(-4.0).epsilon(1e-6));
}

TEST_CASE("weak residual is linear in phi") {
    const GridPtr g = disk(64);
    const Weight w = power_product_weight({{0, 0}}, {1.0}, g);
    const ScalarField a = annulus_bumps().sample(g);
    const ScalarField b = BumpSet{{{{0.0, 0.5}, 0.2, 1.0}}}.sample(g);
    const double ra = weak_equation_residual(w, a).value, rb = weak_equation_residual(w, b).value;
    CHECK(weak_equation_residual(w, 2.0 * a + b).value == Approx(2 * ra + rb).epsilon(1e-10));
}

TEST_CASE("weak residual flags and rejects bad supports") {
    const GridPtr g = disk(64);
    const Weight w = power_product_weight({{0, 0}}, {1.0}, g);
    const BumpSet near_zero{{{{0.0, 0.0}, 0.2, 1.0}}};
    CHECK(weak_equation_residual(w, near_zero.sample(g)).flagged);
    const ScalarField edge = ScalarField(g, 1.0).masked();
    CHECK_THROWS_AS(weak_equation_residual(w, edge), InvalidArgument);
}
