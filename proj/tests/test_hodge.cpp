#include <cmath>

#include "catch_amalgamated.hpp"
#include "wel/hodge.hpp"

using namespace wel;
using Catch::Approx;

namespace {

GridPtr disk(int cells) { return build_disk({0, 0}, 1, resolution_for_cells(cells)); }

double max_diff(const ScalarField& a, const ScalarField& b) { return (a - b).max_abs(); }

// A annulus-supported one-form away from |x| = 0 and the boundary.
OneForm annulus_form(const GridPtr& g) {
    const BumpSet a{{{{0.45, 0.1}, 0.3, 1.0}, {{-0.3, -0.45}, 0.25, -0.6}}};
    const BumpSet b{{{{-0.4, 0.3}, 0.3, 0.8}, {{0.2, -0.5}, 0.25, 1.1}}};
    return OneForm::sample(g, [&](Point x) { return Vec2{a(x), b(x)}; });
}

}  // namespace

TEST_CASE("manufactured decomposition is recovered") {
    const GridPtr g = disk(64);
    const ScalarField alpha = BumpSet{{{{0.2, 0.1}, 0.5, 1.0}}}.sample(g);
    const ScalarField beta = BumpSet{{{{-0.2, 0.3}, 0.4, -0.7}}}.sample(g);
    const OneForm A = hodge_star(gradient(alpha)) + gradient(beta);
    const auto d = unweighted_decompose(A);
    REQUIRE(d.converged());
    CHECK(max_diff(d.xi1, alpha) <= 1e-7 * alpha.max_abs());
    CHECK(d.residual <= 1e-7 * l2_norm(A));
    CHECK(l2_norm(gradient(d.xi2) - gradient(beta)) <= 1e-6 * l2_norm(gradient(beta)));
}

TEST_CASE("unweighted reconstruction and orthogonality") {
    const GridPtr g = disk(64);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const OneForm A = random_one_form(g, seed, 3, 2);
        const auto d = unweighted_decompose(A);
        REQUIRE(d.converged());
        CHECK(d.residual <= 1e-5 * l2_norm(A));
        CHECK(d.energy <= d.energy_at_zero);
        const OneForm co = hodge_star(gradient(d.xi1)), ex = gradient(d.xi2);
        CHECK(std::abs(inner(co, ex)) <= 1e-6 * l2_norm(co) * l2_norm(ex) + 1e-12);
        for (std::size_t k = 0; k < g->size(); ++k)
            if (!g->interior(k)) CHECK(d.xi1[k] == 0.0);
    }
}

TEST_CASE("the decomposition is linear") {
    const GridPtr g = disk(32);
    const OneForm A = random_one_form(g, 4, 2, 2), B = random_one_form(g, 5, 2, 2);
    const auto a = unweighted_decompose(A), b = unweighted_decompose(B), c = unweighted_decompose(A + 2.0 * B);
    const ScalarField lin = a.xi1 + 2.0 * b.xi1;
    CHECK(max_diff(c.xi1, lin) <= 1e-7 * lin.max_abs());
}

TEST_CASE("unit weight reproduces the unweighted split") {
    const GridPtr g = disk(64);
    const Weight one = green_exponential_weight({}, {}, g);
    const OneForm A = random_one_form(g, 9, 3, 2, &one);
    const auto r = decompose(A, one, 0.5);
    CHECK(l2_norm(r.phi1() - r.xi1()) <= 1e-8 * r.norm_A);
    CHECK(r.gap.lhs <= 1e-16 * r.norm_A * r.norm_A);
    CHECK(r.weighted.weight_ratio == 1.0);
    CHECK_FALSE(r.multiply_connected);
}

TEST_CASE("weighted reconstruction for |x|") {
    const GridPtr g = disk(64);
    const Weight w = power_product_weight({{0, 0}}, {1.0}, g);
    const OneForm A = annulus_form(g);
    const auto d = weighted_decompose(A, w);
    REQUIRE(d.converged());
    CHECK(d.residual <= 1e-5 * l2_norm(A.scaled_by(w.omega)));
    CHECK(d.energy <= d.energy_at_zero);
    CHECK(std::isfinite(d.weight_ratio));
    CHECK_FALSE(d.ill_conditioned);
    CHECK(d.excluded_nodes == 0);
}

TEST_CASE("scaling the weight") {
    // c omega A = * c omega d phi1 + (c omega)^-1 d(c^2 phi2)
    const GridPtr g = disk(32);
    const Weight w = power_product_weight({{0, 0}}, {1.0}, g);
    const OneForm A = annulus_form(g);
    const auto a = weighted_decompose(A, w), b = weighted_decompose(A, w.scaled(3.0));
    CHECK(max_diff(a.phi1, b.phi1) <= 1e-7 * a.phi1.max_abs());
    CHECK(max_diff(9.0 * a.phi2, b.phi2) <= 1e-6 * b.phi2.max_abs());
}

TEST_CASE("gap estimate for |x|") {
    const GridPtr g = disk(64);
    const Weight w = power_product_weight({{0, 0}}, {1.0}, g);
    const auto r = decompose(annulus_form(g), w, 0.5);
    REQUIRE(r.converged());
    CHECK(r.gap.lhs > 0.0);
    CHECK(r.gap.end_to_end == Verdict::Pass);
    CHECK(r.gap.chain == Verdict::Pass);
    CHECK(r.gap.lhs <= r.gap.end_to_end_bound);
    CHECK(r.gap.rhs4_perp <= r.gap.rhs4);
    CHECK(r.gap.C_eps == Approx(epsilon_constant(0.5)));
    CHECK(r.gap.excluded_nodes == 0);
}

TEST_CASE("decomposition preconditions") {
    const GridPtr g = disk(16);
    OneForm bad(g);
    bad.set(0, {1.0, 0.0});  // off the mask
    CHECK_THROWS_AS(unweighted_decompose(bad), InvalidArgument);
    const Weight w = power_product_weight({{0, 0}}, {1.0}, disk(32));
    CHECK_THROWS_AS(weighted_decompose(OneForm(g), w), InvalidArgument);
    const ScalarField z(w.grid_ptr());
    CHECK_THROWS_AS(gap_estimate(z, z, z, w, 0.0), InvalidArgument);
}

TEST_CASE("solver failure is reported, not thrown") {
    const GridPtr g = disk(32);
    HodgeOptions opt;
    opt.cg.max_iter = 2;
    const auto d = unweighted_decompose(random_one_form(g, 1, 2, 2), opt);
    CHECK_FALSE(d.converged());
    CHECK_FALSE(d.solve_xi1.failure.empty());
}

TEST_CASE("holes in the mask") {
    CHECK(mask_holes(*disk(16)) == 0);
    const GridPtr g = disk(32);
    std::vector<std::uint8_t> mask = g->mask();
    for (std::size_t k = 0; k < g->size(); ++k)
        if (norm(g->node(k)) < 0.3) mask[k] = 0;
    const GridPtr ring = std::make_shared<const Grid2D>(g->nx(), g->ny(), g->h(), g->origin(), mask);
    CHECK(mask_holes(*ring) == 1);
    const Weight one = green_exponential_weight({}, {}, ring);
    CHECK(decompose(random_one_form(ring, 2, 2, 2, &one), one, 0.5).multiply_connected);
}

TEST_CASE("random one-forms are deterministic and compactly supported") {
    const GridPtr g = disk(32);
    const Weight w = power_product_weight({{0, 0}}, {1.0}, g);
    const OneForm a = random_one_form(g, 17, 3, 2, &w), b = random_one_form(g, 17, 3, 2, &w);
    CHECK(l2_norm(a - b) == 0.0);
    CHECK(l2_norm(a - random_one_form(g, 18, 3, 2, &w)) > 0.0);
    for (std::size_t k = 0; k < g->size(); ++k)
        if (!g->interior(k)) CHECK(norm(a.at(k)) == 0.0);
}
