#include <cmath>
#include <sstream>

#include "catch_amalgamated.hpp"
#include "wel/calculus.hpp"
#include "wel/cg.hpp"
#include "wel/rng.hpp"
#include "wel/sym2.hpp"

using namespace wel;
using Catch::Approx;

namespace {

GridPtr square(int cells) { return build_rectangle({0, 0}, 1, 1, resolution_for_cells(cells)); }

// Smooth field vanishing (with all derivatives) outside the disk of radius r about c.
double bump(Point x, Point c, double r) {
    const double q = dot(x - c, x - c) / (r * r);
    return q >= 1 ? 0.0 : std::exp(1 - 1 / (1 - q));
}

}  // namespace

TEST_CASE("gradient is exact on affine and quadratic fields") {
    const GridPtr g = square(16);
    const OneForm dx = gradient(ScalarField::sample(g, [](Point p) { return p.x; }));
    for (std::size_t k : g->interior_nodes()) {
        CHECK(dx.a()[k] == Approx(1.0).epsilon(1e-13));
        CHECK(dx.b()[k] == 0.0);
    }
    const OneForm dq = gradient(ScalarField::sample(g, [](Point p) { return p.x * p.x; }));
    const std::size_t mid = g->index(8, 5);
    CHECK(g->node(mid).x == Approx(0.5));
    CHECK(dq.a()[mid] == Approx(1.0).epsilon(1e-13));
    for (std::size_t k = 0; k < g->size(); ++k)
        if (!g->interior(k)) CHECK(dq.at(k) == Vec2{});
}

TEST_CASE("gradient converges at second order") {
    double prev = 0.0;
    for (int cells : {32, 64, 128}) {
        const GridPtr g = square(cells);
        const OneForm d = gradient(ScalarField::sample(g, [](Point p) { return std::sin(pi * p.x); }));
        double err = 0.0;
        for (std::size_t k : g->interior_nodes())
            err = std::max(err, std::abs(d.a()[k] - pi * std::cos(pi * g->node(k).x)));
        if (prev > 0) CHECK(prev / err == Approx(4.0).epsilon(0.02));
        prev = err;
    }
}

TEST_CASE("five-point Laplacian") {
    const GridPtr g = square(16);
    const ScalarField q = ScalarField::sample(g, [](Point p) { return p.x * p.x + p.y * p.y; });
    const ScalarField lq = laplacian(q);
    for (std::size_t k : g->interior_nodes()) CHECK(lq[k] == Approx(4.0).epsilon(1e-10));

    const ScalarField c(g, 3.7);
    CHECK(laplacian(c).max_abs() == 0.0);

    // ln|x| is harmonic away from the origin
    const GridPtr off = build_rectangle({1, 1}, 1, 1, resolution_for_cells(64));
    const ScalarField ln = ScalarField::sample(off, [](Point p) { return std::log(norm(p)); });
    CHECK(laplacian(ln).max_abs() < 0.01 * 0.01);
}

TEST_CASE("Laplacian of a compactly supported field sums to zero") {
    const GridPtr g = square(32);
    const ScalarField f = ScalarField::sample(g, [](Point p) { return bump(p, {0.4, 0.55}, 0.3); });
    double s = 0.0;
    for (std::size_t k = 0; k < g->size(); ++k) s += laplacian(f)[k];
    CHECK(std::abs(s) < 1e-9 * laplacian(f).max_abs());
}

TEST_CASE("divergence examples") {
    const GridPtr g = square(16);
    const ScalarField d1 = divergence(OneForm::sample(g, [](Point p) { return Vec2{p.x, p.y}; }));
    const ScalarField d2 = divergence(OneForm::sample(g, [](Point p) { return Vec2{-p.y, p.x}; }));
    for (std::size_t k : g->interior_nodes()) {
        CHECK(d1[k] == Approx(2.0).epsilon(1e-12));
        CHECK(std::abs(d2[k]) < 1e-12);
    }
}

TEST_CASE("divergence of a gradient is the wide Laplacian") {
    const GridPtr g = square(24);
    const ScalarField f = ScalarField::sample(g, [](Point p) {
        return bump(p, {0.5, 0.5}, 0.35) * (1 + p.x * p.x * p.y * p.y);
    });
    const ScalarField a = divergence(gradient(f)), b = laplacian_wide(f);
    const double scale = b.max_abs();
    for (std::size_t k : g->interior_nodes()) {
        const int i = g->column(k), j = g->row(k);
        if (i < 2 || j < 2 || i > g->nx() - 3 || j > g->ny() - 3) continue;
        CHECK(std::abs(a[k] - b[k]) <= 1e-12 * scale);
    }
}

TEST_CASE("Hodge star") {
    const GridPtr g = square(8);
    OneForm w(g);
    w.set(10, {1, 0});
    CHECK(hodge_star(w).at(10) == Vec2{0, 1});
    Rng rng(3);
    for (std::size_t k = 0; k < w.size(); ++k) w.set(k, {rng.uniform(-1, 1), rng.uniform(-1, 1)});
    const OneForm s = hodge_star(w), ss = hodge_star(s);
    for (std::size_t k = 0; k < w.size(); ++k) {
        CHECK(ss.at(k) == -1.0 * w.at(k));
        CHECK(dot(s.at(k), w.at(k)) == 0.0);
        CHECK(dot(s.at(k), s.at(k)) == dot(w.at(k), w.at(k)));
    }
}

TEST_CASE("curl examples") {
    const GridPtr flat = square(16);
    const GridPtr conf = with_conformal_factor(
        flat, ScalarField::sample(flat, [](Point p) { return 0.3 * std::sin(pi * p.x) * std::sin(pi * p.y); }));
    const ScalarField xi = ScalarField::sample(flat, [](Point p) { return p.x * p.x - 3 * p.x * p.y + 2 * p.y; });
    // derivatives vanish off the mask, so d(d xi) = 0 holds where the curl stencil sees only interior nodes
    const ScalarField cc = curl(gradient(xi));
    const std::size_t sy = flat->stride_y();
    for (std::size_t k : flat->interior_nodes())
        if (flat->interior(k + 1) && flat->interior(k - 1) && flat->interior(k + sy) && flat->interior(k - sy))
            CHECK(std::abs(cc[k]) < 1e-11);

    const ScalarField rot = curl(OneForm::sample(conf, [](Point p) { return Vec2{-p.y, p.x}; }));
    for (std::size_t k : conf->interior_nodes()) CHECK(rot[k] == Approx(2.0 * conf->inv_area_factor(k)).epsilon(1e-12));

    // curl of the rotated gradient is the wide Laplacian (positive sign under this star convention)
    const GridPtr g = square(24);
    const ScalarField f = ScalarField::sample(g, [](Point p) { return bump(p, {0.5, 0.45}, 0.3); });
    const ScalarField c = curl(hodge_star(gradient(f))), l = laplacian_wide(f);
    for (std::size_t k : g->interior_nodes()) CHECK(std::abs(c[k] - l[k]) <= 1e-12 * l.max_abs());
}

TEST_CASE("integration") {
    const GridPtr g = square(32);
    const ScalarField one(g, 1.0);
    CHECK(integrate(one) == Approx(g->interior_count() * g->h() * g->h()));
    CHECK(std::abs(integrate(one) - 1.0) < 5 * g->h());

    // midpoint rule on a smooth bump: refinement oracle
    auto value = [](int cells) {
        const GridPtr gg = square(cells);
        return integrate(ScalarField::sample(gg, [](Point p) { return bump(p, {0.5, 0.5}, 0.4); }));
    };
    const double ref = value(512);
    const double e1 = std::abs(value(32) - ref), e2 = std::abs(value(64) - ref);
    CHECK(e2 < e1 / 3.0);
}

TEST_CASE("summation by parts") {
    const GridPtr g = square(48);
    const ScalarField f = ScalarField::sample(g, [](Point p) { return bump(p, {0.45, 0.5}, 0.3); });
    const ScalarField u = ScalarField::sample(g, [](Point p) { return bump(p, {0.55, 0.5}, 0.3) * p.x; });
    const double h2 = g->h() * g->h();
    double wide = 0.0, five = 0.0;
    const ScalarField lw = laplacian_wide(u), l5 = laplacian(u);
    for (std::size_t k : g->interior_nodes()) {
        wide += f[k] * lw[k] * h2;
        five += f[k] * l5[k] * h2;
    }
    const double energy = inner(gradient(f), gradient(u));
    CHECK(std::abs(wide + energy) < 1e-13);
    CHECK(std::abs(five + energy) < 50 * h2 * l2_norm(f) * l2_norm(u) * 100);
    CHECK(std::abs(five + energy) > std::abs(wide + energy));
}

TEST_CASE("gradient adjoint is minus the divergence on compact forms") {
    const GridPtr g = square(24);
    const OneForm w = OneForm::sample(g, [](Point p) {
        return Vec2{bump(p, {0.5, 0.5}, 0.3), -bump(p, {0.45, 0.55}, 0.25)};
    });
    const ScalarField adj = gradient_adjoint(w), div = divergence(w);
    for (std::size_t k : g->interior_nodes()) CHECK(adj[k] == Approx(-div[k]).margin(1e-12));
}

TEST_CASE("field CSV round trip") {
    const GridPtr g = square(8);
    const OneForm w = OneForm::sample(g, [](Point p) { return Vec2{std::sin(p.x), 1e-310 * p.y}; });
    std::stringstream ss;
    write_csv(ss, w);
    const OneForm r = read_one_form_csv(ss, g);
    for (std::size_t k = 0; k < g->size(); ++k) CHECK(r.at(k) == w.at(k));

    std::stringstream bad;
    write_csv(bad, w);
    CHECK_THROWS_AS(read_one_form_csv(bad, square(16)), InvalidArgument);
    std::stringstream wrong_header("x,y,value\n");
    CHECK_THROWS_AS(read_one_form_csv(wrong_header, g), InvalidArgument);
}

TEST_CASE("symmetric-matrix identity: hand-derived values") {
    const auto id = sym2_identity({1, 0, 1}, {1, 0}, {0, 1});
    CHECK(id.lhs == -2.0);
    CHECK(id.rhs == -2.0);
    const auto tf = sym2_identity({1, 0, -1}, {1, 0}, {0, 1});
    CHECK(tf.lhs == 0.0);
    CHECK(tf.rhs == 0.0);
    const auto m = sym2_identity({2, 1, 3}, {1, 2}, {3, -1});
    CHECK(m.lhs == -245.0);
    CHECK(m.rhs == -245.0);
}

TEST_CASE("symmetric-matrix identity: random triples") {
    Rng rng(11);
    double worst = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const Sym2 A{rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10)};
        const Vec2 b{rng.uniform(-10, 10), rng.uniform(-10, 10)}, c{rng.uniform(-10, 10), rng.uniform(-10, 10)};
        worst = std::max(worst, relative_defect(sym2_identity(A, b, c)));
    }
    CHECK(worst <= 1e-12);
    // nearly colinear b and c: both sides tiny, no singularity
    const auto near = sym2_identity({3, -2, 5}, {1, 2}, {1 + 1e-9, 2});
    CHECK(relative_defect(near) <= 1e-12);
}

TEST_CASE("conjugate gradients") {
    const GridPtr g = square(32);
    SECTION("identity operator converges in one step") {
        const ScalarField rhs = ScalarField::sample(g, [](Point p) { return p.x - p.y * p.y; }).masked();
        const FieldSolve s = cg_solve([](const ScalarField& x) { return x; }, rhs, {1e-12, 10});
        CHECK(s.iterations == 1);
        for (std::size_t k : g->interior_nodes()) CHECK(s.x[k] == Approx(rhs[k]));
    }
    SECTION("manufactured solution") {
        const ScalarField u =
            ScalarField::sample(g, [](Point p) { return std::sin(pi * p.x) * std::sin(pi * p.y); }).masked();
        const ScalarField rhs = -1.0 * laplacian(u);
        const FieldSolve s = cg_solve([](const ScalarField& x) { return -1.0 * laplacian(x.masked()); }, rhs,
                                      {1e-12, 10000});
        double err = 0.0;
        for (std::size_t k : g->interior_nodes()) err = std::max(err, std::abs(s.x[k] - u[k]));
        CHECK(err < 1e-9);
    }
    SECTION("indefinite operator is detected") {
        const double shift = 2 * pi * pi * 1.5;  // past lambda1 = 2 pi^2
        const ScalarField rhs = ScalarField::sample(g, [](Point p) { return std::sin(pi * p.x) * std::sin(pi * p.y); }).masked();
        CHECK_THROWS_AS(cg_solve([&](const ScalarField& x) { return -1.0 * laplacian(x.masked()) - shift * x.masked(); },
                                 rhs, {1e-12, 10000}),
                        SolverFailure);
    }
    SECTION("iteration budget") {
        const ScalarField rhs = ScalarField::sample(g, [](Point p) { return p.x; }).masked();
        try {
            cg_solve([](const ScalarField& x) { return -1.0 * laplacian(x.masked()); }, rhs, {1e-14, 3});
            FAIL("expected SolverFailure");
        } catch (const SolverFailure& e) {
            CHECK(e.iterations() == 3);
            CHECK(e.best_iterate().size() == g->interior_count());
            CHECK(std::isfinite(e.residual()));
        }
    }
}
