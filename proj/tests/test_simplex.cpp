#include "doctest.h"

#include "gridtopo/simplex.hpp"
#include "lp_oracles.hpp"

using namespace gridtopo;
using namespace gridtopo::lp;

TEST_CASE("one variable box") {
    Problem p;
    p.add_col(3.0, 10.0, 1.0);
    Simplex sx;
    sx.load(p);
    REQUIRE(sx.solve() == Status::Optimal);
    CHECK(sx.objective() == doctest::Approx(3.0));

    sx.set_obj(0, -2.0);
    REQUIRE(sx.solve() == Status::Optimal);
    CHECK(sx.objective() == doctest::Approx(-20.0));
}

TEST_CASE("two variables, one coupling row") {
    // min x + 2y  s.t. x + y >= 4, 0 <= x <= 3, 0 <= y <= 5
    Problem p;
    int x = p.add_col(0, 3, 1.0);
    int y = p.add_col(0, 5, 2.0);
    p.add_row(4.0, kInf, {{x, 1.0}, {y, 1.0}});
    Simplex sx;
    sx.load(p);
    REQUIRE(sx.solve() == Status::Optimal);
    CHECK(sx.objective() == doctest::Approx(5.0)); // x=3, y=1
    CHECK(sx.col_values()[x] == doctest::Approx(3.0));
    CHECK(sx.col_values()[y] == doctest::Approx(1.0));
}

TEST_CASE("infeasible pair") {
    Problem p;
    int x = p.add_col(-kInf, kInf, 0.0);
    p.add_row(2.0, kInf, {{x, 1.0}});
    p.add_row(-kInf, 1.0, {{x, 1.0}});
    Simplex sx;
    sx.load(p);
    CHECK(sx.solve() == Status::Infeasible);
}

TEST_CASE("unbounded detection via primal") {
    // min -x with x >= 0 free above, plus a harmless row to keep m > 0
    Problem p;
    int x = p.add_col(0.0, kInf, -1.0);
    int y = p.add_col(0.0, 1.0, 0.0);
    p.add_row(-kInf, kInf, {{x, 0.0}, {y, 1.0}});
    Simplex sx;
    sx.load(p);
    CHECK(sx.solve() == Status::Unbounded);
}

TEST_CASE("equality system with free variables") {
    // th free with zero cost; flow = 2*(th1 - th2); th1 fixed 0; flow = -1.5
    Problem p;
    int t1 = p.add_col(0.0, 0.0, 0.0);
    int t2 = p.add_col(-kInf, kInf, 0.0);
    int f = p.add_col(-5.0, 5.0, 1.0);
    p.add_row(0.0, 0.0, {{f, 1.0}, {t1, -2.0}, {t2, 2.0}});
    p.add_row(-1.5, -1.5, {{f, 1.0}});
    Simplex sx;
    sx.load(p);
    REQUIRE(sx.solve() == Status::Optimal);
    CHECK(sx.col_values()[t2] == doctest::Approx(0.75));
    CHECK(sx.objective() == doctest::Approx(-1.5));
}

TEST_CASE("random LPs solve to constructed optimum and satisfy KKT") {
    Rng rng(20240517);
    int solved = 0;
    for (int trial = 0; trial < 120; ++trial) {
        int n = 2 + static_cast<int>(rng.next_index(18));
        int m = 1 + static_cast<int>(rng.next_index(16));
        auto built = lptest::random_lp_with_known_optimum(rng, n, m, 0.4);
        Simplex sx;
        sx.load(built.prob);
        auto st = sx.solve();
        REQUIRE(st == Status::Optimal);
        CHECK(sx.objective() == doctest::Approx(built.objective).epsilon(1e-7));
        auto kkt = lptest::check_kkt(built.prob, sx.col_values(), sx.duals());
        if (!kkt.ok) {
            CAPTURE(trial);
            CAPTURE(kkt.what);
            CHECK(kkt.ok);
        }
        ++solved;
    }
    CHECK(solved == 120);
}

TEST_CASE("warm restarts after bound changes stay optimal") {
    Rng rng(777);
    auto built = lptest::random_lp_with_known_optimum(rng, 24, 18, 0.35);
    Simplex sx;
    sx.load(built.prob);
    REQUIRE(sx.solve() == Status::Optimal);
    auto base_iters = sx.iterations();

    Problem p = built.prob;
    for (int round = 0; round < 25; ++round) {
        int j = static_cast<int>(rng.next_index(p.num_cols()));
        double lo = p.col_lo[j], up = p.col_up[j];
        double mid = lo + (up - lo) * rng.next_double();
        if (rng.next_double() < 0.5) lo = mid; else up = mid;
        p.col_lo[j] = lo;
        p.col_up[j] = up;
        sx.set_col_bounds(j, lo, up);
        auto st = sx.solve();
        if (st == Status::Optimal) {
            auto kkt = lptest::check_kkt(p, sx.col_values(), sx.duals());
            CAPTURE(round);
            CAPTURE(kkt.what);
            CHECK(kkt.ok);
            // cross-check against a cold solve
            Simplex cold;
            cold.load(p);
            REQUIRE(cold.solve() == Status::Optimal);
            CHECK(sx.objective() == doctest::Approx(cold.objective()).epsilon(1e-7));
        } else {
            CHECK(st == Status::Infeasible);
            Simplex cold;
            cold.load(p);
            CHECK(cold.solve() == Status::Infeasible);
        }
    }
    CHECK(sx.iterations() > base_iters); // it did work, just incrementally
}

TEST_CASE("objective changes reuse the basis via primal") {
    Rng rng(31337);
    auto built = lptest::random_lp_with_known_optimum(rng, 20, 14, 0.4);
    Simplex sx;
    sx.load(built.prob);
    REQUIRE(sx.solve() == Status::Optimal);
    Problem p = built.prob;
    for (int round = 0; round < 10; ++round) {
        int j = static_cast<int>(rng.next_index(p.num_cols()));
        double c = std::round((2.0 * rng.next_double() - 1.0) * 4.0) / 2.0;
        p.obj[j] = c;
        sx.set_obj(j, c);
        auto st = sx.solve_primal();
        REQUIRE(st == Status::Optimal);
        auto kkt = lptest::check_kkt(p, sx.col_values(), sx.duals());
        CAPTURE(kkt.what);
        CHECK(kkt.ok);
    }
}

TEST_CASE("degenerate ties do not cycle") {
    // many rows through the same vertex
    Problem p;
    int x = p.add_col(0.0, 10.0, 1.0);
    int y = p.add_col(0.0, 10.0, 1.0);
    for (int k = 0; k < 12; ++k)
        p.add_row(1.0, kInf, {{x, 1.0 + 0.0 * k}, {y, 1.0}});
    Simplex sx;
    sx.load(p);
    REQUIRE(sx.solve() == Status::Optimal);
    CHECK(sx.objective() == doctest::Approx(1.0));
}
