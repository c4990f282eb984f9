#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "gridtopo/mip.hpp"
#include "gridtopo/mps.hpp"
#include "lp_oracles.hpp"

using namespace gridtopo;
using namespace gridtopo::mip;

namespace {

std::string tmp_path(const std::string& name) {
    return std::string("/tmp/gridtopo_test_") + name;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// random bounded MIP with a handful of binaries; rhs anchored near the
// all-zero activity so most instances stay feasible
MipInstance random_mip(Rng& rng, int ncont, int nbin, int nrows) {
    MipInstance m;
    for (int j = 0; j < ncont; ++j)
        m.add_var("x" + std::to_string(j), -2.0 - rng.next_double(), 2.0 + rng.next_double(),
                  VarKind::Continuous, std::round((rng.next_double() * 4 - 2) * 4) / 4.0);
    for (int j = 0; j < nbin; ++j)
        m.add_var("z" + std::to_string(j), 0, 1, VarKind::Binary,
                  std::round((rng.next_double() * 4 - 2) * 4) / 4.0);
    for (int i = 0; i < nrows; ++i) {
        std::vector<std::pair<int, double>> coef;
        for (int j = 0; j < ncont + nbin; ++j)
            if (rng.next_double() < 0.35)
                coef.push_back({j, std::round((rng.next_double() * 2 - 1) * 8) / 2.0});
        if (coef.empty()) continue;
        double r = rng.next_double();
        Sense s = r < 0.45 ? Sense::LessEqual : r < 0.9 ? Sense::GreaterEqual : Sense::Equal;
        double rhs = (s == Sense::LessEqual ? 1.0 : -1.0) * (0.5 + rng.next_double());
        if (s == Sense::Equal) rhs = 0.0;
        m.add_row("r" + std::to_string(i), s, rhs, std::move(coef));
    }
    return m;
}

} // namespace

TEST_CASE("solve: one-variable box (min x, x in [3,10])") {
    MipInstance m;
    m.add_var("x", 3, 10, VarKind::Continuous, 1.0);
    auto sol = solve(m, "bnb", {});
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(3.0));
}

TEST_CASE("solve: infeasible pair") {
    MipInstance m;
    int x = m.add_var("x", -kInf, kInf, VarKind::Continuous, 0.0);
    m.add_row("ge2", Sense::GreaterEqual, 2.0, {{x, 1.0}});
    m.add_row("le1", Sense::LessEqual, 1.0, {{x, 1.0}});
    auto sol = solve(m, "bnb", {});
    CHECK(sol.status == SolveStatus::Infeasible);
}

TEST_CASE("solve: unknown backend raises a configuration error") {
    MipInstance m;
    m.add_var("x", 0, 1, VarKind::Continuous, 1.0);
    CHECK_THROWS_AS(solve(m, "no_such_backend", {}), SolveError);
}

TEST_CASE("enumerate: zero binaries equals plain LP solve") {
    Rng rng(404);
    auto built = lptest::random_lp_with_known_optimum(rng, 12, 9, 0.4);
    MipInstance m;
    for (int j = 0; j < built.prob.num_cols(); ++j)
        m.add_var("x" + std::to_string(j), built.prob.col_lo[j], built.prob.col_up[j],
                  VarKind::Continuous, built.prob.obj[j]);
    for (int i = 0; i < built.prob.num_rows(); ++i) {
        auto& r = built.prob.rows[i];
        if (r.lo == r.up)
            m.add_row("e" + std::to_string(i), Sense::Equal, r.lo, r.coef);
        else {
            if (std::isfinite(r.up))
                m.add_row("u" + std::to_string(i), Sense::LessEqual, r.up, r.coef);
            if (std::isfinite(r.lo))
                m.add_row("l" + std::to_string(i), Sense::GreaterEqual, r.lo, r.coef);
        }
    }
    std::int64_t count = 0;
    auto en = enumerate_binaries(m, {}, &count);
    REQUIRE(en.status == SolveStatus::Optimal);
    CHECK(count == 1);
    CHECK(en.objective == doctest::Approx(built.objective).epsilon(1e-7));
    auto bb = solve(m, "bnb", {});
    REQUIRE(bb.status == SolveStatus::Optimal);
    CHECK(bb.objective == doctest::Approx(built.objective).epsilon(1e-7));
}

TEST_CASE("enumerate: exclusivity row prunes to 3 assignments") {
    MipInstance m;
    int z1 = m.add_var("z1", 0, 1, VarKind::Binary, -1.0);
    int z2 = m.add_var("z2", 0, 1, VarKind::Binary, -0.5);
    m.add_row("excl", Sense::LessEqual, 1.0, {{z1, 1.0}, {z2, 1.0}});
    std::int64_t count = 0;
    auto sol = enumerate_binaries(m, {}, &count);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(count == 3);
    CHECK(sol.objective == doctest::Approx(-1.0));
    CHECK(sol.values[z1] == doctest::Approx(1.0));
    CHECK(sol.values[z2] == doctest::Approx(0.0));
}

TEST_CASE("enumerate refuses more than 24 binaries") {
    MipInstance m;
    for (int j = 0; j < 25; ++j)
        m.add_var("z" + std::to_string(j), 0, 1, VarKind::Binary, 1.0);
    CHECK_THROWS_AS(enumerate_binaries(m, {}), SolveError);
}

TEST_CASE("backend matches the enumeration oracle on random small MIPs") {
    Rng rng(90210);
    int feasible_seen = 0;
    for (int trial = 0; trial < 60; ++trial) {
        auto m = random_mip(rng, 3 + static_cast<int>(rng.next_index(5)),
                            2 + static_cast<int>(rng.next_index(6)),
                            3 + static_cast<int>(rng.next_index(8)));
        SolveOptions opt;
        opt.gap = 1e-9;
        auto en = enumerate_binaries(m, opt);
        auto bb = solve(m, "bnb", opt);
        CAPTURE(trial);
        if (en.status == SolveStatus::Infeasible) {
            CHECK(bb.status == SolveStatus::Infeasible);
            continue;
        }
        ++feasible_seen;
        REQUIRE(bb.status == SolveStatus::Optimal);
        CHECK(bb.objective == doctest::Approx(en.objective).epsilon(1e-6));
        CHECK(max_violation(m, bb.values) <= 1e-6);
    }
    CHECK(feasible_seen > 20);
}

TEST_CASE("mps: empty instance exports header sections only and reimports") {
    MipInstance m;
    auto path = tmp_path("empty.mps");
    export_mps(m, path);
    std::string text = slurp(path);
    CHECK(text.find("NAME") != std::string::npos);
    CHECK(text.find("ROWS") != std::string::npos);
    CHECK(text.find("COLUMNS") != std::string::npos);
    CHECK(text.find("RHS") != std::string::npos);
    CHECK(text.find("RANGES") != std::string::npos);
    CHECK(text.find("BOUNDS") != std::string::npos);
    CHECK(text.find("ENDATA") != std::string::npos);
    auto back = import_mps(path);
    CHECK(back.num_vars() == 0);
    CHECK(back.num_rows() == 0);
}

TEST_CASE("mps: binary column gets one INTORG/INTEND marker pair") {
    MipInstance m;
    int z = m.add_var("z", 0, 1, VarKind::Binary, 1.0);
    m.add_row("cap", Sense::LessEqual, 1.0, {{z, 1.0}});
    auto path = tmp_path("binary.mps");
    export_mps(m, path);
    std::string text = slurp(path);
    std::size_t n_org = 0, n_end = 0, pos = 0;
    while ((pos = text.find("'INTORG'", pos)) != std::string::npos) { ++n_org; pos += 8; }
    pos = 0;
    while ((pos = text.find("'INTEND'", pos)) != std::string::npos) { ++n_end; pos += 8; }
    CHECK(n_org == 1);
    CHECK(n_end == 1);
    auto back = import_mps(path);
    REQUIRE(back.num_vars() == 1);
    CHECK(back.var(0).kind == VarKind::Binary);
}

TEST_CASE("mps: long names trigger deterministic rename with a mapping file") {
    MipInstance m;
    int x = m.add_var("a_rather_long_variable_name", 0, 5, VarKind::Continuous, 2.0);
    m.add_row("an_equally_long_row_name", Sense::LessEqual, 4.0, {{x, 1.0}});
    auto path = tmp_path("renamed.mps");
    export_mps(m, path);
    std::string text = slurp(path);
    CHECK(text.find("C0000001") != std::string::npos);
    CHECK(text.find("R0000001") != std::string::npos);
    CHECK(text.find("a_rather_long_variable_name") == std::string::npos);
    std::string names = slurp(path + ".names");
    CHECK(names.find("col C0000001 a_rather_long_variable_name") != std::string::npos);
    CHECK(names.find("row R0000001 an_equally_long_row_name") != std::string::npos);
}

TEST_CASE("mps: round trip solves to the same objective within 1e-9") {
    Rng rng(5150);
    for (int trial = 0; trial < 12; ++trial) {
        auto m = random_mip(rng, 4 + static_cast<int>(rng.next_index(4)),
                            1 + static_cast<int>(rng.next_index(4)),
                            4 + static_cast<int>(rng.next_index(6)));
        m.add_obj_constant(1.25);
        auto path = tmp_path("rt" + std::to_string(trial) + ".mps");
        export_mps(m, path);
        auto back = import_mps(path);
        REQUIRE(back.num_vars() == m.num_vars());
        REQUIRE(back.num_rows() == m.num_rows());
        SolveOptions opt;
        opt.gap = 1e-9;
        auto s1 = solve(m, "bnb", opt);
        auto s2 = solve(back, "bnb", opt);
        CAPTURE(trial);
        REQUIRE(s1.status == s2.status);
        if (s1.status == SolveStatus::Optimal)
            CHECK(s1.objective == doctest::Approx(s2.objective).epsilon(1e-9));
    }
}

TEST_CASE("solution invariant: enumerate <= backend + gap slack") {
    Rng rng(1133);
    for (int trial = 0; trial < 15; ++trial) {
        auto m = random_mip(rng, 4, 4, 6);
        SolveOptions loose;
        loose.gap = 0.05;
        auto en = enumerate_binaries(m, {});
        auto bb = solve(m, "bnb", loose);
        if (en.status != SolveStatus::Optimal) continue;
        REQUIRE(bb.status != SolveStatus::Infeasible);
        CHECK(en.objective <= bb.objective + 1e-9 +
                                  loose.gap * std::max(1.0, std::abs(bb.objective)));
    }
}
