#include "doctest.h"

#include <cmath>

#include "gridtopo/lpac.hpp"
#include "gridtopo/mps.hpp"

using namespace gridtopo;
using namespace gridtopo::lpac;

namespace {

const std::string kData = std::string(GRIDTOPO_SOURCE_DIR) + "/data/";

// lossless two-bus system on a unit base: one generator, one unit load
net::Network two_bus_net() {
    net::Network n;
    n.base_mva = 1.0;
    net::AcBus b1;
    b1.id = 1;
    b1.is_reference = true;
    net::AcBus b2;
    b2.id = 2;
    n.ac_buses = {b1, b2};
    net::AcBranch br;
    br.id = 1;
    br.from_bus = 1;
    br.to_bus = 2;
    br.g = 0.0;
    br.b = -5.0; // x = 0.2
    br.r = 0.0;
    br.x = 0.2;
    br.p_max = 2.0;
    br.q_max = 2.0;
    n.ac_branches = {br};
    net::Generator g;
    g.id = 1;
    g.bus = 1;
    g.p_max = 2.0;
    g.q_min = -2.0;
    g.q_max = 2.0;
    g.c1 = 10.0;
    n.generators = {g};
    net::Load l;
    l.id = 1;
    l.bus = 2;
    l.p = 1.0;
    n.loads = {l};
    n.finalize();
    return n;
}

// three-bus chain with a splittable middle bus (2 elements -> 5 binaries)
net::Network three_bus_net() {
    net::Network n;
    n.base_mva = 1.0;
    for (int id = 1; id <= 3; ++id) {
        net::AcBus b;
        b.id = id;
        b.is_reference = id == 1;
        n.ac_buses.push_back(b);
    }
    for (int k = 0; k < 2; ++k) {
        net::AcBranch br;
        br.id = k + 1;
        br.from_bus = k + 1;
        br.to_bus = k + 2;
        br.g = 0.5;
        br.b = -5.0;
        br.r = 0.5 / 25.25;
        br.x = 5.0 / 25.25;
        br.p_max = 2.0;
        br.q_max = 2.0;
        n.ac_branches.push_back(br);
    }
    net::Generator g1;
    g1.id = 1;
    g1.bus = 1;
    g1.p_max = 2.0;
    g1.q_min = -2.0;
    g1.q_max = 2.0;
    g1.c1 = 10.0;
    g1.is_wind = true;
    net::Generator g2;
    g2.id = 2;
    g2.bus = 3;
    g2.p_max = 2.0;
    g2.q_min = -2.0;
    g2.q_max = 2.0;
    g2.c1 = 40.0;
    n.generators = {g1, g2};
    net::Load l;
    l.id = 1;
    l.bus = 3;
    l.p = 0.8;
    l.q = 0.1;
    n.loads = {l};
    n.finalize();
    return n;
}

mip::SolveOptions tight() {
    mip::SolveOptions o;
    o.gap = 1e-9;
    return o;
}

} // namespace

TEST_CASE("cosine_cuts: vertex, endpoints, and sampled error bound") {
    double d = 0.5236;
    for (int n : {2, 3, 5, 11}) {
        auto cuts = cosine_cuts(d, n);
        CHECK(cuts.size() == static_cast<std::size_t>(2 * n - 1));
        // at dtheta = 0 every cut allows cs = 1
        for (auto& c : cuts) CHECK(1.0 <= c.rhs + 1e-12);
        // at +-dtheta_max the cuts force cs <= cos(d) + 1e-9
        double kappa = (1.0 - std::cos(d)) / (d * d);
        for (double x : {d, -d}) {
            double cap = kInf;
            for (auto& c : cuts) cap = std::min(cap, c.rhs - c.coef_x * x);
            CHECK(cap <= std::cos(d) + 1e-9);
            CHECK(cap >= std::cos(d) - 1e-9);
        }
        // dense sampling: envelope over-approximates 1 - kappa x^2 by at most
        // kappa d^2 / (2 (n-1)^2) -- the documented bound
        double worst = 0.0;
        for (int i = -2000; i <= 2000; ++i) {
            double x = d * i / 2000.0;
            double env = kInf;
            for (auto& c : cuts) env = std::min(env, c.rhs - c.coef_x * x);
            worst = std::max(worst, env - (1.0 - kappa * x * x));
        }
        CAPTURE(n);
        CHECK(worst <= kappa * d * d / (2.0 * (n - 1) * (n - 1)) + 1e-12);
    }
}

TEST_CASE("pwl_cost: linear passthrough, exact breakpoints, sampled error bound") {
    auto lin = pwl_cost(0.0, 3.0, 1.0, 0.0, 2.0, 4);
    REQUIRE(lin.size() == 1);
    CHECK(lin[0].slope == 3.0);
    CHECK(lin[0].intercept == 1.0);

    auto two = pwl_cost(1.0, 0.0, 0.0, 0.0, 2.0, 2);
    REQUIRE(two.size() == 2);
    auto env = [&](double p) {
        double y = -kInf;
        for (auto& l : two) y = std::max(y, l.slope * p + l.intercept);
        return y;
    };
    CHECK(env(1.0) == doctest::Approx(1.0)); // y(1) = 1 exactly
    CHECK(env(2.0) == doctest::Approx(4.0)); // y(2) = 4 exactly
    CHECK(env(0.0) == doctest::Approx(0.0));

    Rng rng(2718);
    for (int trial = 0; trial < 30; ++trial) {
        double c2 = 0.1 + 2.0 * rng.next_double();
        double c1 = 4.0 * rng.next_double() - 2.0;
        double c0 = rng.next_double();
        double pmin = -1.0 + rng.next_double();
        double pmax = pmin + 0.5 + 2.0 * rng.next_double();
        int segs = 1 + static_cast<int>(rng.next_index(6));
        auto lines = pwl_cost(c2, c1, c0, pmin, pmax, segs);
        double bound = c2 * (pmax - pmin) * (pmax - pmin) / (segs * segs) / 4.0;
        double worst = 0.0;
        for (int i = 0; i <= 3000; ++i) {
            double p = pmin + (pmax - pmin) * i / 3000.0;
            double y = -kInf;
            for (auto& l : lines) y = std::max(y, l.slope * p + l.intercept);
            double f = c2 * p * p + c1 * p + c0;
            CHECK(y >= f - 1e-9); // epigraph never undercuts the quadratic
            worst = std::max(worst, y - f);
        }
        CHECK(worst <= bound + 1e-9);
    }
}

TEST_CASE("two-bus toy: cost 10, flow 1.0") {
    auto n = two_bus_net();
    ModelConfig cfg;
    cfg.mode = Mode::PlainOPF;
    auto built = build(n, scen::single_series({1.0}), cfg);
    auto sol = mip::solve(built.inst, "bnb", tight());
    REQUIRE(sol.status == mip::SolveStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(10.0).epsilon(1e-9));
    CHECK(sol.values[built.layout.pflow_i(0, true, 0, 0)] == doctest::Approx(1.0));
    CHECK(sol.values[built.layout.pg_i(0, 0, 0)] == doctest::Approx(1.0));
}

TEST_CASE("reduction identity: T=1 W=1 with couplers closed equals the plain OPF") {
    net::Network base = net::parse_case(kData + "case30.m");
    net::mark_wind(base, {1});
    net::Network prepared = net::add_slack_recourse(base, 10.0);
    net::Network aug = net::augment_for_splitting(prepared, std::vector<int>{6});

    auto series = scen::single_series({0.85});
    ModelConfig cfg;
    cfg.mode = Mode::PlainOPF;
    auto ref = build(prepared, series, cfg);
    auto test = build(aug, series, cfg);
    auto s_ref = mip::solve(ref.inst, "bnb", tight());
    auto s_test = mip::solve(test.inst, "bnb", tight());
    REQUIRE(s_ref.status == mip::SolveStatus::Optimal);
    REQUIRE(s_test.status == mip::SolveStatus::Optimal);
    CHECK(std::abs(s_test.objective - s_ref.objective) <=
          1e-6 * std::max(1.0, std::abs(s_ref.objective)));
}

TEST_CASE("oracle equivalence: split 5-bus toy, all four modes, T=1") {
    net::Network base = net::parse_case(kData + "case5.m");
    net::mark_wind(base, {1});
    net::Network aug = net::augment_for_splitting(base, std::vector<int>{4});
    int nbin_per_t = 0;
    for (auto& sw : aug.switches) {
        (void)sw;
        ++nbin_per_t;
    }
    REQUIRE(nbin_per_t == 9); // coupler + 4 element pairs

    auto series = scen::single_series({0.9});
    mip::SolveOptions opt;
    opt.gap = 1e-6;
    for (Mode mode : {Mode::PlainOPF, Mode::HourlyBS, Mode::OneTopology,
                      Mode::LimitedActions}) {
        ModelConfig cfg;
        cfg.mode = mode;
        cfg.s_max = 1;
        auto built = build(aug, series, cfg);
        auto en = mip::enumerate_binaries(built.inst, opt);
        auto bb = mip::solve(built.inst, "bnb", opt);
        CAPTURE(static_cast<int>(mode));
        REQUIRE(en.status == mip::SolveStatus::Optimal);
        REQUIRE(bb.status == mip::SolveStatus::Optimal);
        CHECK(std::abs(bb.objective - en.objective) <=
              opt.gap * std::max(1.0, std::abs(en.objective)) + 1e-9);
        // topology-capable modes can only improve on the fixed plain OPF
        if (mode != Mode::PlainOPF) {
            ModelConfig ref_cfg;
            ref_cfg.mode = Mode::PlainOPF;
            auto ref = mip::solve(build(aug, series, ref_cfg).inst, "bnb", opt);
            CHECK(bb.objective <= ref.objective + 1e-6 * std::abs(ref.objective) + 1e-9);
        }
    }
}

TEST_CASE("oracle equivalence: multi-step modes on a 3-bus chain, T=2") {
    net::Network base = three_bus_net();
    net::Network aug = net::augment_for_splitting(base, std::vector<int>{2});
    REQUIRE(aug.switches.size() == 5); // 10 binaries over T=2

    scen::ScenarioSet series = scen::single_series({1.0, 0.25});
    mip::SolveOptions opt;
    opt.gap = 1e-6;
    for (Mode mode : {Mode::HourlyBS, Mode::OneTopology, Mode::LimitedActions}) {
        ModelConfig cfg;
        cfg.mode = mode;
        cfg.s_max = 1;
        auto built = build(aug, series, cfg);
        auto en = mip::enumerate_binaries(built.inst, opt);
        auto bb = mip::solve(built.inst, "bnb", opt);
        CAPTURE(static_cast<int>(mode));
        REQUIRE(en.status == mip::SolveStatus::Optimal);
        REQUIRE(bb.status == mip::SolveStatus::Optimal);
        CHECK(std::abs(bb.objective - en.objective) <=
              opt.gap * std::max(1.0, std::abs(en.objective)) + 1e-9);
    }
}

TEST_CASE("mode nesting holds on a varying-wind 3-bus horizon") {
    net::Network aug = net::augment_for_splitting(three_bus_net(), std::vector<int>{2});
    scen::ScenarioSet series = scen::single_series({1.0, 0.2, 0.9, 0.35});
    mip::SolveOptions opt;
    opt.gap = 1e-6;
    std::map<int, double> obj;
    for (Mode mode : {Mode::PlainOPF, Mode::HourlyBS, Mode::OneTopology,
                      Mode::LimitedActions}) {
        for (int smax : (mode == Mode::LimitedActions ? std::vector<int>{1, 2}
                                                      : std::vector<int>{0})) {
            ModelConfig cfg;
            cfg.mode = mode;
            cfg.s_max = smax;
            auto built = build(aug, series, cfg);
            auto sol = mip::solve(built.inst, "bnb", opt);
            REQUIRE(sol.status == mip::SolveStatus::Optimal);
            obj[static_cast<int>(mode) * 10 + smax] = sol.objective;
            auto audit = audit_solution(aug, built.layout, sol, cfg);
            CHECK(audit.max_closed_theta_gap <= 1e-6);
            CHECK(audit.max_closed_phi_gap <= 1e-6);
            CHECK(audit.max_open_flow <= 1e-6);
            CHECK(audit.exclusivity_ok);
            CHECK(audit.implication_ok);
            if (mode == Mode::LimitedActions) CHECK(audit.change_hours_ac <= smax);
            if (mode == Mode::OneTopology) {
                auto plan = extract_topology(sol, aug, built.layout);
                CHECK(plan.identical_over_time());
            }
        }
    }
    double tol = 2.0 * opt.gap * std::max(1.0, obj[static_cast<int>(Mode::PlainOPF) * 10]);
    CHECK(obj[static_cast<int>(Mode::HourlyBS) * 10] <=
          obj[static_cast<int>(Mode::LimitedActions) * 10 + 2] + tol);
    CHECK(obj[static_cast<int>(Mode::LimitedActions) * 10 + 2] <=
          obj[static_cast<int>(Mode::LimitedActions) * 10 + 1] + tol);
    CHECK(obj[static_cast<int>(Mode::LimitedActions) * 10 + 1] <=
          obj[static_cast<int>(Mode::OneTopology) * 10] + tol);
    CHECK(obj[static_cast<int>(Mode::OneTopology) * 10] <=
          obj[static_cast<int>(Mode::PlainOPF) * 10] + tol);
}

TEST_CASE("exclusivity: equality without OTS, inequality with OTS") {
    net::Network aug = net::augment_for_splitting(three_bus_net(), std::vector<int>{2});
    auto series = scen::single_series({0.6});
    for (bool ots : {false, true}) {
        ModelConfig cfg;
        cfg.mode = Mode::HourlyBS;
        cfg.allow_ots = ots;
        auto built = build(aug, series, cfg);
        auto sol = mip::solve(built.inst, "bnb", tight());
        REQUIRE(sol.status == mip::SolveStatus::Optimal);
        for (int s = 0; s < built.layout.n_sw; ++s) {
            const auto& sw = aug.switches[s];
            if (sw.kind != net::SwitchKind::Reconnection || sw.partner_switch <= sw.id)
                continue;
            int p = -1;
            for (int s2 = 0; s2 < built.layout.n_sw; ++s2)
                if (aug.switches[s2].id == sw.partner_switch) p = s2;
            double sum = sol.values[built.layout.z_i(s, 0)] +
                         sol.values[built.layout.z_i(p, 0)];
            if (ots) CHECK(sum <= 1.0 + 1e-9);
            else CHECK(sum == doctest::Approx(1.0));
        }
    }
}

TEST_CASE("extract_topology: closed plan, integrality guard") {
    net::Network aug = net::augment_for_splitting(three_bus_net(), std::vector<int>{2});
    ModelConfig cfg;
    cfg.mode = Mode::PlainOPF;
    auto built = build(aug, scen::single_series({0.5, 0.5}), cfg);
    auto sol = mip::solve(built.inst, "bnb", tight());
    REQUIRE(sol.status == mip::SolveStatus::Optimal);
    auto plan = extract_topology(sol, aug, built.layout);
    CHECK(plan.identical_over_time());
    CHECK(plan.total_changes() == 0);
    // PlainOPF pins the original topology: coupler and original sides closed
    auto original = original_topology(aug, 2);
    for (std::size_t s = 0; s < plan.switch_ids.size(); ++s)
        CHECK(plan.closed[0][s] == original.closed[0][s]);

    auto broken = sol;
    broken.values[built.layout.z_i(0, 0)] = 0.5;
    CHECK_THROWS_AS(extract_topology(broken, aug, built.layout), ValidationError);
}

TEST_CASE("binaries are shared across scenarios (one z per switch and t)") {
    net::Network aug = net::augment_for_splitting(three_bus_net(), std::vector<int>{2});
    scen::ScenarioSet set;
    set.per_timestep = {{{0.8, 0.5}, {0.3, 0.5}}, {{0.6, 0.25}, {0.4, 0.75}}};
    ModelConfig cfg;
    cfg.mode = Mode::OneTopology;
    auto built = build(aug, set, cfg);
    CHECK(built.inst.num_binaries() ==
          static_cast<int>(aug.switches.size()) * 2); // per (switch, t), not per w
    auto sol = mip::solve(built.inst, "bnb", tight());
    REQUIRE(sol.status == mip::SolveStatus::Optimal);
    auto audit = audit_solution(aug, built.layout, sol, cfg);
    CHECK(audit.exclusivity_ok);
}

TEST_CASE("build validation: wind scenarios need wind generators") {
    auto n = two_bus_net(); // no wind generators
    scen::ScenarioSet set;
    set.per_timestep = {{{0.8, 0.5}, {0.3, 0.5}}};
    ModelConfig cfg;
    CHECK_THROWS_AS(build(n, set, cfg), ValidationError);

    scen::ScenarioSet ragged;
    ragged.per_timestep = {{{0.8, 1.0}}, {{0.6, 0.5}, {0.4, 0.5}}};
    CHECK_THROWS_AS(build(n, ragged, cfg), ValidationError);
}

TEST_CASE("mps export of a built instance renames deterministically") {
    net::Network aug = net::augment_for_splitting(three_bus_net(), std::vector<int>{2});
    ModelConfig cfg;
    cfg.mode = Mode::HourlyBS;
    auto built = build(aug, scen::single_series({0.7}), cfg);
    std::string path = "/tmp/gridtopo_lpac_toy.mps";
    mip::export_mps(built.inst, path);
    auto back = mip::import_mps(path);
    auto s1 = mip::solve(built.inst, "bnb", tight());
    auto s2 = mip::solve(back, "bnb", tight());
    REQUIRE(s1.status == mip::SolveStatus::Optimal);
    REQUIRE(s2.status == mip::SolveStatus::Optimal);
    CHECK(s1.objective == doctest::Approx(s2.objective).epsilon(1e-9));
}
