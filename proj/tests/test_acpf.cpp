#include "doctest.h"

#include <cmath>
#include <complex>

#include "gridtopo/acpf.hpp"

using namespace gridtopo;
using namespace gridtopo::acpf;

namespace {

const std::string kData = std::string(GRIDTOPO_SOURCE_DIR) + "/data/";

// Independent physics oracle: complex nodal power from Ybus assembled with
// std::complex, compared against specified injections. No shared code with
// the Newton solver's mismatch path beyond the branch data itself.
double complex_mismatch(const net::Network& n, const std::vector<double>& vm,
                        const std::vector<double>& va,
                        const std::vector<double>& pg, const std::vector<double>& qg,
                        int skip_bus_id) {
    using Cx = std::complex<double>;
    int nb = static_cast<int>(n.ac_buses.size());
    std::vector<std::vector<Cx>> Y(nb, std::vector<Cx>(nb, Cx(0, 0)));
    for (auto& br : n.ac_branches) {
        int f = n.ac_bus_index(br.from_bus), t = n.ac_bus_index(br.to_bus);
        Cx y = 1.0 / Cx(br.r, br.x);
        double tap = br.tap;
        Y[f][f] += (y + Cx(br.g_s_f, br.b_s_f)) / (tap * tap);
        Y[t][t] += y + Cx(br.g_s_t, br.b_s_t);
        Y[f][t] += -y / tap;
        Y[t][f] += -y / tap;
    }
    std::vector<Cx> v(nb), s_inj(nb, Cx(0, 0));
    for (int b = 0; b < nb; ++b) v[b] = std::polar(vm[b], va[b]);
    for (std::size_t g = 0; g < n.generators.size(); ++g)
        s_inj[n.ac_bus_index(n.generators[g].bus)] += Cx(pg[g], qg[g]);
    for (auto& l : n.loads) s_inj[n.ac_bus_index(l.bus)] -= Cx(l.p, l.q);
    double worst = 0.0;
    for (int b = 0; b < nb; ++b) {
        if (n.ac_buses[b].id == skip_bus_id) continue;
        Cx acc(0, 0);
        for (int j = 0; j < nb; ++j) acc += Y[b][j] * v[j];
        Cx s_net = v[b] * std::conj(acc);
        worst = std::max(worst, std::abs(s_net - s_inj[b]));
    }
    return worst;
}

net::Network two_bus(double b_series, double p_load, double rate) {
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
    br.b = b_series;
    br.r = 0.0;
    br.x = -1.0 / b_series;
    br.p_max = rate;
    br.q_max = rate;
    n.ac_branches = {br};
    net::Generator g;
    g.id = 1;
    g.bus = 1;
    g.p_max = 3.0;
    g.q_min = -3.0;
    g.q_max = 3.0;
    g.c1 = 5.0;
    n.generators = {g};
    if (p_load != 0.0) {
        net::Load l;
        l.id = 1;
        l.bus = 2;
        l.p = p_load;
        n.loads = {l};
    }
    n.finalize();
    return n;
}

// wind at bus 1, thermal at bus 3, load split at buses 2 and 3
net::Network three_bus_wind() {
    net::Network n;
    n.base_mva = 1.0;
    for (int id = 1; id <= 3; ++id) {
        net::AcBus b;
        b.id = id;
        b.is_reference = id == 3;
        n.ac_buses.push_back(b);
    }
    for (int k = 0; k < 2; ++k) {
        net::AcBranch br;
        br.id = k + 1;
        br.from_bus = k + 1;
        br.to_bus = k + 2;
        br.g = 0.2;
        br.b = -10.0;
        double z2 = 1.0 / (0.2 * 0.2 + 10.0 * 10.0);
        br.r = 0.2 * z2;
        br.x = 10.0 * z2;
        br.p_max = 3.0;
        br.q_max = 3.0;
        n.ac_branches.push_back(br);
    }
    net::Generator wind;
    wind.id = 1;
    wind.bus = 1;
    wind.p_max = 1.0;
    wind.q_min = -1.0;
    wind.q_max = 1.0;
    wind.c1 = 0.0;
    wind.is_wind = true;
    net::Generator thermal;
    thermal.id = 2;
    thermal.bus = 3;
    thermal.p_max = 2.0;
    thermal.q_min = -2.0;
    thermal.q_max = 2.0;
    thermal.c1 = 10.0;
    n.generators = {wind, thermal};
    net::Load l1;
    l1.id = 1;
    l1.bus = 2;
    l1.p = 0.5;
    l1.q = 0.05;
    net::Load l2;
    l2.id = 2;
    l2.bus = 3;
    l2.p = 0.3;
    l2.q = 0.05;
    n.loads = {l1, l2};
    n.finalize();
    return n;
}

} // namespace

TEST_CASE("newton: two-bus lossless matches the closed-form sine law") {
    double b = -5.0; // x = 0.2
    double pl = 1.0;
    auto n = two_bus(b, pl, 3.0);
    Dispatch d;
    d.pg = {0.0}; // slack supplies everything
    d.qg = {0.0};
    auto plan = lpac::original_topology(n, 1);
    auto st = newton_pf(n, plan, 0, d, true);
    REQUIRE(st.converged);
    CHECK(st.max_mismatch <= 1e-8);
    // lossless line, V=1 both ends (PV at slack; bus 2 PQ -> V2 floats).
    // With q_load = 0 the exact relation is p = -b V1 V2 sin(th12).
    double v2 = st.vm[1];
    double expect = std::asin(pl / (-b * 1.0 * v2));
    CHECK(st.va[0] - st.va[1] == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("newton: zero injections give the flat solution") {
    auto n = two_bus(-5.0, 0.0, 3.0);
    Dispatch d;
    d.pg = {0.0};
    d.qg = {0.0};
    auto st = newton_pf(n, lpac::original_topology(n, 1), 0, d, true);
    REQUIRE(st.converged);
    CHECK(st.max_mismatch <= 1e-12);
    CHECK(st.vm[0] == doctest::Approx(1.0));
    CHECK(st.vm[1] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(st.va[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("newton: 30-bus stored solution is reproduced within 1e-4") {
    net::Network n = net::parse_case(kData + "case30.m");
    Dispatch d;
    for (auto& g : n.generators) {
        d.pg.push_back(g.pg_init);
        d.qg.push_back(g.qg_init);
    }
    // the stored solution satisfies Kirchhoff per the independent oracle
    std::vector<double> vm, va;
    for (auto& b : n.ac_buses) {
        vm.push_back(b.vm_init);
        va.push_back(b.va_init);
    }
    CHECK(complex_mismatch(n, vm, va, d.pg, d.qg, /*skip slack*/ 1) <= 1e-8);

    auto st = newton_pf(n, lpac::original_topology(n, 1), 0, d, false);
    REQUIRE(st.converged);
    CHECK(st.max_mismatch <= 1e-8);
    for (std::size_t b = 0; b < n.ac_buses.size(); ++b) {
        CAPTURE(b);
        CHECK(std::abs(st.vm[b] - vm[b]) <= 1e-4);
        CHECK(std::abs(st.va[b] - va[b]) <= 1e-4);
    }
}

TEST_CASE("newton: islanded load raises an infeasible-topology error") {
    auto n = net::parse_case(kData + "case5.m");
    auto aug = net::augment_for_splitting(n, std::vector<int>{4});
    auto plan = lpac::original_topology(aug, 1);
    // open all switches touching the load terminal: both reconnections of the
    // load element leave its terminal dead while the load sits on it
    for (std::size_t s = 0; s < aug.switches.size(); ++s) {
        const auto& sw = aug.switches[s];
        if (sw.kind != net::SwitchKind::Reconnection) continue;
        bool feeds_load = false;
        for (auto& l : aug.loads)
            if (l.bus == sw.from_bus) feeds_load = true;
        if (feeds_load) plan.closed[0][s] = false;
    }
    Dispatch d;
    d.pg.assign(aug.generators.size(), 0.0);
    d.qg.assign(aug.generators.size(), 0.0);
    CHECK_THROWS_AS(newton_pf(aug, plan, 0, d, false), ValidationError);
}

TEST_CASE("feasibility: single-generator network covers load plus losses") {
    net::Network n = two_bus(-5.0, 1.0, 3.0);
    n.ac_branches[0].g = 0.5; // resistive line so losses are visible
    double z2 = 0.5 * 0.5 + 5.0 * 5.0;
    n.ac_branches[0].r = 0.5 / z2;
    n.ac_branches[0].x = 5.0 / z2;
    auto [d, rep] = feasibility_opf(n, lpac::original_topology(n, 1), 0, 1.0);
    REQUIRE(rep.converged);
    CHECK(rep.violations.empty());
    CHECK(d.pg[0] > 1.0); // load + strictly positive losses
    CHECK(d.pg[0] < 1.1);
    double expect_cost = 5.0 * d.pg[0];
    CHECK(rep.generation_cost == doctest::Approx(expect_cost).epsilon(1e-12));
}

TEST_CASE("feasibility: binding branch limit sits at the limit within 1e-6") {
    // cheap unit behind a limited line, expensive unit at the load
    net::Network n = two_bus(-5.0, 1.2, 0.8);
    net::Generator exp_gen;
    exp_gen.id = 2;
    exp_gen.bus = 2;
    exp_gen.p_max = 2.0;
    exp_gen.q_min = -2.0;
    exp_gen.q_max = 2.0;
    exp_gen.c1 = 50.0;
    n.generators.push_back(exp_gen);
    n.finalize();
    auto [d, rep] = feasibility_opf(n, lpac::original_topology(n, 1), 0, 1.0);
    REQUIRE(rep.converged);
    CHECK(rep.violations.empty());
    auto st = newton_pf(n, lpac::original_topology(n, 1), 0, d, false);
    CHECK(std::abs(st.p_from[0]) <= 0.8 + 1e-6);
    CHECK(std::abs(st.p_from[0]) >= 0.8 - 1e-4); // the cheap side is saturated
}

TEST_CASE("redispatch: measured equal to forecast costs exactly zero") {
    auto n = three_bus_wind();
    auto plan = lpac::original_topology(n, 1);
    double cf = 0.5;
    auto [d1, rep] = feasibility_opf(n, plan, 0, cf);
    REQUIRE(rep.converged);
    auto rd = redispatch(n, plan, 0, d1, cf, cf);
    CHECK(rd.redispatch_cost == 0.0);
    for (std::size_t g = 0; g < n.generators.size(); ++g)
        CHECK(rd.dispatch.pg[g] == doctest::Approx(d1.pg[g]).epsilon(1e-9));
}

TEST_CASE("redispatch: wind shortfall is covered at the thermal marginal cost") {
    auto n = three_bus_wind();
    auto plan = lpac::original_topology(n, 1);
    auto [d1, rep] = feasibility_opf(n, plan, 0, 0.5);
    REQUIRE(rep.converged);
    // wind can deliver only 0.4 instead of 0.5: thermal (mc = 10) covers
    auto rd = redispatch(n, plan, 0, d1, 0.5, 0.4);
    double dwind = d1.pg[0] - rd.dispatch.pg[0];
    CHECK(dwind == doctest::Approx(0.1).epsilon(0.02));
    double expect = 10.0 * dwind;
    CHECK(rd.redispatch_cost == doctest::Approx(expect).epsilon(0.01));
}

TEST_CASE("redispatch: surplus wind displaces the expensive unit") {
    auto n = three_bus_wind();
    auto plan = lpac::original_topology(n, 1);
    auto [d1, rep] = feasibility_opf(n, plan, 0, 0.5);
    REQUIRE(rep.converged);
    auto rd = redispatch(n, plan, 0, d1, 0.5, 0.6);
    CHECK(rd.dispatch.pg[0] == doctest::Approx(d1.pg[0] + 0.1).epsilon(0.02));
    CHECK(rd.dispatch.pg[1] < d1.pg[1]);
    // wind moves at mc = 0; the thermal unit's move is what costs
    double dth = std::abs(rd.dispatch.pg[1] - d1.pg[1]);
    CHECK(rd.redispatch_cost == doctest::Approx(10.0 * dth).epsilon(1e-9));
    CHECK(rd.redispatch_cost == doctest::Approx(10.0 * 0.1).epsilon(0.02));
}

TEST_CASE("newton validates an LPAC solution's topology and dispatch") {
    net::Network base = net::parse_case(kData + "case30.m");
    net::mark_wind(base, {1});
    net::Network prepared = net::add_slack_recourse(base, 10.0);
    lpac::ModelConfig cfg;
    cfg.mode = lpac::Mode::PlainOPF;
    auto built = lpac::build(prepared, scen::single_series({0.7}), cfg);
    mip::SolveOptions opt;
    opt.gap = 1e-9;
    auto sol = mip::solve(built.inst, "bnb", opt);
    REQUIRE(sol.status == mip::SolveStatus::Optimal);
    Dispatch d;
    for (int g = 0; g < built.layout.n_gen; ++g) {
        d.pg.push_back(sol.values[built.layout.pg_i(g, 0, 0)]);
        d.qg.push_back(sol.values[built.layout.qg_i(g, 0, 0)]);
    }
    auto plan = lpac::extract_topology(sol, prepared, built.layout);
    auto st = newton_pf(prepared, plan, 0, d, false);
    REQUIRE(st.converged);
    CHECK(st.max_mismatch <= 1e-8); // non-slack buses balance exactly
    // slack deviation from the LPAC prediction is the approximation error
    CHECK(std::abs(st.slack_p) < 0.15);

    // exact-AC feasibility cost vs the LPAC objective (fidelity check)
    auto [fd, frep] = feasibility_opf(prepared, plan, 0, 0.7);
    REQUIRE(frep.converged);
    CHECK(frep.violations.empty());
    double lpac_obj = sol.objective;
    double bound = built.pwl_bound;
    CHECK(frep.generation_cost >= lpac_obj - bound - 0.02 * std::abs(lpac_obj));
    CHECK(frep.generation_cost <= lpac_obj + bound + 0.02 * std::abs(lpac_obj));
}
