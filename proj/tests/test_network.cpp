#include "doctest.h"

#include <cstdio>
#include <fstream>

#include "gridtopo/network.hpp"

using namespace gridtopo;
using namespace gridtopo::net;

namespace {

const std::string kData = std::string(GRIDTOPO_SOURCE_DIR) + "/data/";

std::string write_tmp(const std::string& name, const std::string& text) {
    std::string path = "/tmp/gridtopo_net_" + name;
    std::ofstream f(path);
    f << text;
    return path;
}

bool same(double a, double b) { return a == b; }

bool nets_equal(const Network& a, const Network& b) {
    if (a.base_mva != b.base_mva) return false;
    if (a.ac_buses.size() != b.ac_buses.size() || a.dc_buses.size() != b.dc_buses.size() ||
        a.ac_branches.size() != b.ac_branches.size() ||
        a.dc_branches.size() != b.dc_branches.size() ||
        a.switches.size() != b.switches.size() || a.converters.size() != b.converters.size() ||
        a.generators.size() != b.generators.size() || a.loads.size() != b.loads.size())
        return false;
    for (std::size_t i = 0; i < a.ac_buses.size(); ++i) {
        auto &x = a.ac_buses[i], &y = b.ac_buses[i];
        if (x.id != y.id || !same(x.vmin, y.vmin) || !same(x.vmax, y.vmax) ||
            !same(x.amin, y.amin) || !same(x.amax, y.amax) ||
            x.is_reference != y.is_reference || x.is_auxiliary != y.is_auxiliary ||
            x.is_terminal != y.is_terminal)
            return false;
    }
    for (std::size_t i = 0; i < a.ac_branches.size(); ++i) {
        auto &x = a.ac_branches[i], &y = b.ac_branches[i];
        if (x.from_bus != y.from_bus || x.to_bus != y.to_bus || !same(x.g, y.g) ||
            !same(x.b, y.b) || !same(x.b_s_f, y.b_s_f) || !same(x.p_max, y.p_max) ||
            !same(x.q_max, y.q_max) || !same(x.dtheta_max, y.dtheta_max) ||
            !same(x.tap, y.tap))
            return false;
    }
    for (std::size_t i = 0; i < a.generators.size(); ++i) {
        auto &x = a.generators[i], &y = b.generators[i];
        if (x.bus != y.bus || !same(x.p_min, y.p_min) || !same(x.p_max, y.p_max) ||
            !same(x.q_min, y.q_min) || !same(x.q_max, y.q_max) || !same(x.c2, y.c2) ||
            !same(x.c1, y.c1) || !same(x.c0, y.c0) || x.is_wind != y.is_wind ||
            x.is_slack_recourse != y.is_slack_recourse)
            return false;
    }
    for (std::size_t i = 0; i < a.loads.size(); ++i) {
        auto &x = a.loads[i], &y = b.loads[i];
        if (x.bus != y.bus || !same(x.p, y.p) || !same(x.q, y.q)) return false;
    }
    for (std::size_t i = 0; i < a.dc_buses.size(); ++i) {
        auto &x = a.dc_buses[i], &y = b.dc_buses[i];
        if (x.id != y.id || !same(x.vmin, y.vmin) || !same(x.vmax, y.vmax) ||
            x.is_auxiliary != y.is_auxiliary || x.is_terminal != y.is_terminal)
            return false;
    }
    for (std::size_t i = 0; i < a.dc_branches.size(); ++i) {
        auto &x = a.dc_branches[i], &y = b.dc_branches[i];
        if (x.from_bus != y.from_bus || x.to_bus != y.to_bus || !same(x.y, y.y) ||
            x.poles != y.poles || !same(x.p_min, y.p_min) || !same(x.p_max, y.p_max))
            return false;
    }
    for (std::size_t i = 0; i < a.converters.size(); ++i) {
        auto &x = a.converters[i], &y = b.converters[i];
        if (x.ac_bus != y.ac_bus || x.dc_bus != y.dc_bus || !same(x.s_max, y.s_max) ||
            !same(x.loss_a, y.loss_a) || !same(x.loss_b, y.loss_b))
            return false;
    }
    for (std::size_t i = 0; i < a.switches.size(); ++i) {
        auto &x = a.switches[i], &y = b.switches[i];
        if (x.id != y.id || x.side != y.side || x.from_bus != y.from_bus ||
            x.to_bus != y.to_bus || x.kind != y.kind ||
            x.partner_switch != y.partner_switch || x.coupler_id != y.coupler_id ||
            !same(x.p_min, y.p_min) || !same(x.p_max, y.p_max) || !same(x.q_min, y.q_min) ||
            !same(x.q_max, y.q_max))
            return false;
    }
    return true;
}

// independent count-by-construction oracle for the splitting surgery
struct SplitExpectation {
    int elements = 0;
};
SplitExpectation walk_incident_elements(const Network& net, int ac_bus) {
    SplitExpectation e;
    for (auto& br : net.ac_branches) {
        if (br.from_bus == ac_bus) ++e.elements;
        if (br.to_bus == ac_bus) ++e.elements;
    }
    for (auto& g : net.generators)
        if (g.bus == ac_bus) ++e.elements;
    for (auto& l : net.loads)
        if (l.bus == ac_bus) ++e.elements;
    for (auto& c : net.converters)
        if (c.ac_bus == ac_bus) ++e.elements;
    for (auto& s : net.switches)
        if (s.side == Side::Ac && (s.from_bus == ac_bus || s.to_bus == ac_bus)) ++e.elements;
    return e;
}

} // namespace

TEST_CASE("parse 30-bus case: counts match the file") {
    Network net = parse_case(kData + "case30.m");
    CHECK(net.ac_buses.size() == 30);
    CHECK(net.ac_branches.size() == 41);
    CHECK(net.dc_buses.size() == 0);
    CHECK(net.converters.size() == 0);
    CHECK(net.generators.size() == 6);
    // per-unit conversion: bus 5 load is 94.2 MW on a 100 MVA base
    bool found = false;
    for (auto& l : net.loads)
        if (l.bus == 5) {
            found = true;
            CHECK(l.p == doctest::Approx(0.942));
        }
    CHECK(found);
}

TEST_CASE("parse 50-bus hybrid case: counts match the file") {
    Network net = parse_case(kData + "case50_acdc.m");
    CHECK(net.ac_buses.size() == 50);
    CHECK(net.dc_buses.size() == 7);
    CHECK(net.converters.size() == 7);
    CHECK(net.ac_branches.size() == 77);
    CHECK(net.dc_branches.size() == 7);
    CHECK(net.generators.size() == 65);
    CHECK(net.find_ac_bus(221) != nullptr);
}

TEST_CASE("parse degenerate single-bus case") {
    auto path = write_tmp("single.m",
                          "function mpc = single\n"
                          "mpc.baseMVA = 100;\n"
                          "mpc.bus = [ 1 3 10 2 0 0 1 1 0 100 1 1.05 0.95; ];\n"
                          "mpc.gen = [ 1 10 0 20 -20 1 100 1 50 0; ];\n"
                          "mpc.branch = [ ];\n"
                          "mpc.gencost = [ 2 0 0 3 0.1 5 0; ];\n");
    Network net = parse_case(path);
    CHECK(net.ac_buses.size() == 1);
    CHECK(net.ac_branches.size() == 0);
    CHECK(net.generators.size() == 1);
    CHECK(net.loads.size() == 1);
}

TEST_CASE("parse errors carry location and dangling references are caught") {
    auto bad = write_tmp("bad.m",
                         "function mpc = bad\n"
                         "mpc.baseMVA = 100;\n"
                         "mpc.bus = [ 1 3 0 0 0 0 1 1 0 100 1 1.05 0.95; ];\n"
                         "mpc.gen = [ 1 0 0 1 -1 1 100 1 1 0; oops ];\n");
    CHECK_THROWS_AS(parse_case(bad), ParseError);

    auto dangling = write_tmp("dangling.m",
                              "function mpc = dangling\n"
                              "mpc.baseMVA = 100;\n"
                              "mpc.bus = [ 1 3 0 0 0 0 1 1 0 100 1 1.05 0.95; ];\n"
                              "mpc.gen = [ 7 0 0 1 -1 1 100 1 1 0; ];\n"
                              "mpc.gencost = [ 2 0 0 3 0 1 0; ];\n");
    CHECK_THROWS_AS(parse_case(dangling), ValidationError);
}

TEST_CASE("augment: bus with 4 incident elements gains 1 aux, 1 coupler, 8 reconnections") {
    Network net = parse_case(kData + "case5.m");
    auto exp = walk_incident_elements(net, 4); // 3 branch ends + 1 load
    REQUIRE(exp.elements == 4);
    Network aug = augment_for_splitting(net, std::vector<int>{4});

    int aux = 0, term = 0;
    for (auto& b : aug.ac_buses) {
        aux += b.is_auxiliary ? 1 : 0;
        term += b.is_terminal ? 1 : 0;
    }
    CHECK(aux == 1);
    CHECK(term == exp.elements);
    int couplers = 0, recon = 0;
    for (auto& s : aug.switches) {
        couplers += s.kind == SwitchKind::Coupler ? 1 : 0;
        recon += s.kind == SwitchKind::Reconnection ? 1 : 0;
    }
    CHECK(couplers == 1);
    CHECK(recon == 2 * exp.elements);

    // wiring audit: pairs share a terminal, cover both halves, link mutually
    const Switch* coupler = nullptr;
    for (auto& s : aug.switches)
        if (s.kind == SwitchKind::Coupler) coupler = &s;
    REQUIRE(coupler != nullptr);
    CHECK(coupler->from_bus == 4);
    for (auto& s : aug.switches) {
        if (s.kind != SwitchKind::Reconnection) continue;
        const Switch* p = aug.find_switch(s.partner_switch);
        REQUIRE(p != nullptr);
        CHECK(p->partner_switch == s.id);
        CHECK(p->from_bus == s.from_bus);
        CHECK(s.coupler_id == coupler->id);
        bool covers = (s.to_bus == coupler->from_bus && p->to_bus == coupler->to_bus) ||
                      (s.to_bus == coupler->to_bus && p->to_bus == coupler->from_bus);
        CHECK(covers);
        CHECK(aug.find_ac_bus(s.from_bus)->is_terminal);
    }
    // no element still touches the split busbar directly
    for (auto& br : aug.ac_branches) {
        CHECK(br.from_bus != 4);
        CHECK(br.to_bus != 4);
    }
    for (auto& l : aug.loads) CHECK(l.bus != 4);
}

TEST_CASE("augment: empty list is the identity") {
    Network net = parse_case(kData + "case5.m");
    Network aug = augment_for_splitting(net, std::vector<int>{});
    CHECK(nets_equal(net, aug));
}

TEST_CASE("augment: splitting twice and splitting artifacts are rejected") {
    Network net = parse_case(kData + "case5.m");
    Network aug = augment_for_splitting(net, std::vector<int>{4});
    int aux_id = 0;
    for (auto& b : aug.ac_buses)
        if (b.is_auxiliary) aux_id = b.id;
    CHECK_THROWS_AS(augment_for_splitting(aug, std::vector<int>{aux_id}), ValidationError);
}

TEST_CASE("augment: lone reference bus cannot be split") {
    Network net = parse_case(kData + "case5.m");
    CHECK_THROWS_AS(augment_for_splitting(net, std::vector<int>{1}), ValidationError);
}

TEST_CASE("slack recourse: one generator per busbar, originals untouched") {
    Network net = parse_case(kData + "case30.m");
    Network out = add_slack_recourse(net, 10.0);
    CHECK(out.generators.size() == net.generators.size() + 30);
    for (std::size_t i = 0; i < net.generators.size(); ++i) {
        CHECK(out.generators[i].c1 == net.generators[i].c1);
        CHECK(out.generators[i].p_max == net.generators[i].p_max);
        CHECK(!out.generators[i].is_slack_recourse);
    }
    double cmax = 0.0;
    for (auto& g : net.generators) cmax = std::max(cmax, g.c1);
    for (std::size_t i = net.generators.size(); i < out.generators.size(); ++i) {
        CHECK(out.generators[i].is_slack_recourse);
        CHECK(out.generators[i].c1 == doctest::Approx(10.0 * cmax));
        CHECK(out.generators[i].c2 == 0.0);
    }
    CHECK_THROWS_AS(add_slack_recourse(net, 1.0), ValidationError);

    Network empty;
    Network same_empty = add_slack_recourse(empty, 10.0);
    CHECK(same_empty.generators.empty());
}

TEST_CASE("parse -> serialize -> parse round-trips to an identical network") {
    for (std::string name : {"case30.m", "case5.m", "case50_acdc.m"}) {
        Network n1 = parse_case(kData + name);
        auto tmp = "/tmp/gridtopo_rt_" + name;
        serialize_case(n1, tmp);
        Network n2 = parse_case(tmp);
        CAPTURE(name);
        CHECK(nets_equal(n1, n2));
    }
    // also through augmentation + slack + wind markers
    Network n1 = add_slack_recourse(
        augment_for_splitting(parse_case(kData + "case30.m"), std::vector<int>{6}), 10.0);
    mark_wind(n1, {1});
    serialize_case(n1, "/tmp/gridtopo_rt_aug.m");
    Network n2 = parse_case("/tmp/gridtopo_rt_aug.m");
    CHECK(nets_equal(n1, n2));
}

TEST_CASE("congested-case modifier: linear-only costs, uplifted big loads, wind marking") {
    Network net = parse_case(kData + "case50_acdc.m");
    CongestionMods mods;
    mods.wind_cost_threshold = 10.0 * net.base_mva; // c1 below 10 $/MWh in p.u. terms
    Network out = prepare_congested_case(net, mods);
    int wind = 0;
    for (std::size_t i = 0; i < out.generators.size(); ++i) {
        auto &g = out.generators[i], &o = net.generators[i];
        CHECK(g.c2 == 0.0);
        CHECK(g.c1 == doctest::Approx(1.3 * o.c1));
        wind += g.is_wind ? 1 : 0;
    }
    CHECK(wind == 12);
    for (std::size_t i = 0; i < out.loads.size(); ++i) {
        if (net.loads[i].p > 2.0)
            CHECK(out.loads[i].p == doctest::Approx(1.2 * net.loads[i].p));
        else
            CHECK(out.loads[i].p == net.loads[i].p);
    }
}
