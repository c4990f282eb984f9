#include "gridtopo/acpf.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numeric>

#include "gridtopo/simplex.hpp"

namespace gridtopo::acpf {

namespace {

using Cx = std::complex<double>;

struct UnionFind {
    std::vector<int> p;
    explicit UnionFind(int n) : p(std::max(n, 1)) { std::iota(p.begin(), p.end(), 0); }
    int find(int x) { return p[x] == x ? x : p[x] = find(p[x]); }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) p[a] = b;
    }
};

// Topology after applying the plan at t: closed switches merge endpoints,
// open ones vanish; islands labeled over branches between supernodes.
struct Reduced {
    int n_super = 0;
    std::vector<int> super_of_bus; // ac bus idx -> supernode
    std::vector<int> island_of;    // supernode -> island
    int n_island = 0;
    std::vector<char> island_live; // has at least one generator
    std::vector<int> slack_super;  // per island, -1 when dead
    std::vector<int> slack_gen;    // absorber generator index per island, -1
    // DC side
    int n_dsuper = 0;
    std::vector<int> dsuper_of_bus;
    std::vector<int> disland_of;
    int n_disland = 0;
    std::vector<int> dslack_conv; // per DC island: converter absorbing balance
};

Reduced reduce(const net::Network& net, const lpac::TopologyPlan& plan, int t) {
    Reduced R;
    int nb = static_cast<int>(net.ac_buses.size());
    UnionFind uf(nb);
    int nd = static_cast<int>(net.dc_buses.size());
    UnionFind ufd(nd);
    for (std::size_t s = 0; s < net.switches.size(); ++s) {
        const auto& sw = net.switches[s];
        int pos = plan.position_of(sw.id);
        bool closed = pos >= 0 && plan.closed_at(pos, t);
        if (!closed) continue;
        if (sw.side == net::Side::Ac)
            uf.unite(net.ac_bus_index(sw.from_bus), net.ac_bus_index(sw.to_bus));
        else
            ufd.unite(net.dc_bus_index(sw.from_bus), net.dc_bus_index(sw.to_bus));
    }
    std::map<int, int> root_to_super;
    R.super_of_bus.resize(nb);
    for (int b = 0; b < nb; ++b) {
        int r = uf.find(b);
        auto it = root_to_super.find(r);
        if (it == root_to_super.end()) {
            root_to_super[r] = R.n_super;
            R.super_of_bus[b] = R.n_super++;
        } else {
            R.super_of_bus[b] = it->second;
        }
    }
    UnionFind isl(R.n_super);
    for (auto& br : net.ac_branches)
        isl.unite(R.super_of_bus[net.ac_bus_index(br.from_bus)],
                  R.super_of_bus[net.ac_bus_index(br.to_bus)]);
    std::map<int, int> root_to_island;
    R.island_of.resize(R.n_super);
    for (int s = 0; s < R.n_super; ++s) {
        int r = isl.find(s);
        auto it = root_to_island.find(r);
        if (it == root_to_island.end()) {
            root_to_island[r] = R.n_island;
            R.island_of[s] = R.n_island++;
        } else {
            R.island_of[s] = it->second;
        }
    }
    R.island_live.assign(R.n_island, 0);
    R.slack_super.assign(R.n_island, -1);
    R.slack_gen.assign(R.n_island, -1);
    std::vector<double> best_cap(R.n_island, -1.0);
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
        int s = R.super_of_bus[net.ac_bus_index(net.generators[g].bus)];
        int i = R.island_of[s];
        R.island_live[i] = 1;
        if (net.generators[g].p_max > best_cap[i]) {
            best_cap[i] = net.generators[g].p_max;
            R.slack_super[i] = s;
            R.slack_gen[i] = static_cast<int>(g);
        }
    }
    // a marked reference bus wins over the capacity heuristic when it hosts
    // any generation
    for (int b = 0; b < nb; ++b) {
        if (!net.ac_buses[b].is_reference) continue;
        int s = R.super_of_bus[b];
        int i = R.island_of[s];
        if (!R.island_live[i]) continue;
        double cap = -1.0;
        int pick = -1;
        for (std::size_t g = 0; g < net.generators.size(); ++g)
            if (R.super_of_bus[net.ac_bus_index(net.generators[g].bus)] == s &&
                net.generators[g].p_max > cap) {
                cap = net.generators[g].p_max;
                pick = static_cast<int>(g);
            }
        if (pick >= 0) {
            R.slack_super[i] = s;
            R.slack_gen[i] = pick;
        }
    }
    for (auto& l : net.loads) {
        int i = R.island_of[R.super_of_bus[net.ac_bus_index(l.bus)]];
        if (!R.island_live[i] && (std::abs(l.p) > 1e-12 || std::abs(l.q) > 1e-12))
            throw ValidationError("infeasible topology: load " + std::to_string(l.id) +
                                  " is islanded without generation");
    }
    if (nd > 0) {
        std::map<int, int> droot;
        R.dsuper_of_bus.resize(nd);
        for (int b = 0; b < nd; ++b) {
            int r = ufd.find(b);
            auto it = droot.find(r);
            if (it == droot.end()) {
                droot[r] = R.n_dsuper;
                R.dsuper_of_bus[b] = R.n_dsuper++;
            } else {
                R.dsuper_of_bus[b] = it->second;
            }
        }
        UnionFind disl(R.n_dsuper);
        for (auto& br : net.dc_branches)
            disl.unite(R.dsuper_of_bus[net.dc_bus_index(br.from_bus)],
                       R.dsuper_of_bus[net.dc_bus_index(br.to_bus)]);
        std::map<int, int> droot2;
        R.disland_of.resize(R.n_dsuper);
        for (int s = 0; s < R.n_dsuper; ++s) {
            int r = disl.find(s);
            auto it = droot2.find(r);
            if (it == droot2.end()) {
                droot2[r] = R.n_disland;
                R.disland_of[s] = R.n_disland++;
            } else {
                R.disland_of[s] = it->second;
            }
        }
        R.dslack_conv.assign(R.n_disland, -1);
        for (std::size_t c = 0; c < net.converters.size(); ++c) {
            int i =
                R.disland_of[R.dsuper_of_bus[net.dc_bus_index(net.converters[c].dc_bus)]];
            if (R.dslack_conv[i] < 0) R.dslack_conv[i] = static_cast<int>(c);
        }
    }
    return R;
}

// Newton solver for one AC island; unknowns: angles at non-slack supernodes,
// magnitudes at PQ supernodes.
struct IslandSolver {
    const net::Network* net;
    const Reduced* R;
    int island;
    std::vector<int> supers;
    std::vector<int> local_of_super;
    int slack_local = -1;
    std::vector<char> is_pv;
    std::vector<double> vset;
    Eigen::MatrixXd G, B;
    std::vector<double> vm, va;
    std::vector<double> p_spec, q_spec;
    std::vector<int> row_p, row_q;
    std::vector<int> col_th, col_v;
    int nun = 0;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    bool factored = false;

    IslandSolver(const net::Network& n, const Reduced& r, int isl)
        : net(&n), R(&r), island(isl) {
        local_of_super.assign(R->n_super, -1);
        for (int s = 0; s < R->n_super; ++s) {
            if (R->island_of[s] != island) continue;
            local_of_super[s] = static_cast<int>(supers.size());
            supers.push_back(s);
        }
        slack_local = local_of_super[R->slack_super[island]];
        int n_local = static_cast<int>(supers.size());
        G = Eigen::MatrixXd::Zero(n_local, n_local);
        B = Eigen::MatrixXd::Zero(n_local, n_local);
        for (auto& br : net->ac_branches) {
            int fs = R->super_of_bus[net->ac_bus_index(br.from_bus)];
            if (R->island_of[fs] != island) continue;
            int f = local_of_super[fs];
            int t = local_of_super[R->super_of_bus[net->ac_bus_index(br.to_bus)]];
            Cx y = 1.0 / Cx(br.r, br.x);
            Cx ysh_f(br.g_s_f, br.b_s_f), ysh_t(br.g_s_t, br.b_s_t);
            double tap = br.tap;
            Cx yff = (y + ysh_f) / (tap * tap);
            Cx yft = -y / tap;
            Cx ytf = -y / tap;
            Cx ytt = y + ysh_t;
            G(f, f) += yff.real();
            B(f, f) += yff.imag();
            G(t, t) += ytt.real();
            B(t, t) += ytt.imag();
            G(f, t) += yft.real();
            B(f, t) += yft.imag();
            G(t, f) += ytf.real();
            B(t, f) += ytf.imag();
        }
        vm.assign(n_local, 1.0);
        va.assign(n_local, 0.0);
        is_pv.assign(n_local, 0);
        vset.assign(n_local, 1.0);
        p_spec.assign(n_local, 0.0);
        q_spec.assign(n_local, 0.0);
    }

    int n_local() const { return static_cast<int>(supers.size()); }

    void set_pv(int local, double v) {
        is_pv[local] = 1;
        vset[local] = v;
        vm[local] = v;
    }

    void index_unknowns() {
        int n = n_local();
        row_p.assign(n, -1);
        row_q.assign(n, -1);
        col_th.assign(n, -1);
        col_v.assign(n, -1);
        nun = 0;
        for (int i = 0; i < n; ++i)
            if (i != slack_local) {
                row_p[i] = nun;
                col_th[i] = nun;
                ++nun;
            }
        for (int i = 0; i < n; ++i)
            if (i != slack_local && !is_pv[i]) {
                row_q[i] = nun;
                col_v[i] = nun;
                ++nun;
            }
    }

    void net_injection(int i, double& p, double& q) const {
        p = 0.0;
        q = 0.0;
        for (int j = 0; j < n_local(); ++j) {
            if (G(i, j) == 0.0 && B(i, j) == 0.0) continue;
            double th = va[i] - va[j];
            double c = std::cos(th), s = std::sin(th);
            p += vm[i] * vm[j] * (G(i, j) * c + B(i, j) * s);
            q += vm[i] * vm[j] * (G(i, j) * s - B(i, j) * c);
        }
    }

    Eigen::MatrixXd jacobian() const {
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nun, nun);
        int n = n_local();
        for (int i = 0; i < n; ++i) {
            double Pi, Qi;
            net_injection(i, Pi, Qi);
            for (int j = 0; j < n; ++j) {
                if (i != j && G(i, j) == 0.0 && B(i, j) == 0.0) continue;
                double th = va[i] - va[j];
                double c = std::cos(th), s = std::sin(th);
                double dP_dth, dP_dV, dQ_dth, dQ_dV;
                if (i == j) {
                    dP_dth = -Qi - B(i, i) * vm[i] * vm[i];
                    dP_dV = Pi / vm[i] + G(i, i) * vm[i];
                    dQ_dth = Pi - G(i, i) * vm[i] * vm[i];
                    dQ_dV = Qi / vm[i] - B(i, i) * vm[i];
                } else {
                    dP_dth = vm[i] * vm[j] * (G(i, j) * s - B(i, j) * c);
                    dP_dV = vm[i] * (G(i, j) * c + B(i, j) * s);
                    dQ_dth = -vm[i] * vm[j] * (G(i, j) * c + B(i, j) * s);
                    dQ_dV = vm[i] * (G(i, j) * s - B(i, j) * c);
                }
                if (row_p[i] >= 0 && col_th[j] >= 0) J(row_p[i], col_th[j]) += dP_dth;
                if (row_p[i] >= 0 && col_v[j] >= 0) J(row_p[i], col_v[j]) += dP_dV;
                if (row_q[i] >= 0 && col_th[j] >= 0) J(row_q[i], col_th[j]) += dQ_dth;
                if (row_q[i] >= 0 && col_v[j] >= 0) J(row_q[i], col_v[j]) += dQ_dV;
            }
        }
        return J;
    }

    // returns final max mismatch; negative on a singular Jacobian
    double solve(int max_iter = 50, double tol = 1e-10) {
        index_unknowns();
        for (int i = 0; i < n_local(); ++i)
            if (is_pv[i]) vm[i] = vset[i];
        if (nun == 0) {
            factored = false;
            return mismatch();
        }
        for (int it = 0; it < max_iter; ++it) {
            Eigen::VectorXd f(nun);
            for (int i = 0; i < n_local(); ++i) {
                double Pi, Qi;
                net_injection(i, Pi, Qi);
                if (row_p[i] >= 0) f[row_p[i]] = p_spec[i] - Pi;
                if (row_q[i] >= 0) f[row_q[i]] = q_spec[i] - Qi;
            }
            double mm = f.lpNorm<Eigen::Infinity>();
            if (mm < tol) {
                lu.compute(jacobian());
                factored = true;
                return mm;
            }
            lu.compute(jacobian());
            factored = true;
            Eigen::VectorXd dx = lu.solve(f);
            if (!dx.allFinite()) return -1.0;
            double step = 1.0;
            double maxd = dx.lpNorm<Eigen::Infinity>();
            if (maxd > 0.6) step = 0.6 / maxd; // damp wild early steps
            for (int i = 0; i < n_local(); ++i) {
                if (col_th[i] >= 0) va[i] += step * dx[col_th[i]];
                if (col_v[i] >= 0) vm[i] = std::max(vm[i] + step * dx[col_v[i]], 0.2);
            }
        }
        return mismatch();
    }

    double mismatch() const {
        double mm = 0.0;
        for (int i = 0; i < n_local(); ++i) {
            double Pi, Qi;
            net_injection(i, Pi, Qi);
            if (i == slack_local) continue;
            mm = std::max(mm, std::abs(p_spec[i] - Pi));
            if (!is_pv[i]) mm = std::max(mm, std::abs(q_spec[i] - Qi));
        }
        return mm;
    }
};

struct PfContext {
    const net::Network* net;
    Reduced R;
    std::vector<IslandSolver> islands;
    std::vector<double> conv_p_ac, conv_q_ac, conv_p_dc;
    std::vector<double> vdc_super;
    bool converged = false;
    double max_mismatch = kInf;

    PfContext(const net::Network& n, const lpac::TopologyPlan& plan, int t)
        : net(&n), R(reduce(n, plan, t)) {
        for (int i = 0; i < R.n_island; ++i)
            if (R.island_live[i]) islands.emplace_back(n, R, i);
    }

    IslandSolver* island_of_bus(int bus_id) {
        int s = R.super_of_bus[net->ac_bus_index(bus_id)];
        for (auto& is : islands)
            if (is.island == R.island_of[s]) return &is;
        return nullptr;
    }

    void run(const Dispatch& d, bool pv_mode) {
        int nc = static_cast<int>(net->converters.size());
        conv_p_ac.assign(nc, 0.0);
        conv_q_ac.assign(nc, 0.0);
        conv_p_dc.assign(nc, 0.0);
        for (int c = 0; c < nc; ++c) {
            if (c < static_cast<int>(d.conv_p_ac.size())) conv_p_ac[c] = d.conv_p_ac[c];
            if (c < static_cast<int>(d.conv_q_ac.size())) conv_q_ac[c] = d.conv_q_ac[c];
        }
        vdc_super.assign(std::max(R.n_dsuper, 1), 1.0);

        int outer_max = net->dc_buses.empty() ? 1 : 16;
        double worst = kInf;
        for (int outer = 0; outer < outer_max; ++outer) {
            worst = 0.0;
            for (auto& is : islands) {
                int n = is.n_local();
                is.p_spec.assign(n, 0.0);
                is.q_spec.assign(n, 0.0);
                std::fill(is.is_pv.begin(), is.is_pv.end(), 0);
                for (std::size_t g = 0; g < net->generators.size(); ++g) {
                    int s = R.super_of_bus[net->ac_bus_index(net->generators[g].bus)];
                    int local = is.local_of_super[s];
                    if (local < 0) continue;
                    is.p_spec[local] += d.pg[g];
                    is.q_spec[local] += d.qg[g];
                    if (pv_mode) is.set_pv(local, net->generators[g].vg);
                }
                for (auto& l : net->loads) {
                    int local =
                        is.local_of_super[R.super_of_bus[net->ac_bus_index(l.bus)]];
                    if (local < 0) continue;
                    is.p_spec[local] -= l.p;
                    is.q_spec[local] -= l.q;
                }
                for (int c = 0; c < nc; ++c) {
                    int local = is.local_of_super
                                    [R.super_of_bus[net->ac_bus_index(net->converters[c].ac_bus)]];
                    if (local < 0) continue;
                    is.p_spec[local] -= conv_p_ac[c];
                    is.q_spec[local] -= conv_q_ac[c];
                }
                if (pv_mode && R.slack_gen[is.island] >= 0)
                    is.set_pv(is.slack_local, net->generators[R.slack_gen[is.island]].vg);
                double mm = is.solve();
                if (mm < 0) {
                    converged = false;
                    max_mismatch = kInf;
                    return;
                }
                worst = std::max(worst, mm);
            }
            if (net->dc_buses.empty()) break;
            for (int c = 0; c < nc; ++c) {
                const auto& cv = net->converters[c];
                IslandSolver* is = island_of_bus(cv.ac_bus);
                double v = 1.0;
                if (is) {
                    int local =
                        is->local_of_super[R.super_of_bus[net->ac_bus_index(cv.ac_bus)]];
                    if (local >= 0) v = is->vm[local];
                }
                double s = std::hypot(conv_p_ac[c], conv_q_ac[c]);
                conv_p_dc[c] = conv_p_ac[c] - (cv.loss_a + cv.loss_b * (s / v));
            }
            double shift = solve_dc();
            if (shift < 1e-11) break;
        }
        max_mismatch = worst;
        converged = worst <= 1e-8;
    }

    double solve_dc() {
        int nd = static_cast<int>(net->dc_buses.size());
        if (nd == 0) return 0.0;
        double moved = 0.0;
        for (int di = 0; di < R.n_disland; ++di) {
            std::vector<int> local(R.n_dsuper, -1);
            std::vector<int> nodes;
            for (int s = 0; s < R.n_dsuper; ++s)
                if (R.disland_of[s] == di) {
                    local[s] = static_cast<int>(nodes.size());
                    nodes.push_back(s);
                }
            int n = static_cast<int>(nodes.size());
            int slack_conv = R.dslack_conv[di];
            if (slack_conv < 0) continue;
            int slack_node =
                local[R.dsuper_of_bus[net->dc_bus_index(net->converters[slack_conv].dc_bus)]];
            std::vector<double> inj(n, 0.0);
            for (std::size_t c = 0; c < net->converters.size(); ++c) {
                int l = local[R.dsuper_of_bus[net->dc_bus_index(net->converters[c].dc_bus)]];
                if (l < 0 || static_cast<int>(c) == slack_conv) continue;
                inj[l] += conv_p_dc[c];
            }
            std::vector<double> u(n, 1.0);
            for (int s = 0; s < R.n_dsuper; ++s)
                if (local[s] >= 0) u[local[s]] = vdc_super[s];
            u[slack_node] = 1.0;
            for (int it = 0; it < 40; ++it) {
                Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
                Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
                for (auto& br : net->dc_branches) {
                    int e = local[R.dsuper_of_bus[net->dc_bus_index(br.from_bus)]];
                    int g = local[R.dsuper_of_bus[net->dc_bus_index(br.to_bus)]];
                    if (e < 0 || g < 0) continue;
                    double y = br.poles * br.y;
                    f[e] += y * (u[e] - u[g]) * u[e];
                    f[g] += y * (u[g] - u[e]) * u[g];
                    J(e, e) += y * (2 * u[e] - u[g]);
                    J(e, g) += -y * u[e];
                    J(g, g) += y * (2 * u[g] - u[e]);
                    J(g, e) += -y * u[g];
                }
                Eigen::VectorXd mis(n);
                for (int i = 0; i < n; ++i) mis[i] = inj[i] - f[i];
                mis[slack_node] = 0.0;
                if (mis.lpNorm<Eigen::Infinity>() < 1e-12) break;
                for (int i = 0; i < n; ++i) J(slack_node, i) = 0.0;
                J(slack_node, slack_node) = 1.0;
                Eigen::VectorXd du = J.partialPivLu().solve(mis);
                if (!du.allFinite()) break;
                for (int i = 0; i < n; ++i) u[i] += du[i];
                u[slack_node] = 1.0;
            }
            for (int s = 0; s < R.n_dsuper; ++s)
                if (local[s] >= 0) vdc_super[s] = u[local[s]];
            double need = 0.0;
            for (auto& br : net->dc_branches) {
                int e = local[R.dsuper_of_bus[net->dc_bus_index(br.from_bus)]];
                int g = local[R.dsuper_of_bus[net->dc_bus_index(br.to_bus)]];
                if (e < 0 || g < 0) continue;
                double y = br.poles * br.y;
                if (e == slack_node) need += y * (u[e] - u[g]) * u[e];
                if (g == slack_node) need += y * (u[g] - u[e]) * u[g];
            }
            for (std::size_t c = 0; c < net->converters.size(); ++c) {
                int l = local[R.dsuper_of_bus[net->dc_bus_index(net->converters[c].dc_bus)]];
                if (l != slack_node || static_cast<int>(c) == slack_conv) continue;
                need -= conv_p_dc[c];
            }
            const auto& cv = net->converters[slack_conv];
            conv_p_dc[slack_conv] = need;
            IslandSolver* is = island_of_bus(cv.ac_bus);
            double v = 1.0;
            if (is) {
                int l = is->local_of_super[R.super_of_bus[net->ac_bus_index(cv.ac_bus)]];
                if (l >= 0) v = is->vm[l];
            }
            double pac = need;
            for (int k = 0; k < 8; ++k) {
                double s = std::hypot(pac, conv_q_ac[slack_conv]);
                pac = need + cv.loss_a + cv.loss_b * (s / v);
            }
            moved = std::max(moved, std::abs(pac - conv_p_ac[slack_conv]));
            conv_p_ac[slack_conv] = pac;
        }
        return moved;
    }

    AcState state() const {
        AcState st;
        st.converged = converged;
        st.max_mismatch = max_mismatch;
        int nb = static_cast<int>(net->ac_buses.size());
        st.vm.assign(nb, 1.0);
        st.va.assign(nb, 0.0);
        for (int b = 0; b < nb; ++b) {
            int s = R.super_of_bus[b];
            for (auto& is : islands) {
                int local = is.local_of_super[s];
                if (local >= 0) {
                    st.vm[b] = is.vm[local];
                    st.va[b] = is.va[local];
                }
            }
        }
        st.vdc.assign(net->dc_buses.size(), 1.0);
        for (std::size_t b = 0; b < net->dc_buses.size(); ++b)
            st.vdc[b] = vdc_super.empty() ? 1.0 : vdc_super[R.dsuper_of_bus[b]];
        int nl = static_cast<int>(net->ac_branches.size());
        st.p_from.assign(nl, 0.0);
        st.q_from.assign(nl, 0.0);
        st.p_to.assign(nl, 0.0);
        st.q_to.assign(nl, 0.0);
        for (int l = 0; l < nl; ++l) {
            const auto& br = net->ac_branches[l];
            int fb = net->ac_bus_index(br.from_bus), tb = net->ac_bus_index(br.to_bus);
            Cx vf = std::polar(st.vm[fb], st.va[fb]);
            Cx vt = std::polar(st.vm[tb], st.va[tb]);
            Cx y = 1.0 / Cx(br.r, br.x);
            Cx yshf(br.g_s_f, br.b_s_f), ysht(br.g_s_t, br.b_s_t);
            double tap = br.tap;
            Cx iff = (y + yshf) / (tap * tap) * vf - y / tap * vt;
            Cx itt = (y + ysht) * vt - y / tap * vf;
            Cx sf = vf * std::conj(iff);
            Cx stc = vt * std::conj(itt);
            st.p_from[l] = sf.real();
            st.q_from[l] = sf.imag();
            st.p_to[l] = stc.real();
            st.q_to[l] = stc.imag();
        }
        st.p_dc_from.assign(net->dc_branches.size(), 0.0);
        st.p_dc_to.assign(net->dc_branches.size(), 0.0);
        for (std::size_t l = 0; l < net->dc_branches.size(); ++l) {
            const auto& br = net->dc_branches[l];
            double ue = st.vdc[net->dc_bus_index(br.from_bus)];
            double uf = st.vdc[net->dc_bus_index(br.to_bus)];
            double y = br.poles * br.y;
            st.p_dc_from[l] = y * (ue - uf) * ue;
            st.p_dc_to[l] = y * (uf - ue) * uf;
        }
        st.conv_p_dc = conv_p_dc;
        for (auto& is : islands) {
            double Pi, Qi;
            is.net_injection(is.slack_local, Pi, Qi);
            st.slack_p += Pi - is.p_spec[is.slack_local];
            st.slack_q += Qi - is.q_spec[is.slack_local];
        }
        return st;
    }
};

double wind_limit(const net::Generator& g, double cf) {
    return g.is_wind ? g.p_max * cf : g.p_max;
}

} // namespace

double generation_cost(const net::Network& net, const Dispatch& d) {
    double c = 0.0;
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
        const auto& gen = net.generators[g];
        double p = d.pg[g];
        c += gen.c2 * p * p + gen.c1 * p + gen.c0;
    }
    return c;
}

AcState newton_pf(const net::Network& net, const lpac::TopologyPlan& plan, int t,
                  const Dispatch& dispatch, bool hold_voltage_setpoints) {
    PfContext ctx(net, plan, t);
    Dispatch d = dispatch;
    d.pg.resize(net.generators.size(), 0.0);
    d.qg.resize(net.generators.size(), 0.0);
    ctx.run(d, hold_voltage_setpoints);
    return ctx.state();
}

// ------------------------- successive linearization -------------------------

namespace {

struct OpfMode {
    bool redispatch = false;
    std::vector<double> target;     // redispatch anchors, per gen
    std::vector<double> mc;         // frozen marginal costs, per gen
    std::vector<double> down_price; // LP price for moving below the anchor
    std::vector<double> cap;        // hard upper bound during redispatch
};

std::vector<Violation> collect_violations(const net::Network& net, const AcState& st,
                                          const Dispatch& d, double cf) {
    std::vector<Violation> v;
    double tol = 1e-6;
    for (std::size_t b = 0; b < net.ac_buses.size(); ++b) {
        const auto& bus = net.ac_buses[b];
        if (st.vm[b] > bus.vmax + tol)
            v.push_back({"bus:" + std::to_string(bus.id), "vmax", st.vm[b] - bus.vmax});
        if (st.vm[b] < bus.vmin - tol)
            v.push_back({"bus:" + std::to_string(bus.id), "vmin", bus.vmin - st.vm[b]});
    }
    for (std::size_t l = 0; l < net.ac_branches.size(); ++l) {
        const auto& br = net.ac_branches[l];
        auto over = [&](double val, double lim, const char* what) {
            if (std::abs(val) > lim + tol)
                v.push_back({"branch:" + std::to_string(br.id), what,
                             std::abs(val) - lim});
        };
        over(st.p_from[l], br.p_max, "p_from");
        over(st.p_to[l], br.p_max, "p_to");
        over(st.q_from[l], br.q_max, "q_from");
        over(st.q_to[l], br.q_max, "q_to");
    }
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
        const auto& gen = net.generators[g];
        double pmax = wind_limit(gen, cf);
        if (d.pg[g] > pmax + tol)
            v.push_back({"gen:" + std::to_string(gen.id), "pmax", d.pg[g] - pmax});
        if (d.pg[g] < gen.p_min - tol)
            v.push_back({"gen:" + std::to_string(gen.id), "pmin", gen.p_min - d.pg[g]});
        if (d.qg[g] > gen.q_max + tol)
            v.push_back({"gen:" + std::to_string(gen.id), "qmax", d.qg[g] - gen.q_max});
        if (d.qg[g] < gen.q_min - tol)
            v.push_back({"gen:" + std::to_string(gen.id), "qmin", gen.q_min - d.qg[g]});
    }
    return v;
}

double viol_total(const std::vector<Violation>& v) {
    double s = 0.0;
    for (auto& x : v) s += x.amount;
    return s;
}

struct SlpResult {
    Dispatch dispatch;
    AcState state;
    FeasibilityReport report;
};

SlpResult run_slp(const net::Network& net, const lpac::TopologyPlan& plan, int t,
                  double cf, const OpfMode& mode, const Dispatch* warm) {
    int ng = static_cast<int>(net.generators.size());
    Dispatch d;
    d.pg.assign(ng, 0.0);
    d.qg.assign(ng, 0.0);
    d.conv_p_ac.assign(net.converters.size(), 0.0);
    d.conv_q_ac.assign(net.converters.size(), 0.0);
    if (warm) d = *warm;

    double total_load_p = 0.0, total_load_q = 0.0;
    for (auto& l : net.loads) {
        total_load_p += l.p;
        total_load_q += l.q;
    }
    if (!warm) {
        std::vector<int> order(ng);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            double ca = net.generators[a].c1 + 2 * net.generators[a].c2 * 0.3;
            double cb = net.generators[b].c1 + 2 * net.generators[b].c2 * 0.3;
            return ca < cb;
        });
        double rest = total_load_p * 1.02;
        for (int g : order) {
            double cap = std::max(0.0, wind_limit(net.generators[g], cf));
            double lo = std::max(0.0, net.generators[g].p_min);
            double take = std::clamp(rest, lo, cap);
            d.pg[g] = take;
            rest -= take;
            if (rest <= 0) rest = 0;
        }
    }

    PfContext ctx(net, plan, t);
    ctx.run(d, false);
    AcState st = ctx.state();
    if (!st.converged) {
        for (int g = 0; g < ng; ++g) d.qg[g] = 0.0;
        ctx.run(d, false);
        st = ctx.state();
    }

    auto merit = [&](const AcState& s, const Dispatch& dd) {
        double cost;
        if (mode.redispatch) {
            cost = 0.0;
            for (int g = 0; g < ng; ++g) {
                double dev = dd.pg[g] - mode.target[g];
                cost += dev >= 0 ? mode.mc[g] * dev : mode.down_price[g] * -dev;
            }
        } else {
            cost = generation_cost(net, dd);
        }
        return cost + 1e5 * viol_total(collect_violations(net, s, dd, cf)) +
               1e5 * std::abs(s.slack_p);
    };

    double trust = 0.3;
    double best_merit = st.converged ? merit(st, d) : kInf;
    Dispatch best_d = d;
    AcState best_st = st;
    int iters_done = 0;

    for (int iter = 0; iter < 20; ++iter) {
        ++iters_done;
        if (!st.converged) break;

        struct Mon {
            int kind; // 0 V, 1 Pf, 2 Qf, 3 Pt, 4 Qt
            int idx;
            double lo, up, now;
        };
        std::vector<Mon> mons;
        for (std::size_t b = 0; b < net.ac_buses.size(); ++b) {
            const auto& bus = net.ac_buses[b];
            mons.push_back({0, static_cast<int>(b), bus.vmin, bus.vmax, st.vm[b]});
        }
        for (std::size_t l = 0; l < net.ac_branches.size(); ++l) {
            const auto& br = net.ac_branches[l];
            auto near = [&](double val, double lim) { return std::abs(val) > 0.6 * lim; };
            if (near(st.p_from[l], br.p_max))
                mons.push_back({1, static_cast<int>(l), -br.p_max, br.p_max, st.p_from[l]});
            if (near(st.q_from[l], br.q_max))
                mons.push_back({2, static_cast<int>(l), -br.q_max, br.q_max, st.q_from[l]});
            if (near(st.p_to[l], br.p_max))
                mons.push_back({3, static_cast<int>(l), -br.p_max, br.p_max, st.p_to[l]});
            if (near(st.q_to[l], br.q_max))
                mons.push_back({4, static_cast<int>(l), -br.q_max, br.q_max, st.q_to[l]});
        }

        // dx = J^-1 e per generator-bus injection (P and Q directions)
        std::map<int, Eigen::VectorXd> dx_p, dx_q;
        std::map<int, int> island_of_gen;
        for (int g = 0; g < ng; ++g) {
            int s = ctx.R.super_of_bus[net.ac_bus_index(net.generators[g].bus)];
            for (std::size_t ii = 0; ii < ctx.islands.size(); ++ii) {
                auto& is = ctx.islands[ii];
                int local = is.local_of_super[s];
                if (local < 0 || !is.factored || is.nun == 0) continue;
                island_of_gen[g] = static_cast<int>(ii);
                if (is.row_p[local] >= 0) {
                    Eigen::VectorXd e = Eigen::VectorXd::Zero(is.nun);
                    e[is.row_p[local]] = 1.0;
                    dx_p[g] = is.lu.solve(e);
                }
                if (is.row_q[local] >= 0) {
                    Eigen::VectorXd e = Eigen::VectorXd::Zero(is.nun);
                    e[is.row_q[local]] = 1.0;
                    dx_q[g] = is.lu.solve(e);
                }
            }
        }

        auto monitor_grad = [&](const Mon& mo, IslandSolver& is, Eigen::VectorXd& grad) {
            grad.setZero(is.nun);
            if (mo.kind == 0) {
                int s = ctx.R.super_of_bus[mo.idx];
                int local = is.local_of_super[s];
                if (local < 0) return false;
                if (is.col_v[local] >= 0) grad[is.col_v[local]] = 1.0;
                return true;
            }
            const auto& br = net.ac_branches[mo.idx];
            int fl = is.local_of_super[ctx.R.super_of_bus[net.ac_bus_index(br.from_bus)]];
            int tl = is.local_of_super[ctx.R.super_of_bus[net.ac_bus_index(br.to_bus)]];
            if (fl < 0 || tl < 0) return false;
            Cx y = 1.0 / Cx(br.r, br.x);
            double tap = br.tap;
            Cx yff = (y + Cx(br.g_s_f, br.b_s_f)) / (tap * tap);
            Cx yft = -y / tap;
            Cx ytf = -y / tap;
            Cx ytt = y + Cx(br.g_s_t, br.b_s_t);
            bool from_side = mo.kind == 1 || mo.kind == 2;
            int i = from_side ? fl : tl, j = from_side ? tl : fl;
            Cx yii = from_side ? yff : ytt, yij = from_side ? yft : ytf;
            double gii = yii.real(), bii = yii.imag();
            double gij = yij.real(), bij = yij.imag();
            double vi = is.vm[i], vj = is.vm[j];
            double th = is.va[i] - is.va[j];
            double c = std::cos(th), sn = std::sin(th);
            bool active = mo.kind == 1 || mo.kind == 3;
            double dF_dthi, dF_dvi, dF_dvj;
            if (active) {
                dF_dthi = vi * vj * (-gij * sn + bij * c);
                dF_dvi = 2 * vi * gii + vj * (gij * c + bij * sn);
                dF_dvj = vi * (gij * c + bij * sn);
            } else {
                dF_dthi = vi * vj * (gij * c + bij * sn);
                dF_dvi = -2 * vi * bii + vj * (gij * sn - bij * c);
                dF_dvj = vi * (gij * sn - bij * c);
            }
            if (is.col_th[i] >= 0) grad[is.col_th[i]] += dF_dthi;
            if (is.col_th[j] >= 0) grad[is.col_th[j]] -= dF_dthi;
            if (is.col_v[i] >= 0) grad[is.col_v[i]] += dF_dvi;
            if (is.col_v[j] >= 0) grad[is.col_v[j]] += dF_dvj;
            return true;
        };

        lp::Problem lp;
        std::vector<int> vp(ng, -1), vq(ng, -1);
        for (int g = 0; g < ng; ++g) {
            const auto& gen = net.generators[g];
            double pmax = wind_limit(gen, cf);
            if (mode.redispatch) pmax = std::min(pmax, mode.cap[g]);
            double lo = std::max(gen.p_min - d.pg[g], -trust);
            double up = std::min(pmax - d.pg[g], trust);
            if (lo > up) up = lo;
            double cost = mode.redispatch ? 0.0 : gen.c1 + 2.0 * gen.c2 * d.pg[g];
            vp[g] = lp.add_col(lo, up, cost);
            double qlo = std::max(gen.q_min - d.qg[g], -trust);
            double qup = std::min(gen.q_max - d.qg[g], trust);
            if (qlo > qup) qup = qlo;
            vq[g] = lp.add_col(qlo, qup, 0.0);
            if (mode.redispatch) {
                int epv = lp.add_col(0.0, kInf, mode.mc[g]);
                int emv = lp.add_col(0.0, kInf, mode.down_price[g]);
                double rhs = mode.target[g] - d.pg[g];
                lp.add_row(-rhs, -rhs, {{epv, -1.0}, {emv, 1.0}, {vp[g], 1.0}});
            }
        }
        for (auto& mo : mons) {
            std::vector<std::pair<int, double>> coef;
            Eigen::VectorXd grad;
            for (auto& is : ctx.islands) {
                if (!is.factored || is.nun == 0) continue;
                if (!monitor_grad(mo, is, grad)) continue;
                for (int g = 0; g < ng; ++g) {
                    auto itp = dx_p.find(g);
                    if (itp != dx_p.end() && itp->second.size() == grad.size()) {
                        double s = grad.dot(itp->second);
                        if (std::abs(s) > 1e-9) coef.push_back({vp[g], s});
                    }
                    auto itq = dx_q.find(g);
                    if (itq != dx_q.end() && itq->second.size() == grad.size()) {
                        double s = grad.dot(itq->second);
                        if (std::abs(s) > 1e-9) coef.push_back({vq[g], s});
                    }
                }
            }
            if (coef.empty()) continue;
            int relax = lp.add_col(0.0, kInf, 1e4);
            int tighten = lp.add_col(0.0, kInf, 1e4);
            coef.push_back({relax, -1.0});
            coef.push_back({tighten, 1.0});
            // aim slightly inside the limits so linearization error cannot
            // spill past them at the exact solution
            double backoff = 2e-5 * (1.0 + std::abs(mo.up));
            lp.add_row(mo.lo + backoff - mo.now, mo.up - backoff - mo.now,
                       std::move(coef));
        }
        {
            // steer total generation change to cancel the slack residual
            std::vector<std::pair<int, double>> coef;
            for (int g = 0; g < ng; ++g) coef.push_back({vp[g], 1.0});
            int relax = lp.add_col(0.0, kInf, 2e3);
            int tighten = lp.add_col(0.0, kInf, 2e3);
            coef.push_back({relax, -1.0});
            coef.push_back({tighten, 1.0});
            lp.add_row(st.slack_p - 1e-4, st.slack_p + 1e-4, std::move(coef));
        }

        lp::Simplex sx;
        sx.load(lp);
        if (sx.solve() != lp::Status::Optimal) break;
        const auto& xv = sx.col_values();
        Dispatch nd = d;
        double max_step = 0.0;
        for (int g = 0; g < ng; ++g) {
            nd.pg[g] = d.pg[g] + xv[vp[g]];
            nd.qg[g] = d.qg[g] + xv[vq[g]];
            max_step = std::max({max_step, std::abs(xv[vp[g]]), std::abs(xv[vq[g]])});
        }
        PfContext nctx(net, plan, t);
        nctx.run(nd, false);
        AcState nst = nctx.state();
        if (nst.converged && merit(nst, nd) <= best_merit + 1e-10) {
            best_merit = merit(nst, nd);
            best_d = nd;
            best_st = nst;
            d = nd;
            ctx = std::move(nctx);
            st = best_st;
            trust = std::min(0.5, trust * 1.4);
        } else {
            trust *= 0.4;
            if (trust < 1e-5) break;
        }
        if (max_step < 1e-6) break;
    }

    // fold the slack residual into the absorber so the dispatch balances
    {
        PfContext fac(net, plan, t);
        fac.run(best_d, false);
        for (auto& is : fac.islands) {
            int gslack = fac.R.slack_gen[is.island];
            if (gslack < 0) continue;
            double Pi, Qi;
            is.net_injection(is.slack_local, Pi, Qi);
            best_d.pg[gslack] += Pi - is.p_spec[is.slack_local];
            best_d.qg[gslack] += Qi - is.q_spec[is.slack_local];
        }
        PfContext ver(net, plan, t);
        ver.run(best_d, false);
        best_st = ver.state();
    }

    SlpResult out;
    out.dispatch = best_d;
    out.state = best_st;
    out.report.converged = best_st.converged;
    out.report.max_mismatch = best_st.max_mismatch;
    out.report.iterations = iters_done;
    out.report.violations = collect_violations(net, best_st, best_d, cf);
    out.report.generation_cost = generation_cost(net, best_d);
    return out;
}

} // namespace

std::pair<Dispatch, FeasibilityReport> feasibility_opf(const net::Network& net,
                                                       const lpac::TopologyPlan& plan,
                                                       int t, double forecast_cf) {
    OpfMode mode;
    auto res = run_slp(net, plan, t, forecast_cf, mode, nullptr);
    return {res.dispatch, res.report};
}

DispatchResult redispatch(const net::Network& net, const lpac::TopologyPlan& plan, int t,
                          const Dispatch& d1, double forecast_cf, double measured_cf) {
    int ng = static_cast<int>(net.generators.size());
    OpfMode mode;
    mode.redispatch = true;
    mode.target.assign(ng, 0.0);
    mode.mc.assign(ng, 0.0);
    mode.down_price.assign(ng, 0.0);
    mode.cap.assign(ng, 0.0);
    double mc_ceiling = 1.0;
    for (int g = 0; g < ng; ++g)
        mc_ceiling = std::max(mc_ceiling, net.generators[g].c1 +
                                              2.0 * net.generators[g].c2 *
                                                  net.generators[g].p_max);
    for (int g = 0; g < ng; ++g) {
        const auto& gen = net.generators[g];
        mode.mc[g] = gen.c1 + 2.0 * gen.c2 * d1.pg[g];
        mode.cap[g] = gen.p_max;
        mode.down_price[g] = mode.mc[g];
        if (gen.is_wind) {
            // must-take: the availability delta passes through around the D-1
            // setpoint; curtailing below it is the remedy of last resort
            double delta = gen.p_max * (measured_cf - forecast_cf);
            mode.target[g] = std::clamp(d1.pg[g] + delta, std::max(0.0, gen.p_min),
                                        wind_limit(gen, measured_cf));
            mode.cap[g] = mode.target[g];
            mode.down_price[g] = 2.0 * mc_ceiling;
        } else {
            mode.target[g] = d1.pg[g];
        }
    }
    Dispatch warm = d1;
    for (int g = 0; g < ng; ++g) warm.pg[g] = mode.target[g];
    auto res = run_slp(net, plan, t, measured_cf, mode, &warm);

    DispatchResult out;
    out.dispatch = res.dispatch;
    out.state = res.state;
    out.generation_cost = generation_cost(net, res.dispatch);
    out.violations = res.report.violations;
    out.feasible = res.report.converged && viol_total(res.report.violations) <= 1e-5;
    out.redispatch_cost = 0.0;
    for (int g = 0; g < ng; ++g)
        out.redispatch_cost += mode.mc[g] * std::abs(res.dispatch.pg[g] - d1.pg[g]);
    if (!out.feasible)
        throw SolveError("redispatch could not restore feasibility at t=" +
                         std::to_string(t));
    return out;
}

} // namespace gridtopo::acpf
