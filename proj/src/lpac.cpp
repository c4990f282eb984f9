#include "gridtopo/lpac.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace gridtopo::lpac {

using mip::MipInstance;
using mip::Sense;
using mip::VarKind;
using mip::VarMeta;

void ModelConfig::validate() const {
    if (horizon < 0) throw ValidationError("horizon must be >= 1 (or 0 to derive)");
    if (s_max < 0 || s_dc_max < 0) throw ValidationError("S_max must be >= 0");
    if (cosine_cuts < 2) throw ValidationError("cosine_cuts must be >= 2");
    if (cost_segments < 1) throw ValidationError("cost_segments must be >= 1");
    if (!(gap > 0)) throw ValidationError("gap must be > 0");
}

std::vector<CosCut> cosine_cuts(double dtheta_max, int n) {
    if (n < 2) throw ValidationError("cosine_cuts needs n >= 2");
    double d = dtheta_max;
    double kappa = (1.0 - std::cos(d)) / (d * d);
    std::vector<CosCut> cuts;
    for (int j = 0; j < n; ++j) {
        double a = d * j / (n - 1);
        // tangent to 1 - kappa x^2 at x = a: cs <= 1 + kappa a^2 - 2 kappa a x
        cuts.push_back({2.0 * kappa * a, 1.0 + kappa * a * a});
        if (j > 0) cuts.push_back({-2.0 * kappa * a, 1.0 + kappa * a * a});
    }
    return cuts;
}

std::vector<PwlLine> pwl_cost(double c2, double c1, double c0, double p_min, double p_max,
                              int segments) {
    if (segments < 1) throw ValidationError("pwl_cost needs segments >= 1");
    if (c2 < 0) throw ValidationError("pwl_cost needs convex cost (c2 >= 0)");
    auto f = [&](double p) { return c2 * p * p + c1 * p + c0; };
    std::vector<PwlLine> lines;
    if (c2 == 0.0 || p_max <= p_min) {
        lines.push_back({c1, c0});
        return lines;
    }
    for (int k = 0; k < segments; ++k) {
        double a = p_min + (p_max - p_min) * k / segments;
        double b = p_min + (p_max - p_min) * (k + 1) / segments;
        double slope = (f(b) - f(a)) / (b - a); // = c2 (a + b) + c1
        lines.push_back({slope, f(a) - slope * a});
    }
    return lines;
}

namespace {

inline std::size_t twi(int t, int w, int W) {
    return static_cast<std::size_t>(t) * W + w;
}

std::string nm(const std::string& kind, const std::string& ent, int t, int w) {
    return kind + "_" + ent + "_t" + std::to_string(t) + "_w" + std::to_string(w);
}
std::string nm_t(const std::string& kind, const std::string& ent, int t) {
    return kind + "_" + ent + "_t" + std::to_string(t);
}

} // namespace

BuildResult build(const net::Network& net, const scen::ScenarioSet& scen,
                  const ModelConfig& cfg) {
    cfg.validate();
    scen.validate();
    int T = static_cast<int>(scen.horizon());
    if (T < 1) throw ValidationError("scenario set is empty");
    if (cfg.horizon > 0 && cfg.horizon != T)
        throw ValidationError("config horizon disagrees with the scenario horizon");
    int W = static_cast<int>(scen.width());
    for (auto& step : scen.per_timestep)
        if (static_cast<int>(step.size()) != W)
            throw ValidationError("scenario count must be constant over timesteps");
    bool has_wind = false;
    for (auto& g : net.generators) has_wind |= g.is_wind;
    if (W > 1 && !has_wind)
        throw ValidationError("scenario set varies but the network has no wind generators");

    BuildResult out;
    MipInstance& m = out.inst;
    VariableLayout& L = out.layout;
    L.T = T;
    L.W = W;
    L.n_bus = static_cast<int>(net.ac_buses.size());
    L.n_dcbus = static_cast<int>(net.dc_buses.size());
    L.n_branch = static_cast<int>(net.ac_branches.size());
    L.n_dcbranch = static_cast<int>(net.dc_branches.size());
    L.n_gen = static_cast<int>(net.generators.size());
    L.n_conv = static_cast<int>(net.converters.size());
    L.n_sw = static_cast<int>(net.switches.size());

    auto bus_idx = [&](int id) { return net.ac_bus_index(id); };
    auto dc_idx = [&](int id) { return net.dc_bus_index(id); };

    std::size_t tw = static_cast<std::size_t>(T) * W;
    L.theta.resize(tw * L.n_bus);
    L.phi.resize(tw * L.n_bus);
    L.cs.resize(tw * L.n_branch);
    L.p_flow.resize(tw * L.n_branch * 2);
    L.q_flow.resize(tw * L.n_branch * 2);
    L.pg.resize(tw * L.n_gen);
    L.qg.resize(tw * L.n_gen);
    L.pwl_y.assign(tw * L.n_gen, -1);
    L.conv_p_ac.resize(tw * L.n_conv);
    L.conv_q_ac.resize(tw * L.n_conv);
    L.conv_p_dc.resize(tw * L.n_conv);
    L.conv_i.resize(tw * L.n_conv);
    L.phi_dc.resize(tw * L.n_dcbus);
    L.p_dcflow.resize(tw * L.n_dcbranch * 2);
    L.sw_p.resize(tw * L.n_sw);
    L.sw_q.assign(tw * L.n_sw, -1);
    L.z.resize(static_cast<std::size_t>(T) * L.n_sw);
    L.slot_ac.assign(T, -1);
    L.slot_dc.assign(T, -1);

    // fixed plan for PlainOPF: couplers and original-side switches closed
    auto fixed_closed = [&](const net::Switch& sw) {
        if (sw.kind == net::SwitchKind::Coupler) return true;
        const net::Switch* coupler = net.find_switch(sw.coupler_id);
        return coupler && sw.to_bus == coupler->from_bus; // original-side switch
    };

    // binaries, indexed by (switch, t) only
    for (int t = 0; t < T; ++t) {
        for (int s = 0; s < L.n_sw; ++s) {
            const auto& sw = net.switches[s];
            double lo = 0.0, up = 1.0;
            if (cfg.mode == Mode::PlainOPF) lo = up = fixed_closed(sw) ? 1.0 : 0.0;
            double cost = sw.kind == net::SwitchKind::Coupler ? cfg.switch_cost : 0.0;
            int v = m.add_var(nm_t("z", "s" + std::to_string(sw.id), t), lo, up,
                              VarKind::Binary, cost);
            m.set_meta(v, VarMeta{"sw:" + std::to_string(sw.id), t, -1});
            L.z[static_cast<std::size_t>(t) * L.n_sw + s] = v;
        }
    }

    for (int t = 0; t < T; ++t) {
        for (int w = 0; w < W; ++w) {
            double omega = scen.per_timestep[t][w].probability;
            double cf = scen.per_timestep[t][w].capacity_factor;
            auto meta = [&](int v, const std::string& ent) {
                m.set_meta(v, VarMeta{ent, t, w});
            };

            for (int b = 0; b < L.n_bus; ++b) {
                const auto& bus = net.ac_buses[b];
                std::string ent = "b" + std::to_string(bus.id);
                double alo = bus.amin, aup = bus.amax;
                if (bus.is_reference) alo = aup = 0.0; // reference angle fix
                int th = m.add_var(nm("th", ent, t, w), alo, aup, VarKind::Continuous);
                int ph = m.add_var(nm("ph", ent, t, w), bus.vmin - 1.0, bus.vmax - 1.0,
                                   VarKind::Continuous);
                meta(th, "bus:" + std::to_string(bus.id));
                meta(ph, "bus:" + std::to_string(bus.id));
                L.theta[twi(t, w, W) * L.n_bus + b] = th;
                L.phi[twi(t, w, W) * L.n_bus + b] = ph;
            }
            for (int br = 0; br < L.n_branch; ++br) {
                const auto& branch = net.ac_branches[br];
                std::string ent = "l" + std::to_string(branch.id);
                int c = m.add_var(nm("cs", ent, t, w), std::cos(branch.dtheta_max), 1.0,
                                  VarKind::Continuous);
                meta(c, "branch:" + std::to_string(branch.id));
                L.cs[twi(t, w, W) * L.n_branch + br] = c;
                for (int dir = 0; dir < 2; ++dir) {
                    int p = m.add_var(nm(dir ? "pt" : "pf", ent, t, w), -branch.p_max,
                                      branch.p_max, VarKind::Continuous);
                    int q = m.add_var(nm(dir ? "qt" : "qf", ent, t, w), -branch.q_max,
                                      branch.q_max, VarKind::Continuous);
                    meta(p, "branch:" + std::to_string(branch.id));
                    meta(q, "branch:" + std::to_string(branch.id));
                    L.p_flow[twi(t, w, W) * L.n_branch * 2 + br * 2 + dir] = p;
                    L.q_flow[twi(t, w, W) * L.n_branch * 2 + br * 2 + dir] = q;
                }
            }
            for (int g = 0; g < L.n_gen; ++g) {
                const auto& gen = net.generators[g];
                std::string ent = "g" + std::to_string(gen.id);
                double pmax = gen.p_max;
                double pmin = gen.p_min;
                if (gen.is_wind) {
                    pmax *= cf;
                    pmin = std::min(pmin, pmax);
                }
                int pv = m.add_var(nm("pg", ent, t, w), pmin, pmax, VarKind::Continuous);
                int qv = m.add_var(nm("qg", ent, t, w), gen.q_min, gen.q_max,
                                   VarKind::Continuous);
                meta(pv, "gen:" + std::to_string(gen.id));
                meta(qv, "gen:" + std::to_string(gen.id));
                L.pg[twi(t, w, W) * L.n_gen + g] = pv;
                L.qg[twi(t, w, W) * L.n_gen + g] = qv;
                if (gen.c2 > 0.0 && pmax > pmin) {
                    auto lines = pwl_cost(gen.c2, gen.c1, gen.c0, pmin, pmax,
                                          cfg.cost_segments);
                    auto f = [&](double p) { return gen.c2 * p * p + gen.c1 * p + gen.c0; };
                    double ylo = kInf, yup = -kInf;
                    for (int k = 0; k <= cfg.cost_segments; ++k) {
                        double p = pmin + (pmax - pmin) * k / cfg.cost_segments;
                        ylo = std::min(ylo, f(p));
                        yup = std::max(yup, f(p));
                    }
                    int y = m.add_var(nm("y", ent, t, w), ylo, yup, VarKind::Continuous,
                                      omega);
                    meta(y, "gen:" + std::to_string(gen.id));
                    L.pwl_y[twi(t, w, W) * L.n_gen + g] = y;
                    int k = 0;
                    for (auto& line : lines) {
                        m.add_row(nm("pwl" + std::to_string(k), ent, t, w),
                                  Sense::GreaterEqual, line.intercept,
                                  {{y, 1.0}, {pv, -line.slope}});
                        ++k;
                    }
                    double seg = (pmax - pmin) / cfg.cost_segments;
                    out.pwl_bound += omega * gen.c2 * seg * seg / 4.0;
                } else {
                    m.set_obj(pv, omega * gen.c1);
                    m.add_obj_constant(omega * gen.c0);
                }
            }
            for (int c = 0; c < L.n_conv; ++c) {
                const auto& cv = net.converters[c];
                std::string ent = "c" + std::to_string(cv.id);
                int pac = m.add_var(nm("pc", ent, t, w), -cv.s_max, cv.s_max,
                                    VarKind::Continuous);
                int qac = m.add_var(nm("qc", ent, t, w), -cv.s_max, cv.s_max,
                                    VarKind::Continuous);
                int pdc = m.add_var(nm("pd", ent, t, w), -cv.s_max, cv.s_max,
                                    VarKind::Continuous);
                int iv = m.add_var(nm("ic", ent, t, w), 0.0, 2.0 * cv.s_max,
                                   VarKind::Continuous);
                for (int v : {pac, qac, pdc, iv}) meta(v, "conv:" + std::to_string(cv.id));
                L.conv_p_ac[twi(t, w, W) * L.n_conv + c] = pac;
                L.conv_q_ac[twi(t, w, W) * L.n_conv + c] = qac;
                L.conv_p_dc[twi(t, w, W) * L.n_conv + c] = pdc;
                L.conv_i[twi(t, w, W) * L.n_conv + c] = iv;
                // losses: p_ac_draw - p_dc_inj = loss_a + loss_b * I, I >= |p_ac|
                m.add_row(nm("loss", ent, t, w), Sense::Equal, cv.loss_a,
                          {{pac, 1.0}, {pdc, -1.0}, {iv, -cv.loss_b}});
                m.add_row(nm("iabs1", ent, t, w), Sense::GreaterEqual, 0.0,
                          {{iv, 1.0}, {pac, -1.0}});
                m.add_row(nm("iabs2", ent, t, w), Sense::GreaterEqual, 0.0,
                          {{iv, 1.0}, {pac, 1.0}});
                // octagon inscribed in the apparent-power disc
                for (int k = 0; k < 8; ++k) {
                    double alpha = M_PI / 8.0 + k * M_PI / 4.0;
                    m.add_row(nm("oct" + std::to_string(k), ent, t, w), Sense::LessEqual,
                              cv.s_max * std::cos(M_PI / 8.0),
                              {{pac, std::cos(alpha)}, {qac, std::sin(alpha)}});
                }
            }
            for (int b = 0; b < L.n_dcbus; ++b) {
                const auto& bus = net.dc_buses[b];
                int v = m.add_var(nm("phd", "e" + std::to_string(bus.id), t, w),
                                  bus.vmin - 1.0, bus.vmax - 1.0, VarKind::Continuous);
                meta(v, "dcbus:" + std::to_string(bus.id));
                L.phi_dc[twi(t, w, W) * L.n_dcbus + b] = v;
            }
            for (int br = 0; br < L.n_dcbranch; ++br) {
                const auto& branch = net.dc_branches[br];
                std::string ent = "d" + std::to_string(branch.id);
                for (int dir = 0; dir < 2; ++dir) {
                    int v = m.add_var(nm(dir ? "pdt" : "pdf", ent, t, w), branch.p_min,
                                      branch.p_max, VarKind::Continuous);
                    meta(v, "dcbranch:" + std::to_string(branch.id));
                    L.p_dcflow[twi(t, w, W) * L.n_dcbranch * 2 + br * 2 + dir] = v;
                }
            }
            for (int s = 0; s < L.n_sw; ++s) {
                const auto& sw = net.switches[s];
                std::string ent = "s" + std::to_string(sw.id);
                int p = m.add_var(nm("psw", ent, t, w), std::min(sw.p_min, 0.0),
                                  std::max(sw.p_max, 0.0), VarKind::Continuous);
                meta(p, "sw:" + std::to_string(sw.id));
                L.sw_p[twi(t, w, W) * L.n_sw + s] = p;
                if (sw.side == net::Side::Ac) {
                    int q = m.add_var(nm("qsw", ent, t, w), std::min(sw.q_min, 0.0),
                                      std::max(sw.q_max, 0.0), VarKind::Continuous);
                    meta(q, "sw:" + std::to_string(sw.id));
                    L.sw_q[twi(t, w, W) * L.n_sw + s] = q;
                }
            }

            // AC branch flow definitions + cosine cuts
            for (int br = 0; br < L.n_branch; ++br) {
                const auto& branch = net.ac_branches[br];
                int bi = bus_idx(branch.from_bus), bj = bus_idx(branch.to_bus);
                int csv = L.cs_i(br, w, t);
                std::string ent = "l" + std::to_string(branch.id);
                for (int dir = 0; dir < 2; ++dir) {
                    bool from = dir == 0;
                    auto par = branch.dir(from);
                    int i = from ? bi : bj, j = from ? bj : bi;
                    int pv = L.pflow_i(br, from, w, t);
                    int qv = L.qflow_i(br, from, w, t);
                    int thi = L.theta_i(i, w, t), thj = L.theta_i(j, w, t);
                    int phi = L.phi_i(i, w, t), phj = L.phi_i(j, w, t);
                    m.add_row(nm(from ? "defp_f" : "defp_t", ent, t, w), Sense::Equal,
                              par.g_lead,
                              {{pv, 1.0},
                               {phi, par.g_series - 2.0 * par.g_lead},
                               {phj, par.g_series},
                               {csv, par.g_series},
                               {thi, par.b_series},
                               {thj, -par.b_series}});
                    m.add_row(nm(from ? "defq_f" : "defq_t", ent, t, w), Sense::Equal,
                              -par.b_lead,
                              {{qv, 1.0},
                               {phi, 2.0 * par.b_lead - par.b_series},
                               {phj, -par.b_series},
                               {csv, -par.b_series},
                               {thi, par.g_series},
                               {thj, -par.g_series}});
                }
                auto cuts = cosine_cuts(branch.dtheta_max, cfg.cosine_cuts);
                int thi = L.theta_i(bi, w, t), thj = L.theta_i(bj, w, t);
                int k = 0;
                for (auto& cut : cuts) {
                    m.add_row(nm("cut" + std::to_string(k), ent, t, w), Sense::LessEqual,
                              cut.rhs,
                              {{csv, 1.0}, {thi, cut.coef_x}, {thj, -cut.coef_x}});
                    ++k;
                }
            }
            // DC branch flow definitions
            for (int br = 0; br < L.n_dcbranch; ++br) {
                const auto& branch = net.dc_branches[br];
                int be = dc_idx(branch.from_bus), bf = dc_idx(branch.to_bus);
                std::string ent = "d" + std::to_string(branch.id);
                double kfl = branch.poles * branch.y;
                for (int dir = 0; dir < 2; ++dir) {
                    bool from = dir == 0;
                    int e = from ? be : bf, fx = from ? bf : be;
                    int pv = L.pdcflow_i(br, from, w, t);
                    m.add_row(nm(from ? "defd_f" : "defd_t", ent, t, w), Sense::Equal, 0.0,
                              {{pv, 1.0},
                               {L.phidc_i(e, w, t), -kfl},
                               {L.phidc_i(fx, w, t), kfl}});
                }
            }
            // AC bus balance
            for (int b = 0; b < L.n_bus; ++b) {
                const auto& bus = net.ac_buses[b];
                std::vector<std::pair<int, double>> prow, qrow;
                double pd = 0.0, qd = 0.0;
                for (auto& l : net.loads)
                    if (l.bus == bus.id) {
                        pd += l.p;
                        qd += l.q;
                    }
                for (int g = 0; g < L.n_gen; ++g)
                    if (net.generators[g].bus == bus.id) {
                        prow.push_back({L.pg_i(g, w, t), 1.0});
                        qrow.push_back({L.qg_i(g, w, t), 1.0});
                    }
                for (int c = 0; c < L.n_conv; ++c)
                    if (net.converters[c].ac_bus == bus.id) {
                        prow.push_back({L.conv_pac_i(c, w, t), -1.0});
                        qrow.push_back({L.conv_qac_i(c, w, t), -1.0});
                    }
                for (int s = 0; s < L.n_sw; ++s) {
                    const auto& sw = net.switches[s];
                    if (sw.side != net::Side::Ac) continue;
                    if (sw.to_bus == bus.id) {
                        prow.push_back({L.swp_i(s, w, t), 1.0});
                        qrow.push_back({L.swq_i(s, w, t), 1.0});
                    } else if (sw.from_bus == bus.id) {
                        prow.push_back({L.swp_i(s, w, t), -1.0});
                        qrow.push_back({L.swq_i(s, w, t), -1.0});
                    }
                }
                for (int br = 0; br < L.n_branch; ++br) {
                    const auto& branch = net.ac_branches[br];
                    if (branch.from_bus == bus.id) {
                        prow.push_back({L.pflow_i(br, true, w, t), -1.0});
                        qrow.push_back({L.qflow_i(br, true, w, t), -1.0});
                    }
                    if (branch.to_bus == bus.id) {
                        prow.push_back({L.pflow_i(br, false, w, t), -1.0});
                        qrow.push_back({L.qflow_i(br, false, w, t), -1.0});
                    }
                }
                std::string ent = "b" + std::to_string(bus.id);
                m.add_row(nm("balp", ent, t, w), Sense::Equal, pd, std::move(prow));
                m.add_row(nm("balq", ent, t, w), Sense::Equal, qd, std::move(qrow));
            }
            // DC bus balance
            for (int b = 0; b < L.n_dcbus; ++b) {
                const auto& bus = net.dc_buses[b];
                std::vector<std::pair<int, double>> row;
                for (int c = 0; c < L.n_conv; ++c)
                    if (net.converters[c].dc_bus == bus.id)
                        row.push_back({L.conv_pdc_i(c, w, t), 1.0});
                for (int s = 0; s < L.n_sw; ++s) {
                    const auto& sw = net.switches[s];
                    if (sw.side != net::Side::Dc) continue;
                    if (sw.to_bus == bus.id) row.push_back({L.swp_i(s, w, t), 1.0});
                    else if (sw.from_bus == bus.id) row.push_back({L.swp_i(s, w, t), -1.0});
                }
                for (int br = 0; br < L.n_dcbranch; ++br) {
                    const auto& branch = net.dc_branches[br];
                    if (branch.from_bus == bus.id)
                        row.push_back({L.pdcflow_i(br, true, w, t), -1.0});
                    if (branch.to_bus == bus.id)
                        row.push_back({L.pdcflow_i(br, false, w, t), -1.0});
                }
                m.add_row(nm("bald", "e" + std::to_string(bus.id), t, w), Sense::Equal, 0.0,
                          std::move(row));
            }
            // switch big-M coupling and flow gating
            for (int s = 0; s < L.n_sw; ++s) {
                const auto& sw = net.switches[s];
                std::string ent = "s" + std::to_string(sw.id);
                int zv = L.z_i(s, t);
                int pv = L.swp_i(s, w, t);
                if (sw.side == net::Side::Ac) {
                    int thf = L.theta_i(bus_idx(sw.from_bus), w, t);
                    int tht = L.theta_i(bus_idx(sw.to_bus), w, t);
                    int phf = L.phi_i(bus_idx(sw.from_bus), w, t);
                    int pht = L.phi_i(bus_idx(sw.to_bus), w, t);
                    double Mth = net.big_m_theta, Mph = net.big_m_phi;
                    m.add_row(nm("bmth_u", ent, t, w), Sense::LessEqual, Mth,
                              {{thf, 1.0}, {tht, -1.0}, {zv, Mth}});
                    m.add_row(nm("bmth_l", ent, t, w), Sense::GreaterEqual, -Mth,
                              {{thf, 1.0}, {tht, -1.0}, {zv, -Mth}});
                    m.add_row(nm("bmph_u", ent, t, w), Sense::LessEqual, Mph,
                              {{phf, 1.0}, {pht, -1.0}, {zv, Mph}});
                    m.add_row(nm("bmph_l", ent, t, w), Sense::GreaterEqual, -Mph,
                              {{phf, 1.0}, {pht, -1.0}, {zv, -Mph}});
                    int qv = L.swq_i(s, w, t);
                    m.add_row(nm("gateq_u", ent, t, w), Sense::LessEqual, 0.0,
                              {{qv, 1.0}, {zv, -sw.q_max}});
                    m.add_row(nm("gateq_l", ent, t, w), Sense::GreaterEqual, 0.0,
                              {{qv, 1.0}, {zv, -sw.q_min}});
                } else {
                    int phf = L.phidc_i(dc_idx(sw.from_bus), w, t);
                    int pht = L.phidc_i(dc_idx(sw.to_bus), w, t);
                    double Mdc = net.big_m_dc;
                    m.add_row(nm("bmdc_u", ent, t, w), Sense::LessEqual, Mdc,
                              {{phf, 1.0}, {pht, -1.0}, {zv, Mdc}});
                    m.add_row(nm("bmdc_l", ent, t, w), Sense::GreaterEqual, -Mdc,
                              {{phf, 1.0}, {pht, -1.0}, {zv, -Mdc}});
                }
                m.add_row(nm("gatep_u", ent, t, w), Sense::LessEqual, 0.0,
                          {{pv, 1.0}, {zv, -sw.p_max}});
                m.add_row(nm("gatep_l", ent, t, w), Sense::GreaterEqual, 0.0,
                          {{pv, 1.0}, {zv, -sw.p_min}});
            }
        }
    }

    // per-t switch logic (scenario independent)
    for (int t = 0; t < T; ++t) {
        for (int s = 0; s < L.n_sw; ++s) {
            const auto& sw = net.switches[s];
            if (sw.kind != net::SwitchKind::Reconnection) continue;
            if (sw.partner_switch <= sw.id) continue; // one row per pair
            int partner_pos = -1;
            for (int s2 = 0; s2 < L.n_sw; ++s2)
                if (net.switches[s2].id == sw.partner_switch) partner_pos = s2;
            m.add_row(nm_t("excl", "s" + std::to_string(sw.id), t),
                      cfg.allow_ots ? Sense::LessEqual : Sense::Equal, 1.0,
                      {{L.z_i(s, t), 1.0}, {L.z_i(partner_pos, t), 1.0}});
        }
        // coupler closed forces the aux-side switch open; with exclusivity as
        // an equality the original-side switch is then closed
        for (int s = 0; s < L.n_sw; ++s) {
            const auto& sw = net.switches[s];
            if (sw.kind != net::SwitchKind::Reconnection) continue;
            const net::Switch* coupler = net.find_switch(sw.coupler_id);
            if (!coupler || sw.to_bus != coupler->to_bus) continue; // not aux side
            int cpos = -1;
            for (int s2 = 0; s2 < L.n_sw; ++s2)
                if (net.switches[s2].id == coupler->id) cpos = s2;
            m.add_row(nm_t("impl", "s" + std::to_string(sw.id), t), Sense::LessEqual, 1.0,
                      {{L.z_i(s, t), 1.0}, {L.z_i(cpos, t), 1.0}});
        }
    }

    // Model 2
    if (cfg.mode == Mode::OneTopology) {
        for (int t = 1; t < T; ++t)
            for (int s = 0; s < L.n_sw; ++s)
                m.add_row(nm_t("onetopo", "s" + std::to_string(net.switches[s].id), t),
                          Sense::Equal, 0.0, {{L.z_i(s, t), 1.0}, {L.z_i(s, 0), -1.0}});
    } else if (cfg.mode == Mode::LimitedActions && T > 1) {
        bool any_ac = false, any_dc = false;
        for (auto& sw : net.switches)
            (sw.side == net::Side::Ac ? any_ac : any_dc) = true;
        for (int t = 1; t < T; ++t) {
            if (any_ac) {
                int v = m.add_var(nm_t("sac", "slot", t), 0.0, 1.0, VarKind::Continuous);
                m.set_meta(v, VarMeta{"slot:ac", t, -1});
                L.slot_ac[t] = v;
            }
            if (any_dc) {
                int v = m.add_var(nm_t("sdc", "slot", t), 0.0, 1.0, VarKind::Continuous);
                m.set_meta(v, VarMeta{"slot:dc", t, -1});
                L.slot_dc[t] = v;
            }
            for (int s = 0; s < L.n_sw; ++s) {
                const auto& sw = net.switches[s];
                int slot = sw.side == net::Side::Ac ? L.slot_ac[t] : L.slot_dc[t];
                std::string ent = "s" + std::to_string(sw.id);
                m.add_row(nm_t("act_u", ent, t), Sense::LessEqual, 0.0,
                          {{L.z_i(s, t), 1.0}, {L.z_i(s, t - 1), -1.0}, {slot, -1.0}});
                m.add_row(nm_t("act_l", ent, t), Sense::LessEqual, 0.0,
                          {{L.z_i(s, t - 1), 1.0}, {L.z_i(s, t), -1.0}, {slot, -1.0}});
            }
        }
        if (any_ac) {
            std::vector<std::pair<int, double>> row;
            for (int t = 1; t < T; ++t) row.push_back({L.slot_ac[t], 1.0});
            m.add_row("budget_ac", Sense::LessEqual, cfg.s_max, std::move(row));
        }
        if (any_dc) {
            std::vector<std::pair<int, double>> row;
            for (int t = 1; t < T; ++t) row.push_back({L.slot_dc[t], 1.0});
            m.add_row("budget_dc", Sense::LessEqual, cfg.s_dc_max, std::move(row));
        }
    }

    m.validate();
    return out;
}

int TopologyPlan::position_of(int switch_id) const {
    for (std::size_t i = 0; i < switch_ids.size(); ++i)
        if (switch_ids[i] == switch_id) return static_cast<int>(i);
    return -1;
}

int TopologyPlan::change_hours(const net::Network& net, net::Side side) const {
    int hours = 0;
    for (std::size_t t = 1; t < closed.size(); ++t) {
        bool any = false;
        for (std::size_t s = 0; s < switch_ids.size(); ++s) {
            const net::Switch* sw = net.find_switch(switch_ids[s]);
            if (sw && sw->side == side && closed[t][s] != closed[t - 1][s]) any = true;
        }
        hours += any ? 1 : 0;
    }
    return hours;
}

int TopologyPlan::total_changes() const {
    int n = 0;
    for (std::size_t t = 1; t < closed.size(); ++t)
        for (std::size_t s = 0; s < switch_ids.size(); ++s)
            n += closed[t][s] != closed[t - 1][s] ? 1 : 0;
    return n;
}

bool TopologyPlan::identical_over_time() const {
    for (std::size_t t = 1; t < closed.size(); ++t)
        if (closed[t] != closed[0]) return false;
    return true;
}

TopologyPlan extract_topology(const mip::MipSolution& sol, const net::Network& net,
                              const VariableLayout& layout) {
    if (sol.status != mip::SolveStatus::Optimal && sol.status != mip::SolveStatus::Feasible)
        throw ValidationError("no usable solution to extract a topology from");
    TopologyPlan plan;
    for (auto& sw : net.switches) plan.switch_ids.push_back(sw.id);
    plan.closed.assign(layout.T, std::vector<bool>(net.switches.size(), false));
    for (int t = 0; t < layout.T; ++t) {
        for (int s = 0; s < layout.n_sw; ++s) {
            double v = sol.values[layout.z_i(s, t)];
            if (v > 0.1 && v < 0.9)
                throw ValidationError("integrality violation on switch binary " +
                                      std::to_string(net.switches[s].id) + " at t=" +
                                      std::to_string(t) + ": " + std::to_string(v));
            plan.integrality_residual =
                std::max(plan.integrality_residual, std::min(v, 1.0 - v));
            plan.closed[t][s] = v > 0.5;
        }
    }
    return plan;
}

TopologyPlan original_topology(const net::Network& net, int T) {
    TopologyPlan plan;
    for (auto& sw : net.switches) plan.switch_ids.push_back(sw.id);
    plan.closed.assign(std::max(T, 1), std::vector<bool>(net.switches.size(), false));
    for (int t = 0; t < std::max(T, 1); ++t)
        for (std::size_t s = 0; s < net.switches.size(); ++s) {
            const auto& sw = net.switches[s];
            bool closed = true;
            if (sw.kind == net::SwitchKind::Reconnection) {
                const net::Switch* coupler = net.find_switch(sw.coupler_id);
                closed = coupler && sw.to_bus == coupler->from_bus;
            }
            plan.closed[t][s] = closed;
        }
    return plan;
}

SwitchAudit audit_solution(const net::Network& net, const VariableLayout& layout,
                           const mip::MipSolution& sol, const ModelConfig& cfg) {
    SwitchAudit a;
    const auto& x = sol.values;
    for (int t = 0; t < layout.T; ++t) {
        for (int s = 0; s < layout.n_sw; ++s) {
            const auto& sw = net.switches[s];
            double z = x[layout.z_i(s, t)];
            bool closed = z > 0.5;
            for (int w = 0; w < layout.W; ++w) {
                double p = x[layout.swp_i(s, w, t)];
                double q = sw.side == net::Side::Ac ? x[layout.swq_i(s, w, t)] : 0.0;
                if (closed) {
                    if (sw.side == net::Side::Ac) {
                        double dth = x[layout.theta_i(net.ac_bus_index(sw.from_bus), w, t)] -
                                     x[layout.theta_i(net.ac_bus_index(sw.to_bus), w, t)];
                        double dph = x[layout.phi_i(net.ac_bus_index(sw.from_bus), w, t)] -
                                     x[layout.phi_i(net.ac_bus_index(sw.to_bus), w, t)];
                        a.max_closed_theta_gap =
                            std::max(a.max_closed_theta_gap, std::abs(dth));
                        a.max_closed_phi_gap = std::max(a.max_closed_phi_gap, std::abs(dph));
                    } else {
                        double dph =
                            x[layout.phidc_i(net.dc_bus_index(sw.from_bus), w, t)] -
                            x[layout.phidc_i(net.dc_bus_index(sw.to_bus), w, t)];
                        a.max_closed_phi_gap = std::max(a.max_closed_phi_gap, std::abs(dph));
                    }
                } else {
                    a.max_open_flow = std::max({a.max_open_flow, std::abs(p), std::abs(q)});
                }
            }
            if (sw.kind == net::SwitchKind::Reconnection) {
                int ppos = -1, cpos = -1;
                for (int s2 = 0; s2 < layout.n_sw; ++s2) {
                    if (net.switches[s2].id == sw.partner_switch) ppos = s2;
                    if (net.switches[s2].id == sw.coupler_id) cpos = s2;
                }
                double zp = x[layout.z_i(ppos, t)];
                if (cfg.allow_ots) {
                    if (z + zp > 1.0 + 1e-6) a.exclusivity_ok = false;
                } else {
                    if (std::abs(z + zp - 1.0) > 1e-6) a.exclusivity_ok = false;
                }
                const net::Switch* coupler = net.find_switch(sw.coupler_id);
                if (coupler && sw.to_bus == coupler->to_bus) {
                    double zc = x[layout.z_i(cpos, t)];
                    if (z > 1.0 - zc + 1e-6) a.implication_ok = false;
                }
            }
        }
    }
    TopologyPlan plan = extract_topology(sol, net, layout);
    a.change_hours_ac = plan.change_hours(net, net::Side::Ac);
    a.change_hours_dc = plan.change_hours(net, net::Side::Dc);
    return a;
}

} // namespace gridtopo::lpac
