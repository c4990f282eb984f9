#include "gridtopo/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace gridtopo::net {

namespace {

constexpr double kDefaultDthetaMax = 0.5236;
constexpr double kDefaultAngleBound = 1.2;

// Scaling between file units (MW on base_mva) and per-unit storage. The
// forward map is a single long-double multiply; the inverse probes adjacent
// doubles so that parse(serialize(x)) reproduces x bit-exactly.
double scaled(double raw, long double scale) {
    return static_cast<double>(static_cast<long double>(raw) * scale);
}

double inverse_scaled(double pu, long double scale) {
    double y = static_cast<double>(static_cast<long double>(pu) / scale);
    if (scaled(y, scale) == pu) return y;
    for (int k = 1; k <= 4; ++k) {
        double up = y, dn = y;
        for (int i = 0; i < k; ++i) {
            up = std::nextafter(up, kInf);
            dn = std::nextafter(dn, -kInf);
        }
        if (scaled(up, scale) == pu) return up;
        if (scaled(dn, scale) == pu) return dn;
    }
    return y;
}

struct CaseTables {
    std::string name;
    double base_mva = 100.0;
    std::map<std::string, std::vector<std::vector<double>>> sections;
};

CaseTables read_case_tables(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError(path, "cannot open case file");
    CaseTables ct;
    std::string line;
    int lineno = 0;
    std::string cur_section;
    auto where = [&]() { return path + ":" + std::to_string(lineno); };
    while (std::getline(f, line)) {
        ++lineno;
        auto pc = line.find('%');
        if (pc != std::string::npos) line = line.substr(0, pc);
        // trim
        auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        auto e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        if (line.empty()) continue;

        if (cur_section.empty()) {
            if (line.rfind("function", 0) == 0) {
                auto eq = line.find('=');
                if (eq != std::string::npos) {
                    std::istringstream is(line.substr(eq + 1));
                    is >> ct.name;
                }
                continue;
            }
            if (line.rfind("mpc.baseMVA", 0) == 0) {
                auto eq = line.find('=');
                if (eq == std::string::npos) throw ParseError(where(), "bad baseMVA line");
                ct.base_mva = std::strtod(line.c_str() + eq + 1, nullptr);
                continue;
            }
            if (line.rfind("mpc.version", 0) == 0) continue;
            if (line.rfind("mpc.", 0) == 0) {
                auto eq = line.find('=');
                auto br = line.find('[');
                if (eq == std::string::npos || br == std::string::npos)
                    throw ParseError(where(), "expected 'mpc.<section> = ['");
                cur_section = line.substr(4, eq - 4);
                auto se = cur_section.find_last_not_of(" \t");
                cur_section = cur_section.substr(0, se + 1);
                ct.sections[cur_section]; // declare, possibly empty
                line = line.substr(br + 1);
                if (line.find_first_not_of(" \t") == std::string::npos) continue;
            } else {
                throw ParseError(where(), "unexpected line outside section: " + line);
            }
        }
        if (!cur_section.empty()) {
            bool closing = false;
            auto pos = line.find(']');
            if (pos != std::string::npos) {
                closing = true;
                line = line.substr(0, pos);
            }
            // rows may end with ';'
            std::replace(line.begin(), line.end(), ';', ' ');
            std::istringstream is(line);
            std::vector<double> row;
            std::string tok;
            while (is >> tok) {
                char* endp = nullptr;
                double v = std::strtod(tok.c_str(), &endp);
                if (endp == tok.c_str())
                    throw ParseError(where(), "non-numeric token '" + tok + "'");
                row.push_back(v);
            }
            if (!row.empty()) ct.sections[cur_section].push_back(std::move(row));
            if (closing) cur_section.clear();
        }
    }
    if (!cur_section.empty()) throw ParseError(path, "unterminated section " + cur_section);
    return ct;
}

void require_cols(const std::string& path, const std::string& sec,
                  const std::vector<double>& row, std::size_t n) {
    if (row.size() < n)
        throw ParseError(path, "section " + sec + ": expected at least " +
                                   std::to_string(n) + " columns, got " +
                                   std::to_string(row.size()));
}

} // namespace

const AcBus* Network::find_ac_bus(int id) const {
    for (auto& b : ac_buses)
        if (b.id == id) return &b;
    return nullptr;
}
const DcBus* Network::find_dc_bus(int id) const {
    for (auto& b : dc_buses)
        if (b.id == id) return &b;
    return nullptr;
}
const Switch* Network::find_switch(int id) const {
    for (auto& s : switches)
        if (s.id == id) return &s;
    return nullptr;
}
int Network::ac_bus_index(int id) const {
    for (std::size_t i = 0; i < ac_buses.size(); ++i)
        if (ac_buses[i].id == id) return static_cast<int>(i);
    return -1;
}
int Network::dc_bus_index(int id) const {
    for (std::size_t i = 0; i < dc_buses.size(); ++i)
        if (dc_buses[i].id == id) return static_cast<int>(i);
    return -1;
}

std::vector<int> Network::ac_islands() const {
    std::vector<int> label(ac_buses.size(), -1);
    std::vector<std::vector<int>> adj(ac_buses.size());
    auto link = [&](int a, int b) {
        int ia = ac_bus_index(a), ib = ac_bus_index(b);
        if (ia >= 0 && ib >= 0) {
            adj[ia].push_back(ib);
            adj[ib].push_back(ia);
        }
    };
    for (auto& br : ac_branches) link(br.from_bus, br.to_bus);
    for (auto& sw : switches)
        if (sw.side == Side::Ac) link(sw.from_bus, sw.to_bus);
    int next = 0;
    for (std::size_t s = 0; s < ac_buses.size(); ++s) {
        if (label[s] >= 0) continue;
        std::vector<int> stack{static_cast<int>(s)};
        label[s] = next;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int v : adj[u])
                if (label[v] < 0) {
                    label[v] = next;
                    stack.push_back(v);
                }
        }
        ++next;
    }
    return label;
}

void Network::finalize() {
    std::set<int> ac_ids, dc_ids, sw_ids;
    for (auto& b : ac_buses) {
        if (!ac_ids.insert(b.id).second)
            throw ValidationError("duplicate AC bus id " + std::to_string(b.id));
        if (!(b.vmin <= 1.0 && 1.0 <= b.vmax))
            throw ValidationError("AC bus " + std::to_string(b.id) +
                                  ": vmin <= 1 <= vmax violated");
        if (!(b.amin <= 0.0 && 0.0 <= b.amax))
            throw ValidationError("AC bus " + std::to_string(b.id) +
                                  ": amin <= 0 <= amax violated");
    }
    for (auto& b : dc_buses) {
        if (!dc_ids.insert(b.id).second)
            throw ValidationError("duplicate DC bus id " + std::to_string(b.id));
        if (!(b.vmin <= 1.0 && 1.0 <= b.vmax))
            throw ValidationError("DC bus " + std::to_string(b.id) +
                                  ": vmin <= 1 <= vmax violated");
    }
    auto need_ac = [&](int id, const std::string& what) {
        if (!ac_ids.count(id))
            throw ValidationError(what + " references missing AC bus " + std::to_string(id));
    };
    auto need_dc = [&](int id, const std::string& what) {
        if (!dc_ids.count(id))
            throw ValidationError(what + " references missing DC bus " + std::to_string(id));
    };
    for (auto& br : ac_branches) {
        need_ac(br.from_bus, "branch " + std::to_string(br.id));
        need_ac(br.to_bus, "branch " + std::to_string(br.id));
        if (!(br.p_max > 0))
            throw ValidationError("branch " + std::to_string(br.id) + ": p_max must be > 0");
        if (!(br.dtheta_max > 0 && br.dtheta_max < 1.5707963267948966))
            throw ValidationError("branch " + std::to_string(br.id) +
                                  ": dtheta_max outside (0, pi/2)");
    }
    for (auto& br : dc_branches) {
        need_dc(br.from_bus, "dc branch " + std::to_string(br.id));
        need_dc(br.to_bus, "dc branch " + std::to_string(br.id));
        if (br.poles != 1 && br.poles != 2)
            throw ValidationError("dc branch " + std::to_string(br.id) + ": poles must be 1 or 2");
        if (!(br.p_min <= 0 && 0 <= br.p_max))
            throw ValidationError("dc branch " + std::to_string(br.id) +
                                  ": p_min <= 0 <= p_max violated");
    }
    for (auto& c : converters) {
        need_ac(c.ac_bus, "converter " + std::to_string(c.id));
        need_dc(c.dc_bus, "converter " + std::to_string(c.id));
        if (!(c.s_max > 0))
            throw ValidationError("converter " + std::to_string(c.id) + ": s_max must be > 0");
        if (c.loss_a < 0 || c.loss_b < 0)
            throw ValidationError("converter " + std::to_string(c.id) + ": negative losses");
    }
    for (auto& g : generators) {
        need_ac(g.bus, "generator " + std::to_string(g.id));
        if (g.p_min > g.p_max)
            throw ValidationError("generator " + std::to_string(g.id) + ": p_min > p_max");
        if (g.c2 < 0)
            throw ValidationError("generator " + std::to_string(g.id) + ": c2 < 0 not convex");
    }
    for (auto& l : loads) need_ac(l.bus, "load " + std::to_string(l.id));
    std::map<int, int> couplers_per_bus;
    for (auto& sw : switches) {
        if (!sw_ids.insert(sw.id).second)
            throw ValidationError("duplicate switch id " + std::to_string(sw.id));
        if (sw.side == Side::Ac) {
            need_ac(sw.from_bus, "switch " + std::to_string(sw.id));
            need_ac(sw.to_bus, "switch " + std::to_string(sw.id));
        } else {
            need_dc(sw.from_bus, "switch " + std::to_string(sw.id));
            need_dc(sw.to_bus, "switch " + std::to_string(sw.id));
        }
        if (sw.kind == SwitchKind::Reconnection) {
            if (sw.partner_switch == 0 || sw.coupler_id == 0)
                throw ValidationError("reconnection switch " + std::to_string(sw.id) +
                                      " needs partner_switch and coupler_id");
        } else {
            ++couplers_per_bus[sw.from_bus];
        }
    }
    for (auto& sw : switches) {
        if (sw.kind != SwitchKind::Reconnection) continue;
        const Switch* partner = find_switch(sw.partner_switch);
        const Switch* coupler = find_switch(sw.coupler_id);
        if (!partner || !coupler)
            throw ValidationError("switch " + std::to_string(sw.id) +
                                  ": dangling partner or coupler reference");
        if (partner->partner_switch != sw.id)
            throw ValidationError("switch " + std::to_string(sw.id) +
                                  ": partner link not mutual");
        if (partner->from_bus != sw.from_bus)
            throw ValidationError("switch " + std::to_string(sw.id) +
                                  ": partner pair must share the element terminal");
        bool covers = (sw.to_bus == coupler->from_bus && partner->to_bus == coupler->to_bus) ||
                      (sw.to_bus == coupler->to_bus && partner->to_bus == coupler->from_bus);
        if (!covers)
            throw ValidationError("switch " + std::to_string(sw.id) +
                                  ": pair does not span the coupler's busbar halves");
    }
    for (auto& [bus, cnt] : couplers_per_bus) {
        if (cnt != 1)
            throw ValidationError("busbar " + std::to_string(bus) +
                                  " has " + std::to_string(cnt) + " couplers, expected 1");
    }
    // one reference per AC island
    if (!ac_buses.empty()) {
        auto isl = ac_islands();
        int n_isl = *std::max_element(isl.begin(), isl.end()) + 1;
        std::vector<int> refs(n_isl, 0);
        for (std::size_t i = 0; i < ac_buses.size(); ++i)
            if (ac_buses[i].is_reference) ++refs[isl[i]];
        for (int k = 0; k < n_isl; ++k)
            if (refs[k] != 1)
                throw ValidationError("AC island " + std::to_string(k) + " has " +
                                      std::to_string(refs[k]) + " reference buses, expected 1");
    }
    // big-M defaults: twice the widest feasible spread
    double aspread = 0.0, mspread = 0.0, dspread = 0.0;
    for (auto& b : ac_buses) {
        aspread = std::max(aspread, b.amax - b.amin);
        mspread = std::max(mspread, b.vmax - b.vmin);
    }
    for (auto& b : dc_buses) dspread = std::max(dspread, b.vmax - b.vmin);
    if (big_m_theta <= 0) big_m_theta = 2.0 * std::max(aspread, 0.1);
    if (big_m_phi <= 0) big_m_phi = 2.0 * std::max(mspread, 0.01);
    if (big_m_dc <= 0) big_m_dc = 2.0 * std::max(dspread, 0.01);
    if (big_m_theta < aspread || big_m_phi < mspread ||
        (!dc_buses.empty() && big_m_dc < dspread))
        throw ValidationError("big-M constants below the feasible spread");
}

// --------------------------------- parsing ---------------------------------

Network parse_case(const std::string& path) {
    CaseTables ct = read_case_tables(path);
    Network net;
    net.name = ct.name.empty() ? "case" : ct.name;
    net.base_mva = ct.base_mva;
    long double inv_b = 1.0L / static_cast<long double>(net.base_mva);
    long double b1 = static_cast<long double>(net.base_mva);
    long double b2 = b1 * b1;

    int next_load = 1;
    for (auto& row : ct.sections["bus"]) {
        require_cols(path, "bus", row, 13);
        AcBus bus;
        bus.id = static_cast<int>(row[0]);
        int type = static_cast<int>(row[1]);
        bus.is_reference = type == 3;
        bus.gs = row[4];
        bus.bs = row[5];
        bus.vm_init = row[7];
        bus.va_init = row[8] * M_PI / 180.0;
        bus.base_kv = row[9];
        bus.vmax = row[11];
        bus.vmin = row[12];
        bus.amin = -kDefaultAngleBound;
        bus.amax = kDefaultAngleBound;
        if (row.size() >= 15) { // optional amin/amax extension columns (rad)
            bus.amin = row[13];
            bus.amax = row[14];
        }
        net.ac_buses.push_back(bus);
        if (row[2] != 0.0 || row[3] != 0.0) {
            Load l;
            l.id = next_load++;
            l.bus = bus.id;
            l.p = scaled(row[2], inv_b);
            l.q = scaled(row[3], inv_b);
            net.loads.push_back(l);
        }
    }
    // gencost rows align with gen rows by position
    auto& gcost = ct.sections["gencost"];
    int gi = 0;
    for (auto& row : ct.sections["gen"]) {
        require_cols(path, "gen", row, 10);
        if (row.size() >= 8 && row[7] == 0.0) {
            ++gi;
            continue; // out of service
        }
        Generator g;
        g.id = static_cast<int>(net.generators.size()) + 1;
        g.bus = static_cast<int>(row[0]);
        g.pg_init = scaled(row[1], inv_b);
        g.qg_init = scaled(row[2], inv_b);
        g.q_max = scaled(row[3], inv_b);
        g.q_min = scaled(row[4], inv_b);
        g.vg = row[5];
        g.p_max = scaled(row[8], inv_b);
        g.p_min = scaled(row[9], inv_b);
        if (gi < static_cast<int>(gcost.size())) {
            auto& c = gcost[gi];
            require_cols(path, "gencost", c, 5);
            int model = static_cast<int>(c[0]);
            int ncost = static_cast<int>(c[3]);
            if (model != 2)
                throw ParseError(path, "gencost: only polynomial model 2 is supported");
            if (ncost == 3 && c.size() >= 7) {
                g.c2 = scaled(c[4], b2);
                g.c1 = scaled(c[5], b1);
                g.c0 = c[6];
            } else if (ncost == 2 && c.size() >= 6) {
                g.c1 = scaled(c[4], b1);
                g.c0 = c[5];
            } else {
                throw ParseError(path, "gencost: unsupported ncost");
            }
        }
        net.generators.push_back(g);
        ++gi;
    }
    int bid = 0;
    for (auto& row : ct.sections["branch"]) {
        require_cols(path, "branch", row, 13);
        ++bid;
        if (row[10] == 0.0) continue; // out of service
        AcBranch br;
        br.id = static_cast<int>(net.ac_branches.size()) + 1;
        br.from_bus = static_cast<int>(row[0]);
        br.to_bus = static_cast<int>(row[1]);
        br.r = row[2];
        br.x = row[3];
        br.b_charge = row[4];
        double z2 = br.r * br.r + br.x * br.x;
        if (z2 <= 0) throw ParseError(path, "branch with zero impedance");
        br.g = br.r / z2;
        br.b = -br.x / z2;
        br.g_s_f = br.g_s_t = 0.0;
        br.b_s_f = br.b_s_t = br.b_charge / 2.0;
        double rate = row[5];
        if (rate <= 0) rate = 10.0 * net.base_mva; // unlimited in MATPOWER terms
        br.p_max = scaled(rate, inv_b);
        br.q_max = br.p_max;
        br.tap = row[8] == 0.0 ? 1.0 : row[8];
        double angmin = row[11] * M_PI / 180.0, angmax = row[12] * M_PI / 180.0;
        double dt = std::min(-angmin, angmax);
        br.dtheta_max = (dt > 0 && dt < 1.5707) ? dt : kDefaultDthetaMax;
        net.ac_branches.push_back(br);
    }
    for (auto& row : ct.sections["busdc"]) {
        require_cols(path, "busdc", row, 3);
        DcBus b;
        b.id = static_cast<int>(row[0]);
        b.vmin = row[1];
        b.vmax = row[2];
        net.dc_buses.push_back(b);
    }
    for (auto& row : ct.sections["branchdc"]) {
        require_cols(path, "branchdc", row, 7);
        DcBranch b;
        b.id = static_cast<int>(row[0]);
        b.from_bus = static_cast<int>(row[1]);
        b.to_bus = static_cast<int>(row[2]);
        b.y = row[3];
        b.poles = static_cast<int>(row[4]);
        b.p_min = scaled(row[5], inv_b);
        b.p_max = scaled(row[6], inv_b);
        net.dc_branches.push_back(b);
    }
    for (auto& row : ct.sections["conv"]) {
        require_cols(path, "conv", row, 6);
        Converter c;
        c.id = static_cast<int>(row[0]);
        c.ac_bus = static_cast<int>(row[1]);
        c.dc_bus = static_cast<int>(row[2]);
        c.s_max = scaled(row[3], inv_b);
        c.loss_a = scaled(row[4], inv_b);
        c.loss_b = row[5];
        net.converters.push_back(c);
    }
    for (auto& row : ct.sections["switch"]) {
        require_cols(path, "switch", row, 11);
        Switch s;
        s.id = static_cast<int>(row[0]);
        s.side = row[1] == 0.0 ? Side::Ac : Side::Dc;
        s.from_bus = static_cast<int>(row[2]);
        s.to_bus = static_cast<int>(row[3]);
        s.kind = row[4] == 0.0 ? SwitchKind::Coupler : SwitchKind::Reconnection;
        s.partner_switch = static_cast<int>(row[5]);
        s.coupler_id = static_cast<int>(row[6]);
        s.p_min = scaled(row[7], inv_b);
        s.p_max = scaled(row[8], inv_b);
        s.q_min = scaled(row[9], inv_b);
        s.q_max = scaled(row[10], inv_b);
        net.switches.push_back(s);
    }
    for (auto& row : ct.sections["genext"]) {
        require_cols(path, "genext", row, 3);
        int id = static_cast<int>(row[0]);
        bool found = false;
        for (auto& g : net.generators) {
            if (g.id == id) {
                g.is_wind = row[1] != 0.0;
                g.is_slack_recourse = row[2] != 0.0;
                found = true;
            }
        }
        if (!found) throw ParseError(path, "genext references missing generator");
    }
    // auxiliary/terminal markers for split networks saved to file
    for (auto& row : ct.sections["busext"]) {
        require_cols(path, "busext", row, 4);
        int id = static_cast<int>(row[0]);
        bool dc = row[1] != 0.0;
        if (!dc) {
            int i = net.ac_bus_index(id);
            if (i < 0) throw ParseError(path, "busext references missing AC bus");
            net.ac_buses[i].is_auxiliary = row[2] != 0.0;
            net.ac_buses[i].is_terminal = row[3] != 0.0;
        } else {
            int i = net.dc_bus_index(id);
            if (i < 0) throw ParseError(path, "busext references missing DC bus");
            net.dc_buses[i].is_auxiliary = row[2] != 0.0;
            net.dc_buses[i].is_terminal = row[3] != 0.0;
        }
    }
    net.finalize();
    return net;
}

void serialize_case(const Network& net, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ParseError(path, "cannot open for writing");
    long double inv_b = 1.0L / static_cast<long double>(net.base_mva);
    long double b1 = static_cast<long double>(net.base_mva);
    long double b2 = b1 * b1;
    auto mw = [&](double pu) { return format_double(inverse_scaled(pu, inv_b)); };
    auto fd = [](double v) { return format_double(v); };

    f << "function mpc = " << (net.name.empty() ? "case" : net.name) << "\n";
    f << "mpc.version = '2';\n";
    f << "mpc.baseMVA = " << fd(net.base_mva) << ";\n";

    f << "%% bus_i type Pd Qd Gs Bs area Vm Va baseKV zone Vmax Vmin amin amax\n";
    f << "mpc.bus = [\n";
    for (auto& b : net.ac_buses) {
        double pd = 0.0, qd = 0.0;
        for (auto& l : net.loads)
            if (l.bus == b.id) {
                pd += l.p;
                qd += l.q;
            }
        f << "\t" << b.id << "\t" << (b.is_reference ? 3 : 1) << "\t" << mw(pd) << "\t"
          << mw(qd) << "\t" << fd(b.gs) << "\t" << fd(b.bs) << "\t1\t" << fd(b.vm_init)
          << "\t" << fd(b.va_init * 180.0 / M_PI) << "\t" << fd(b.base_kv) << "\t1\t"
          << fd(b.vmax) << "\t" << fd(b.vmin) << "\t" << fd(b.amin) << "\t" << fd(b.amax)
          << ";\n";
    }
    f << "];\n";

    f << "%% bus Pg Qg Qmax Qmin Vg mBase status Pmax Pmin\n";
    f << "mpc.gen = [\n";
    for (auto& g : net.generators) {
        f << "\t" << g.bus << "\t" << mw(g.pg_init) << "\t" << mw(g.qg_init) << "\t"
          << mw(g.q_max) << "\t" << mw(g.q_min) << "\t" << fd(g.vg) << "\t"
          << fd(net.base_mva) << "\t1\t" << mw(g.p_max) << "\t" << mw(g.p_min) << ";\n";
    }
    f << "];\n";

    f << "%% fbus tbus r x b rateA rateB rateC ratio angle status angmin angmax\n";
    f << "mpc.branch = [\n";
    for (auto& br : net.ac_branches) {
        double ang = br.dtheta_max * 180.0 / M_PI;
        f << "\t" << br.from_bus << "\t" << br.to_bus << "\t" << fd(br.r) << "\t" << fd(br.x)
          << "\t" << fd(br.b_charge) << "\t" << mw(br.p_max) << "\t0\t0\t"
          << (br.tap == 1.0 ? "0" : fd(br.tap)) << "\t0\t1\t" << fd(-ang) << "\t" << fd(ang)
          << ";\n";
    }
    f << "];\n";

    f << "%% model startup shutdown n c2 c1 c0\n";
    f << "mpc.gencost = [\n";
    for (auto& g : net.generators) {
        f << "\t2\t0\t0\t3\t" << fd(inverse_scaled(g.c2, b2)) << "\t"
          << fd(inverse_scaled(g.c1, b1)) << "\t" << fd(g.c0) << ";\n";
    }
    f << "];\n";

    if (!net.dc_buses.empty()) {
        f << "%% id vmin vmax\n";
        f << "mpc.busdc = [\n";
        for (auto& b : net.dc_buses)
            f << "\t" << b.id << "\t" << fd(b.vmin) << "\t" << fd(b.vmax) << ";\n";
        f << "];\n";
    }
    if (!net.dc_branches.empty()) {
        f << "%% id f t y poles pmin pmax\n";
        f << "mpc.branchdc = [\n";
        for (auto& b : net.dc_branches)
            f << "\t" << b.id << "\t" << b.from_bus << "\t" << b.to_bus << "\t" << fd(b.y)
              << "\t" << b.poles << "\t" << mw(b.p_min) << "\t" << mw(b.p_max) << ";\n";
        f << "];\n";
    }
    if (!net.converters.empty()) {
        f << "%% id acbus dcbus smax loss_a loss_b\n";
        f << "mpc.conv = [\n";
        for (auto& c : net.converters)
            f << "\t" << c.id << "\t" << c.ac_bus << "\t" << c.dc_bus << "\t" << mw(c.s_max)
              << "\t" << mw(c.loss_a) << "\t" << fd(c.loss_b) << ";\n";
        f << "];\n";
    }
    if (!net.switches.empty()) {
        f << "%% id side f t kind partner coupler pmin pmax qmin qmax\n";
        f << "mpc.switch = [\n";
        for (auto& s : net.switches)
            f << "\t" << s.id << "\t" << (s.side == Side::Ac ? 0 : 1) << "\t" << s.from_bus
              << "\t" << s.to_bus << "\t" << (s.kind == SwitchKind::Coupler ? 0 : 1) << "\t"
              << s.partner_switch << "\t" << s.coupler_id << "\t" << mw(s.p_min) << "\t"
              << mw(s.p_max) << "\t" << mw(s.q_min) << "\t" << mw(s.q_max) << ";\n";
        f << "];\n";
    }
    bool any_ext = false;
    for (auto& g : net.generators)
        if (g.is_wind || g.is_slack_recourse) any_ext = true;
    if (any_ext) {
        f << "%% genid is_wind is_slack_recourse\n";
        f << "mpc.genext = [\n";
        for (auto& g : net.generators)
            if (g.is_wind || g.is_slack_recourse)
                f << "\t" << g.id << "\t" << (g.is_wind ? 1 : 0) << "\t"
                  << (g.is_slack_recourse ? 1 : 0) << ";\n";
        f << "];\n";
    }
    bool any_bext = false;
    for (auto& b : net.ac_buses)
        if (b.is_auxiliary || b.is_terminal) any_bext = true;
    for (auto& b : net.dc_buses)
        if (b.is_auxiliary || b.is_terminal) any_bext = true;
    if (any_bext) {
        f << "%% busid is_dc is_auxiliary is_terminal\n";
        f << "mpc.busext = [\n";
        for (auto& b : net.ac_buses)
            if (b.is_auxiliary || b.is_terminal)
                f << "\t" << b.id << "\t0\t" << (b.is_auxiliary ? 1 : 0) << "\t"
                  << (b.is_terminal ? 1 : 0) << ";\n";
        for (auto& b : net.dc_buses)
            if (b.is_auxiliary || b.is_terminal)
                f << "\t" << b.id << "\t1\t" << (b.is_auxiliary ? 1 : 0) << "\t"
                  << (b.is_terminal ? 1 : 0) << ";\n";
        f << "];\n";
    }
}

// ------------------------------- augmentation -------------------------------

namespace {

int max_ac_id(const Network& n) {
    int m = 0;
    for (auto& b : n.ac_buses) m = std::max(m, b.id);
    return m;
}
int max_dc_id(const Network& n) {
    int m = 0;
    for (auto& b : n.dc_buses) m = std::max(m, b.id);
    return m;
}
int max_switch_id(const Network& n) {
    int m = 0;
    for (auto& s : n.switches) m = std::max(m, s.id);
    return m;
}

} // namespace

Network augment_for_splitting(const Network& net, const std::vector<int>& busbar_ids) {
    std::vector<BusRef> refs;
    for (int id : busbar_ids) {
        bool ac = net.find_ac_bus(id) != nullptr;
        bool dc = net.find_dc_bus(id) != nullptr;
        if (ac && dc)
            throw ValidationError("bus id " + std::to_string(id) +
                                  " exists on both sides; use an explicit side");
        if (!ac && !dc)
            throw ValidationError("bus id " + std::to_string(id) + " does not exist");
        refs.push_back(BusRef{ac ? Side::Ac : Side::Dc, id});
    }
    return augment_for_splitting(net, refs);
}

Network augment_for_splitting(const Network& net, const std::vector<BusRef>& busbars) {
    Network out = net;
    int next_ac = max_ac_id(out) + 1;
    int next_dc = max_dc_id(out) + 1;
    int next_sw = max_switch_id(out) + 1;

    for (const BusRef& ref : busbars) {
        if (ref.side == Side::Ac) {
            int bi = out.ac_bus_index(ref.id);
            if (bi < 0)
                throw ValidationError("AC bus " + std::to_string(ref.id) + " does not exist");
            AcBus orig = out.ac_buses[bi];
            if (orig.is_auxiliary || orig.is_terminal)
                throw ValidationError("bus " + std::to_string(ref.id) +
                                      " is a splitting artifact; refusing to split again");
            if (orig.is_reference) {
                auto isl = out.ac_islands();
                int island = isl[bi];
                int other_refs = 0;
                for (std::size_t k = 0; k < out.ac_buses.size(); ++k)
                    if (isl[k] == island && out.ac_buses[k].is_reference &&
                        out.ac_buses[k].id != orig.id)
                        ++other_refs;
                if (other_refs == 0)
                    throw ValidationError(
                        "cannot split reference bus " + std::to_string(ref.id) +
                        " without another reference in the island");
            }

            AcBus aux = orig;
            aux.id = next_ac++;
            aux.is_reference = false;
            aux.is_auxiliary = true;
            aux.vm_init = orig.vm_init;
            out.ac_buses.push_back(aux);

            Switch coupler;
            coupler.id = next_sw++;
            coupler.side = Side::Ac;
            coupler.from_bus = orig.id;
            coupler.to_bus = aux.id;
            coupler.kind = SwitchKind::Coupler;

            double cap_p = 0.0, cap_q = 0.0;
            // gather incident elements: (branch ends, generators, loads,
            // converters, pre-existing switches)
            struct Elem {
                double p_cap, q_cap;
                std::function<void(Network&, int)> rewire; // move endpoint to terminal
            };
            std::vector<Elem> elems;
            for (std::size_t k = 0; k < out.ac_branches.size(); ++k) {
                auto& br = out.ac_branches[k];
                if (br.from_bus == orig.id)
                    elems.push_back({br.p_max, br.q_max,
                                     [k](Network& n, int t) { n.ac_branches[k].from_bus = t; }});
                if (br.to_bus == orig.id)
                    elems.push_back({br.p_max, br.q_max,
                                     [k](Network& n, int t) { n.ac_branches[k].to_bus = t; }});
            }
            for (std::size_t k = 0; k < out.generators.size(); ++k) {
                if (out.generators[k].bus == orig.id) {
                    auto& g = out.generators[k];
                    double qc = std::max(std::abs(g.q_min), std::abs(g.q_max));
                    elems.push_back({std::max(std::abs(g.p_min), std::abs(g.p_max)), qc,
                                     [k](Network& n, int t) { n.generators[k].bus = t; }});
                }
            }
            for (std::size_t k = 0; k < out.loads.size(); ++k) {
                if (out.loads[k].bus == orig.id) {
                    auto& l = out.loads[k];
                    elems.push_back({std::abs(l.p), std::abs(l.q),
                                     [k](Network& n, int t) { n.loads[k].bus = t; }});
                }
            }
            for (std::size_t k = 0; k < out.converters.size(); ++k) {
                if (out.converters[k].ac_bus == orig.id) {
                    double s = out.converters[k].s_max;
                    elems.push_back({s, s,
                                     [k](Network& n, int t) { n.converters[k].ac_bus = t; }});
                }
            }
            for (std::size_t k = 0; k < out.switches.size(); ++k) {
                auto& sw = out.switches[k];
                if (sw.side != Side::Ac || sw.id == coupler.id) continue;
                if (sw.from_bus == orig.id)
                    elems.push_back({std::max(std::abs(sw.p_min), std::abs(sw.p_max)),
                                     std::max(std::abs(sw.q_min), std::abs(sw.q_max)),
                                     [k](Network& n, int t) { n.switches[k].from_bus = t; }});
                else if (sw.to_bus == orig.id)
                    elems.push_back({std::max(std::abs(sw.p_min), std::abs(sw.p_max)),
                                     std::max(std::abs(sw.q_min), std::abs(sw.q_max)),
                                     [k](Network& n, int t) { n.switches[k].to_bus = t; }});
            }

            for (auto& e : elems) {
                cap_p += e.p_cap;
                cap_q += e.q_cap;
            }
            coupler.p_max = cap_p;
            coupler.p_min = -cap_p;
            coupler.q_max = cap_q;
            coupler.q_min = -cap_q;
            out.switches.push_back(coupler);

            for (auto& e : elems) {
                AcBus term = orig;
                term.id = next_ac++;
                term.is_reference = false;
                term.is_auxiliary = false;
                term.is_terminal = true;
                out.ac_buses.push_back(term);
                e.rewire(out, term.id);

                Switch to_orig;
                to_orig.id = next_sw++;
                Switch to_aux;
                to_aux.id = next_sw++;
                to_orig.side = to_aux.side = Side::Ac;
                to_orig.kind = to_aux.kind = SwitchKind::Reconnection;
                to_orig.from_bus = to_aux.from_bus = term.id;
                to_orig.to_bus = orig.id;
                to_aux.to_bus = aux.id;
                to_orig.partner_switch = to_aux.id;
                to_aux.partner_switch = to_orig.id;
                to_orig.coupler_id = to_aux.coupler_id = coupler.id;
                to_orig.p_max = to_aux.p_max = e.p_cap;
                to_orig.p_min = to_aux.p_min = -e.p_cap;
                to_orig.q_max = to_aux.q_max = e.q_cap;
                to_orig.q_min = to_aux.q_min = -e.q_cap;
                out.switches.push_back(to_orig);
                out.switches.push_back(to_aux);
            }
        } else {
            int bi = out.dc_bus_index(ref.id);
            if (bi < 0)
                throw ValidationError("DC bus " + std::to_string(ref.id) + " does not exist");
            DcBus orig = out.dc_buses[bi];
            if (orig.is_auxiliary || orig.is_terminal)
                throw ValidationError("bus " + std::to_string(ref.id) +
                                      " is a splitting artifact; refusing to split again");
            DcBus aux = orig;
            aux.id = next_dc++;
            aux.is_auxiliary = true;
            out.dc_buses.push_back(aux);

            Switch coupler;
            coupler.id = next_sw++;
            coupler.side = Side::Dc;
            coupler.from_bus = orig.id;
            coupler.to_bus = aux.id;
            coupler.kind = SwitchKind::Coupler;

            struct Elem {
                double p_cap;
                std::function<void(Network&, int)> rewire;
            };
            std::vector<Elem> elems;
            for (std::size_t k = 0; k < out.dc_branches.size(); ++k) {
                auto& br = out.dc_branches[k];
                if (br.from_bus == orig.id)
                    elems.push_back({std::max(std::abs(br.p_min), br.p_max),
                                     [k](Network& n, int t) { n.dc_branches[k].from_bus = t; }});
                if (br.to_bus == orig.id)
                    elems.push_back({std::max(std::abs(br.p_min), br.p_max),
                                     [k](Network& n, int t) { n.dc_branches[k].to_bus = t; }});
            }
            for (std::size_t k = 0; k < out.converters.size(); ++k) {
                if (out.converters[k].dc_bus == orig.id) {
                    elems.push_back({out.converters[k].s_max,
                                     [k](Network& n, int t) { n.converters[k].dc_bus = t; }});
                }
            }
            for (std::size_t k = 0; k < out.switches.size(); ++k) {
                auto& sw = out.switches[k];
                if (sw.side != Side::Dc || sw.id == coupler.id) continue;
                if (sw.from_bus == orig.id)
                    elems.push_back({std::max(std::abs(sw.p_min), sw.p_max),
                                     [k](Network& n, int t) { n.switches[k].from_bus = t; }});
                else if (sw.to_bus == orig.id)
                    elems.push_back({std::max(std::abs(sw.p_min), sw.p_max),
                                     [k](Network& n, int t) { n.switches[k].to_bus = t; }});
            }
            double cap = 0.0;
            for (auto& e : elems) cap += e.p_cap;
            coupler.p_max = cap;
            coupler.p_min = -cap;
            out.switches.push_back(coupler);

            for (auto& e : elems) {
                DcBus term = orig;
                term.id = next_dc++;
                term.is_auxiliary = false;
                term.is_terminal = true;
                out.dc_buses.push_back(term);
                e.rewire(out, term.id);

                Switch to_orig, to_aux;
                to_orig.id = next_sw++;
                to_aux.id = next_sw++;
                to_orig.side = to_aux.side = Side::Dc;
                to_orig.kind = to_aux.kind = SwitchKind::Reconnection;
                to_orig.from_bus = to_aux.from_bus = term.id;
                to_orig.to_bus = orig.id;
                to_aux.to_bus = aux.id;
                to_orig.partner_switch = to_aux.id;
                to_aux.partner_switch = to_orig.id;
                to_orig.coupler_id = to_aux.coupler_id = coupler.id;
                to_orig.p_max = to_aux.p_max = e.p_cap;
                to_orig.p_min = to_aux.p_min = -e.p_cap;
                out.switches.push_back(to_orig);
                out.switches.push_back(to_aux);
            }
        }
    }
    out.finalize();
    return out;
}

Network add_slack_recourse(const Network& net, double cost_multiplier) {
    if (!(cost_multiplier > 1.0))
        throw ValidationError("slack recourse cost multiplier must exceed 1");
    Network out = net;
    double cmax = 0.0;
    for (auto& g : out.generators) cmax = std::max(cmax, g.c1);
    if (cmax == 0.0) cmax = 1.0;
    int next_id = 0;
    for (auto& g : out.generators) next_id = std::max(next_id, g.id);
    for (auto& b : net.ac_buses) {
        if (b.is_auxiliary || b.is_terminal) continue;
        double pd = 0.0, qd = 0.0;
        for (auto& l : net.loads)
            if (l.bus == b.id) {
                pd += l.p;
                qd += l.q;
            }
        Generator s;
        s.id = ++next_id;
        s.bus = b.id;
        s.p_min = std::min(0.0, pd);
        s.p_max = std::max(0.0, pd);
        s.q_min = std::min(0.0, qd);
        s.q_max = std::max(0.0, qd);
        s.c1 = cost_multiplier * cmax;
        s.is_slack_recourse = true;
        out.generators.push_back(s);
    }
    if (!out.ac_buses.empty()) out.finalize();
    return out;
}

void mark_wind(Network& net, const std::vector<int>& gen_ids) {
    for (int id : gen_ids) {
        bool found = false;
        for (auto& g : net.generators)
            if (g.id == id) {
                g.is_wind = true;
                found = true;
            }
        if (!found)
            throw ValidationError("wind marker references missing generator " +
                                  std::to_string(id));
    }
}

Network prepare_congested_case(const Network& net, const CongestionMods& mods) {
    Network out = net;
    for (auto& g : out.generators) {
        if (g.is_slack_recourse) continue;
        if (std::isfinite(mods.wind_cost_threshold) && g.c1 < mods.wind_cost_threshold)
            g.is_wind = true;
        g.c1 *= mods.cost_uplift;
        g.c2 = 0.0;
        g.c0 = 0.0;
    }
    for (auto& l : out.loads)
        if (l.p > mods.load_threshold) {
            l.p *= mods.load_uplift;
            l.q *= mods.load_uplift;
        }
    out.finalize();
    return out;
}

} // namespace gridtopo::net
