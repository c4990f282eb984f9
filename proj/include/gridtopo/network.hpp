#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gridtopo/common.hpp"

namespace gridtopo::net {

enum class Side : char { Ac = 'a', Dc = 'd' };
enum class SwitchKind : char { Coupler = 'z', Reconnection = 'r' };

struct AcBus {
    int id = 0;
    double vmin = 0.95, vmax = 1.05; // p.u. magnitude
    double amin = -1.2, amax = 1.2;  // rad
    bool is_reference = false;
    bool is_auxiliary = false; // split-off busbar half
    bool is_terminal = false;  // private element terminal created by splitting
    // carried from the case file for round-trips and power-flow checks
    double vm_init = 1.0, va_init = 0.0;
    double base_kv = 0.0;
    double gs = 0.0, bs = 0.0; // file columns; shunts are not modeled
};

struct DcBus {
    int id = 0;
    double vmin = 0.9, vmax = 1.1;
    bool is_auxiliary = false;
    bool is_terminal = false;
};

struct AcBranch {
    int id = 0;
    int from_bus = 0, to_bus = 0;
    double g = 0.0, b = 0.0;           // series admittance (p.u.)
    double g_s_f = 0.0, b_s_f = 0.0;   // shunt at from end
    double g_s_t = 0.0, b_s_t = 0.0;   // shunt at to end
    double p_max = 0.0, q_max = 0.0;   // p.u. flow limits
    double dtheta_max = 0.5236;        // rad
    double tap = 1.0;                  // fixed off-nominal ratio at the from end
    // raw impedances for Ybus assembly and serialization
    double r = 0.0, x = 0.0, b_charge = 0.0;

    /// LPAC flow constants for one direction: P = (g_lead)(1+2 phi_i)
    /// - g_series (cs + phi_i + phi_j) - b_series (th_i - th_j), and the
    /// reactive twin with signs flipped.
    struct DirParams {
        double g_lead, b_lead, g_series, b_series;
    };
    DirParams dir(bool from_side) const {
        double t2 = tap * tap;
        if (from_side)
            return {(g + g_s_f) / t2, (b + b_s_f) / t2, g / tap, b / tap};
        return {g + g_s_t, b + b_s_t, g / tap, b / tap};
    }
};

struct DcBranch {
    int id = 0;
    int from_bus = 0, to_bus = 0;
    double y = 0.0; // conductance, p.u.
    int poles = 2;
    double p_min = 0.0, p_max = 0.0;
};

struct Switch {
    int id = 0;
    Side side = Side::Ac;
    int from_bus = 0, to_bus = 0;
    SwitchKind kind = SwitchKind::Coupler;
    int partner_switch = 0; // 0 = none
    int coupler_id = 0;     // 0 = none
    double p_min = 0.0, p_max = 0.0;
    double q_min = 0.0, q_max = 0.0;
};

struct Converter {
    int id = 0;
    int ac_bus = 0, dc_bus = 0;
    double s_max = 0.0;
    double loss_a = 0.0, loss_b = 0.0;
};

struct Generator {
    int id = 0;
    int bus = 0;
    double p_min = 0.0, p_max = 0.0;
    double q_min = 0.0, q_max = 0.0;
    double c2 = 0.0, c1 = 0.0, c0 = 0.0; // cost on per-unit power
    bool is_wind = false;
    bool is_slack_recourse = false;
    double vg = 1.0;
    double pg_init = 0.0, qg_init = 0.0; // stored dispatch from the case file
};

struct Load {
    int id = 0;
    int bus = 0;
    double p = 0.0, q = 0.0; // p.u. demand
};

struct BusRef {
    Side side = Side::Ac;
    int id = 0;
};

/// Immutable after construction; all quantities per-unit on base_mva.
struct Network {
    std::string name;
    double base_mva = 100.0;
    std::vector<AcBus> ac_buses;
    std::vector<DcBus> dc_buses;
    std::vector<AcBranch> ac_branches;
    std::vector<DcBranch> dc_branches;
    std::vector<Switch> switches;
    std::vector<Converter> converters;
    std::vector<Generator> generators;
    std::vector<Load> loads;
    double big_m_theta = 0.0; // 0 = derive defaults in validate()
    double big_m_phi = 0.0;
    double big_m_dc = 0.0;

    const AcBus* find_ac_bus(int id) const;
    const DcBus* find_dc_bus(int id) const;
    const Switch* find_switch(int id) const;
    int ac_bus_index(int id) const;   // -1 if absent
    int dc_bus_index(int id) const;

    /// Fills big-M defaults and checks every invariant; throws ValidationError.
    void finalize();

    /// AC island labels over the fully-closed topology, indexed like ac_buses.
    std::vector<int> ac_islands() const;
};

Network parse_case(const std::string& path);
void serialize_case(const Network& net, const std::string& path);

/// Splits the given busbars: one auxiliary half + coupler per busbar, one
/// terminal node and a reconnection-switch pair per incident element.
Network augment_for_splitting(const Network& net, const std::vector<BusRef>& busbars);
Network augment_for_splitting(const Network& net, const std::vector<int>& busbar_ids);

/// One curtailment-surrogate generator per (non-splitting-artifact) AC bus,
/// priced at cost_multiplier times the most expensive linear coefficient.
Network add_slack_recourse(const Network& net, double cost_multiplier);

void mark_wind(Network& net, const std::vector<int>& gen_ids);

struct CongestionMods {
    double cost_uplift = 1.3;     // keep only the linear cost term, scaled
    double load_threshold = 2.0;  // p.u.
    double load_uplift = 1.2;
    double wind_cost_threshold = kInf; // mark gens with c1 below this as wind
};
/// The scripted test-case modifier: linear-only uplifted costs, uplifted
/// large loads, optional wind marking by cost.
Network prepare_congested_case(const Network& net, const CongestionMods& mods);

} // namespace gridtopo::net
