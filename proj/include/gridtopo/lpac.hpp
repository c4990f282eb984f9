#pragma once

#include <string>
#include <vector>

#include "gridtopo/mip.hpp"
#include "gridtopo/network.hpp"
#include "gridtopo/scenario.hpp"

namespace gridtopo::lpac {

enum class Mode { PlainOPF, HourlyBS, OneTopology, LimitedActions };

struct ModelConfig {
    Mode mode = Mode::HourlyBS;
    int horizon = 0;      // 0: take the scenario set's horizon
    int s_max = 0;        // LimitedActions budget, AC slots
    int s_dc_max = 0;     // LimitedActions budget, DC slots
    bool allow_ots = true;   // exclusivity pairs as <= 1 (true) or == 1 (false)
    double switch_cost = 0.0; // charged per closed coupler binary and timestep
    int cosine_cuts = 3;     // tangent magnitudes in [0, dtheta_max]
    int cost_segments = 3;
    double gap = 1e-3;

    void validate() const;
};

/// Variable index maps into the built instance. Binary switch variables are
/// indexed by (switch, t) only; every scenario shares them.
struct VariableLayout {
    int T = 0, W = 0;
    int n_bus = 0, n_dcbus = 0, n_branch = 0, n_dcbranch = 0, n_gen = 0, n_conv = 0,
        n_sw = 0;

    // per (t, w) blocks; index helpers below
    std::vector<int> theta, phi;          // [bus, w, t]
    std::vector<int> cs;                  // [branch, w, t]
    std::vector<int> p_flow, q_flow;      // [dir(2), branch, w, t]
    std::vector<int> pg, qg, pwl_y;       // [gen, w, t]; pwl_y -1 when cost is linear
    std::vector<int> conv_p_ac, conv_q_ac, conv_p_dc, conv_i; // [conv, w, t]
    std::vector<int> phi_dc;              // [dcbus, w, t]
    std::vector<int> p_dcflow;            // [dir(2), dcbranch, w, t]
    std::vector<int> sw_p, sw_q;          // [sw, w, t]; sw_q -1 on DC side
    std::vector<int> z;                   // [sw, t]
    std::vector<int> slot_ac, slot_dc;    // [t], -1 outside LimitedActions

    int at(const std::vector<int>& v, int item, int n_items, int w, int t) const {
        return v[(static_cast<std::size_t>(t) * W + w) * n_items + item];
    }
    int theta_i(int bus, int w, int t) const { return at(theta, bus, n_bus, w, t); }
    int phi_i(int bus, int w, int t) const { return at(phi, bus, n_bus, w, t); }
    int cs_i(int br, int w, int t) const { return at(cs, br, n_branch, w, t); }
    int pflow_i(int br, bool from, int w, int t) const {
        return at(p_flow, br * 2 + (from ? 0 : 1), n_branch * 2, w, t);
    }
    int qflow_i(int br, bool from, int w, int t) const {
        return at(q_flow, br * 2 + (from ? 0 : 1), n_branch * 2, w, t);
    }
    int pg_i(int g, int w, int t) const { return at(pg, g, n_gen, w, t); }
    int qg_i(int g, int w, int t) const { return at(qg, g, n_gen, w, t); }
    int pwl_i(int g, int w, int t) const { return at(pwl_y, g, n_gen, w, t); }
    int conv_pac_i(int c, int w, int t) const { return at(conv_p_ac, c, n_conv, w, t); }
    int conv_qac_i(int c, int w, int t) const { return at(conv_q_ac, c, n_conv, w, t); }
    int conv_pdc_i(int c, int w, int t) const { return at(conv_p_dc, c, n_conv, w, t); }
    int conv_i_i(int c, int w, int t) const { return at(conv_i, c, n_conv, w, t); }
    int phidc_i(int b, int w, int t) const { return at(phi_dc, b, n_dcbus, w, t); }
    int pdcflow_i(int br, bool from, int w, int t) const {
        return at(p_dcflow, br * 2 + (from ? 0 : 1), n_dcbranch * 2, w, t);
    }
    int swp_i(int s, int w, int t) const { return at(sw_p, s, n_sw, w, t); }
    int swq_i(int s, int w, int t) const { return at(sw_q, s, n_sw, w, t); }
    int z_i(int s, int t) const { return z[static_cast<std::size_t>(t) * n_sw + s]; }
};

struct BuildResult {
    mip::MipInstance inst;
    VariableLayout layout;
    /// Exact worst-case objective over-estimate of the piecewise-linear cost
    /// vs the quadratic, summed over generators and timesteps.
    double pwl_bound = 0.0;
};

/// Generates every Model 1 constraint (plus the requested Model 2 rows) over
/// the network, scenario set and horizon.
BuildResult build(const net::Network& net, const scen::ScenarioSet& scen,
                  const ModelConfig& cfg);

/// Tangent cuts for cs <= 1 - kappa dtheta^2, kappa = (1 - cos d)/d^2, placed
/// at n equally spaced magnitudes in [0, dtheta_max] mirrored to both signs
/// (2n-1 cuts). Each cut reads cs + coef_x * (th_i - th_j) <= rhs.
struct CosCut {
    double coef_x, rhs;
};
std::vector<CosCut> cosine_cuts(double dtheta_max, int n);

/// Secant epigraph of c2 p^2 + c1 p + c0 on [p_min, p_max]: y >= slope p +
/// intercept per segment, tight at the breakpoints; over-estimate is at most
/// c2 ((p_max - p_min)/segments)^2 / 4.
struct PwlLine {
    double slope, intercept;
};
std::vector<PwlLine> pwl_cost(double c2, double c1, double c0, double p_min, double p_max,
                              int segments);

/// Per-timestep open/closed status of every switch.
struct TopologyPlan {
    std::vector<int> switch_ids;
    std::vector<std::vector<bool>> closed; // [t][sw position]
    double integrality_residual = 0.0;

    bool closed_at(int sw_pos, int t) const { return closed[t][sw_pos]; }
    int position_of(int switch_id) const;
    /// Number of hours with at least one status change (slot accounting),
    /// counted per side.
    int change_hours(const net::Network& net, net::Side side) const;
    int total_changes() const;
    bool identical_over_time() const;
};

/// Rounds the binaries at threshold 0.5; values inside (0.1, 0.9) raise a
/// ValidationError.
TopologyPlan extract_topology(const mip::MipSolution& sol, const net::Network& net,
                              const VariableLayout& layout);

/// All-closed (original topology) plan over T steps.
TopologyPlan original_topology(const net::Network& net, int T);

/// Switch-physics audit of a solved instance: closed switches tie their
/// endpoint angles/magnitudes, open ones carry no flow, exclusivity and
/// coupler implications hold, action budgets are respected.
struct SwitchAudit {
    double max_closed_theta_gap = 0.0;
    double max_closed_phi_gap = 0.0;
    double max_open_flow = 0.0;
    bool exclusivity_ok = true;
    bool implication_ok = true;
    bool z_uniform_over_scenarios = true;
    int change_hours_ac = 0;
    int change_hours_dc = 0;
};
SwitchAudit audit_solution(const net::Network& net, const VariableLayout& layout,
                           const mip::MipSolution& sol, const ModelConfig& cfg);

} // namespace gridtopo::lpac
