#pragma once

#include <string>
#include <vector>

#include "gridtopo/lpac.hpp"
#include "gridtopo/network.hpp"

namespace gridtopo::acpf {

/// Generator (and converter) setpoints, indexed like net.generators /
/// net.converters.
struct Dispatch {
    std::vector<double> pg, qg;
    std::vector<double> conv_p_ac, conv_q_ac; // AC-side draw per converter
};

/// Exact operating point from a Newton solve.
struct AcState {
    bool converged = false;
    double max_mismatch = kInf;
    int iterations = 0;
    std::vector<double> vm, va;   // per AC bus (aux/terminal included, merged)
    std::vector<double> vdc;      // per DC bus
    std::vector<double> p_from, q_from, p_to, q_to; // per AC branch
    std::vector<double> p_dc_from, p_dc_to;         // per DC branch
    std::vector<double> conv_p_dc;                  // DC-side injection
    double slack_p = 0.0, slack_q = 0.0;            // residual at the slack node
};

struct Violation {
    std::string element;
    std::string quantity;
    double amount; // positive overshoot beyond the limit
};

struct FeasibilityReport {
    bool converged = false;
    double max_mismatch = kInf;
    std::vector<Violation> violations;
    double generation_cost = 0.0; // exact quadratic cost at the final dispatch
    int iterations = 0;
};

struct DispatchResult {
    Dispatch dispatch;
    AcState state;
    double generation_cost = 0.0;
    double redispatch_cost = 0.0;
    bool feasible = false;
    std::vector<Violation> violations;
};

/// Exact AC (and DC, through converter coupling) power flow at timestep t of
/// the plan. Closed switches merge their endpoints, open switches disappear;
/// branches with a de-energized end are out of service. Every energized
/// island needs a generator; the reference is the marked bus when present,
/// else the largest generator bus. Throws ValidationError when a load ends up
/// in an island without generation.
AcState newton_pf(const net::Network& net, const lpac::TopologyPlan& plan, int t,
                  const Dispatch& dispatch, bool hold_voltage_setpoints = false);

/// Continuous OPF under the fixed plan by successive linearization around
/// Newton states: solve an LP on generator setpoints using Jacobian
/// sensitivities, re-run the power flow at the LP dispatch, repeat until the
/// dispatch settles below 1e-6 p.u. or 20 iterations.
std::pair<Dispatch, FeasibilityReport> feasibility_opf(const net::Network& net,
                                                       const lpac::TopologyPlan& plan,
                                                       int t, double forecast_cf);

/// Delivery-time rebalancing at frozen D-1 marginal costs. Wind tracks its
/// availability delta around the D-1 setpoint; dispatchable units move at
/// mc_k = c1_k + 2 c2_k P^{D-1}_k per unit of |deviation|.
DispatchResult redispatch(const net::Network& net, const lpac::TopologyPlan& plan, int t,
                          const Dispatch& d1, double forecast_cf, double measured_cf);

/// Exact quadratic generation cost of a dispatch.
double generation_cost(const net::Network& net, const Dispatch& d);

} // namespace gridtopo::acpf
