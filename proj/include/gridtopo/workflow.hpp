#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gridtopo/acpf.hpp"
#include "gridtopo/lpac.hpp"
#include "gridtopo/network.hpp"
#include "gridtopo/scenario.hpp"

namespace gridtopo::flow {

enum class SeriesVariant { Measured, Forecasted, Scenarios };

struct RunSpec {
    std::string name = "run";
    std::string case_path;
    std::vector<std::string> split_busbars; // "6", "ac:6" or "dc:3"
    std::string series_path;
    std::string scenario_file; // optional pre-generated scenario CSV
    int days = 0;              // 0 = every full day in the series
    lpac::Mode mode = lpac::Mode::PlainOPF;
    int s_max = 1;
    SeriesVariant variant = SeriesVariant::Forecasted;
    int scenarios_w = 6;
    std::uint64_t seed = 1;
    double gap = 1e-3;
    std::string backend = "bnb";
    std::string out_dir = "runs";
    int jobs = 0; // 0 = hardware concurrency
    bool export_only = false;
    // case preparation
    std::vector<int> wind_gens;
    double slack_cost_multiplier = 10.0;
    bool congestion_mods = false;
    double wind_cost_threshold = kInf; // used by congestion_mods
    int n_samples = 100000;
    double kde_bandwidth = 0.0;
    double switch_cost = 0.0;
    bool allow_ots = true;
    int cosine_cuts = 3;
    int cost_segments = 3;

    void validate() const;
};

struct DayResult {
    int day = 0;
    bool failed = false;
    std::string error;
    double d1_objective = 0.0;
    double pwl_bound = 0.0;
    double feasibility_cost = 0.0;
    double redispatch_cost = 0.0;
    double switching_cost = 0.0;
    double total = 0.0;
    double mip_gap = 0.0;
    int change_hours_ac = 0;
    int change_hours_dc = 0;
    bool fidelity_ok = true;
    // wall times
    double build_s = 0.0, solve_s = 0.0;
    std::vector<double> hour_feas_cost, hour_red_cost;
    std::vector<double> hour_feas_s, hour_red_s;
};

struct CostReport {
    std::string name;
    std::string mode_label;
    std::string series_label;
    std::vector<DayResult> days;
    double total_feasibility = 0.0;
    double total_redispatch = 0.0;
    double total = 0.0;
    bool any_failed = false;
};

/// Full day-ahead workflow: per day, solve the D-1 model on the variant's
/// series, fix the topology, run the per-hour feasibility check on the
/// deterministic D-1 series and the redispatch on the measured one, then
/// aggregate. Results land in <out_dir>/<name>/.
CostReport run(const RunSpec& spec);

void write_report(const CostReport& report, const std::string& dir);
CostReport read_report(const std::string& dir);

struct CompareRow {
    std::string mode_label;
    // per series (column order of the table): % vs baseline, % vs own OPF
    std::vector<double> pct_vs_baseline;
    std::vector<double> pct_vs_own_opf;
};
struct CompareTable {
    std::vector<std::string> series; // column groups
    std::vector<CompareRow> rows;
};

/// Percent-increase matrix vs a named baseline run and vs each series' own
/// plain-OPF run. All reports must cover identical days.
CompareTable compare(const std::vector<CostReport>& reports, const std::string& baseline);
void write_compare_csv(const CompareTable& table, const std::string& path);

const char* mode_label(lpac::Mode mode, int s_max);
const char* variant_label(SeriesVariant v, int w);

} // namespace gridtopo::flow
