#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gridtopo/common.hpp"

namespace gridtopo::scen {

/// Hourly capacity-factor series: what was measured and what the day-ahead
/// forecast said.
struct TimeSeries {
    std::vector<std::int64_t> timestamps; // seconds since epoch, strictly increasing
    std::vector<double> measured_cf;
    std::vector<double> forecast_cf;

    std::size_t size() const { return timestamps.size(); }
    void validate() const;
};

enum class Resample { None, HourlyMean };

struct IngestResult {
    TimeSeries series;
    int skipped_rows = 0; // NaN/short rows dropped with a warning count
};

/// CSV columns: timestamp,measured,forecast. Values are capacity factors, or
/// MW when a `# monitored_capacity_mw = <x>` header line is present.
IngestResult ingest_csv(const std::string& path, Resample resample);

struct LaplaceFit {
    double mu = 0.0; // sample median
    double b = 0.0;  // mean absolute deviation about the median
};

/// Laplace maximum-likelihood fit; rejects degenerate all-identical samples.
LaplaceFit fit_laplace(const std::vector<double>& errors);

double laplace_sample(const LaplaceFit& fit, Rng& rng);

/// Gaussian-kernel density with Silverman's bandwidth by default.
class KdePdf {
public:
    KdePdf(std::vector<double> samples, double bandwidth /* <=0: Silverman */);
    double operator()(double x) const;
    double bandwidth() const { return h_; }

private:
    std::vector<double> samples_;
    double h_;
};

struct ErrorDistribution {
    std::vector<double> samples; // measured - forecast
    double kde_bandwidth = 0.0;
    double laplace_mu = 0.0, laplace_b = 0.0;
};

ErrorDistribution analyze_errors(const TimeSeries& ts, double bandwidth = 0.0);

/// Scenario list for one timestep.
struct Scenario {
    double capacity_factor = 0.0;
    double probability = 0.0;
};

struct ScenarioSet {
    std::vector<std::vector<Scenario>> per_timestep;
    std::size_t horizon() const { return per_timestep.size(); }
    std::size_t width() const {
        return per_timestep.empty() ? 0 : per_timestep[0].size();
    }
    void validate() const; // probabilities sum to 1 (1e-9), cf in [0,1]
};

/// 1-D k-means with k-means++ seeding driven by the given deterministic rng.
/// Assignment ties break toward the lowest cluster index; iterates to an
/// assignment fixed point. Returns ascending centroids with member counts.
struct KmeansResult {
    std::vector<double> centroids;
    std::vector<std::int64_t> counts;
    double wcss = 0.0;
    int iterations = 0;
    bool reduced_k = false; // fewer distinct points than k
};
KmeansResult kmeans_1d(const std::vector<double>& points, int k, Rng& rng);

struct GenerateOptions {
    int k = 6;
    int n_samples = 100000;
    std::uint64_t seed = 1;
    double bandwidth = 0.0; // KDE bandwidth, <=0: Silverman
};

/// Per timestep: sample forecast errors from the fitted Laplace (seed + t),
/// clamp forecast+error to [0,1], cluster, and weight each centroid by the
/// historical-error KDE evaluated at (centroid - forecast), normalized.
ScenarioSet generate_scenarios(const TimeSeries& ts, const GenerateOptions& opt);

/// Degenerate set: one scenario per timestep carrying the given series with
/// probability 1 (used for the Measured / Forecasted variants).
ScenarioSet single_series(const std::vector<double>& cf);

void write_scenario_csv(const ScenarioSet& set, const std::string& path);
ScenarioSet read_scenario_csv(const std::string& path);

} // namespace gridtopo::scen
