#include "gridtopo/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

namespace gridtopo::scen {

void TimeSeries::validate() const {
    if (measured_cf.size() != timestamps.size() || forecast_cf.size() != timestamps.size())
        throw ValidationError("time series arrays have different lengths");
    for (std::size_t i = 0; i < size(); ++i) {
        if (i > 0 && timestamps[i] <= timestamps[i - 1])
            throw ValidationError("timestamps not strictly increasing at row " +
                                  std::to_string(i));
        for (double v : {measured_cf[i], forecast_cf[i]})
            if (!(v >= 0.0 && v <= 1.0))
                throw ValidationError("capacity factor outside [0,1] at row " +
                                      std::to_string(i));
    }
}

namespace {

// Accepts ISO-like stamps (YYYY-MM-DD[ T]HH:MM[:SS]) or plain integers.
std::int64_t parse_timestamp(const std::string& s, const std::string& where) {
    if (s.find('-') == std::string::npos) {
        char* end = nullptr;
        long long v = std::strtoll(s.c_str(), &end, 10);
        if (end == s.c_str()) throw ParseError(where, "bad timestamp '" + s + "'");
        return v;
    }
    std::tm tm{};
    int y, mo, d, h = 0, mi = 0, sec = 0;
    char sep;
    std::istringstream is(s);
    is >> y >> sep >> mo >> sep >> d;
    if (is.peek() == ' ' || is.peek() == 'T') {
        is.get();
        is >> h;
        if (is.peek() == ':') {
            is.get();
            is >> mi;
            if (is.peek() == ':') {
                is.get();
                is >> sec;
            }
        }
    }
    if (!is && !is.eof()) throw ParseError(where, "bad timestamp '" + s + "'");
    tm.tm_year = y - 1900;
    tm.tm_mon = mo - 1;
    tm.tm_mday = d;
    tm.tm_hour = h;
    tm.tm_min = mi;
    tm.tm_sec = sec;
    return static_cast<std::int64_t>(timegm(&tm));
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace

IngestResult ingest_csv(const std::string& path, Resample resample) {
    std::ifstream f(path);
    if (!f) throw ParseError(path, "cannot open");
    IngestResult out;
    double capacity = 0.0; // 0 = values are already capacity factors
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    int col_ts = 0, col_meas = 1, col_fc = 2;
    std::vector<std::int64_t> ts;
    std::vector<double> meas, fc;
    while (std::getline(f, line)) {
        ++lineno;
        std::string where = path + ":" + std::to_string(lineno);
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto eq = line.find('=');
            if (line.find("monitored_capacity_mw") != std::string::npos &&
                eq != std::string::npos)
                capacity = std::strtod(line.c_str() + eq + 1, nullptr);
            continue;
        }
        auto cells = split_csv(line);
        if (!header_seen) {
            header_seen = true;
            int found = 0;
            for (std::size_t c = 0; c < cells.size(); ++c) {
                std::string h = cells[c];
                std::transform(h.begin(), h.end(), h.begin(), ::tolower);
                if (h == "timestamp") { col_ts = static_cast<int>(c); ++found; }
                else if (h == "measured") { col_meas = static_cast<int>(c); ++found; }
                else if (h.rfind("forecast", 0) == 0) { col_fc = static_cast<int>(c); ++found; }
            }
            if (found < 3)
                throw ParseError(where, "header must name timestamp, measured, forecast");
            continue;
        }
        int need = std::max({col_ts, col_meas, col_fc}) + 1;
        if (static_cast<int>(cells.size()) < need) {
            ++out.skipped_rows;
            continue;
        }
        char* e1 = nullptr;
        char* e2 = nullptr;
        double m = std::strtod(cells[col_meas].c_str(), &e1);
        double fcv = std::strtod(cells[col_fc].c_str(), &e2);
        if (e1 == cells[col_meas].c_str() || e2 == cells[col_fc].c_str() ||
            std::isnan(m) || std::isnan(fcv)) {
            ++out.skipped_rows;
            continue;
        }
        if (capacity > 0) {
            m /= capacity;
            fcv /= capacity;
        }
        ts.push_back(parse_timestamp(cells[col_ts], where));
        meas.push_back(std::clamp(m, 0.0, 1.0));
        fc.push_back(std::clamp(fcv, 0.0, 1.0));
    }
    if (resample == Resample::HourlyMean) {
        std::map<std::int64_t, std::pair<std::pair<double, double>, int>> buckets;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            std::int64_t hour = ts[i] - (ts[i] % 3600);
            auto& b = buckets[hour];
            b.first.first += meas[i];
            b.first.second += fc[i];
            b.second += 1;
        }
        ts.clear();
        meas.clear();
        fc.clear();
        for (auto& [hour, acc] : buckets) {
            ts.push_back(hour);
            meas.push_back(acc.first.first / acc.second);
            fc.push_back(acc.first.second / acc.second);
        }
    }
    out.series.timestamps = std::move(ts);
    out.series.measured_cf = std::move(meas);
    out.series.forecast_cf = std::move(fc);
    out.series.validate();
    return out;
}

LaplaceFit fit_laplace(const std::vector<double>& errors) {
    if (errors.size() < 2)
        throw ValidationError("laplace fit needs at least 2 samples");
    std::vector<double> v = errors;
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    double mu = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    double b = 0.0;
    for (double x : v) b += std::abs(x - mu);
    b /= static_cast<double>(n);
    if (b <= 0.0)
        throw ValidationError("degenerate error distribution: all samples identical");
    return {mu, b};
}

double laplace_sample(const LaplaceFit& fit, Rng& rng) {
    // inverse CDF on u in (-1/2, 1/2)
    double u = rng.next_double() - 0.5;
    double au = std::abs(u);
    if (au >= 0.5) au = 0.49999999999999994;
    return fit.mu - fit.b * (u < 0 ? -1.0 : 1.0) * std::log(1.0 - 2.0 * au);
}

KdePdf::KdePdf(std::vector<double> samples, double bandwidth)
    : samples_(std::move(samples)) {
    if (samples_.size() < 2) throw ValidationError("kde needs at least 2 samples");
    if (bandwidth > 0) {
        h_ = bandwidth;
    } else {
        if (bandwidth < 0) throw ValidationError("kde bandwidth must be positive");
        // Silverman: 0.9 min(sigma, iqr/1.34) n^(-1/5)
        std::vector<double> v = samples_;
        std::sort(v.begin(), v.end());
        double n = static_cast<double>(v.size());
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= n;
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        var /= std::max(1.0, n - 1.0);
        double sigma = std::sqrt(var);
        auto quantile = [&](double q) {
            double pos = q * (n - 1.0);
            std::size_t i = static_cast<std::size_t>(pos);
            double frac = pos - static_cast<double>(i);
            return i + 1 < v.size() ? v[i] * (1 - frac) + v[i + 1] * frac : v[i];
        };
        double iqr = quantile(0.75) - quantile(0.25);
        double spread = std::min(sigma, iqr / 1.34);
        if (spread <= 0.0) spread = sigma;
        if (spread <= 0.0)
            throw ValidationError("degenerate kde: zero spread");
        h_ = 0.9 * spread * std::pow(n, -0.2);
    }
}

double KdePdf::operator()(double x) const {
    const double inv = 1.0 / (h_ * std::sqrt(2.0 * M_PI));
    double acc = 0.0;
    for (double s : samples_) {
        double u = (x - s) / h_;
        acc += std::exp(-0.5 * u * u);
    }
    return acc * inv / static_cast<double>(samples_.size());
}

ErrorDistribution analyze_errors(const TimeSeries& ts, double bandwidth) {
    ts.validate();
    ErrorDistribution ed;
    ed.samples.reserve(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i)
        ed.samples.push_back(ts.measured_cf[i] - ts.forecast_cf[i]);
    auto fit = fit_laplace(ed.samples);
    ed.laplace_mu = fit.mu;
    ed.laplace_b = fit.b;
    KdePdf kde(ed.samples, bandwidth);
    ed.kde_bandwidth = kde.bandwidth();
    return ed;
}

void ScenarioSet::validate() const {
    for (std::size_t t = 0; t < per_timestep.size(); ++t) {
        double sum = 0.0;
        for (auto& s : per_timestep[t]) {
            if (!(s.capacity_factor >= 0.0 && s.capacity_factor <= 1.0))
                throw ValidationError("scenario capacity factor outside [0,1] at t=" +
                                      std::to_string(t));
            if (s.probability < -1e-12)
                throw ValidationError("negative probability at t=" + std::to_string(t));
            sum += s.probability;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw ValidationError("probabilities at t=" + std::to_string(t) +
                                  " sum to " + std::to_string(sum));
    }
}

KmeansResult kmeans_1d(const std::vector<double>& points, int k, Rng& rng) {
    if (k < 1) throw ValidationError("kmeans needs k >= 1");
    if (points.empty()) throw ValidationError("kmeans needs points");
    std::vector<double> distinct = points;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    KmeansResult res;
    if (static_cast<int>(distinct.size()) < k) {
        res.reduced_k = true;
        k = static_cast<int>(distinct.size());
    }
    std::size_t n = points.size();

    // k-means++ seeding
    std::vector<double> centers;
    centers.push_back(points[rng.next_index(n)]);
    std::vector<double> d2(n);
    while (static_cast<int>(centers.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = kInf;
            for (double c : centers) best = std::min(best, (points[i] - c) * (points[i] - c));
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0) {
            // all points coincide with existing centers: seed any unseen distinct value
            for (double v : distinct) {
                if (std::find(centers.begin(), centers.end(), v) == centers.end()) {
                    centers.push_back(v);
                    break;
                }
            }
            continue;
        }
        double target = rng.next_double() * total;
        double acc = 0.0;
        std::size_t pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            acc += d2[i];
            if (acc >= target) {
                pick = i;
                break;
            }
        }
        centers.push_back(points[pick]);
    }

    std::vector<int> assign(n, -1);
    std::vector<std::int64_t> counts;
    for (int iter = 0; iter < 1000; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double bd = kInf;
            for (std::size_t c = 0; c < centers.size(); ++c) {
                double d = (points[i] - centers[c]) * (points[i] - centers[c]);
                if (d < bd - 1e-18) { // strict improvement: ties keep lowest index
                    bd = d;
                    best = static_cast<int>(c);
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
        }
        res.iterations = iter + 1;
        std::vector<double> sum(centers.size(), 0.0);
        counts.assign(centers.size(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            sum[assign[i]] += points[i];
            ++counts[assign[i]];
        }
        std::vector<double> next(centers.size());
        std::vector<char> used(n, 0);
        for (std::size_t c = 0; c < centers.size(); ++c) {
            if (counts[c] > 0) {
                next[c] = sum[c] / static_cast<double>(counts[c]);
                continue;
            }
            // re-seed an empty cluster at the farthest unused point, measured
            // against the pre-update centers
            std::size_t far = 0;
            double fd = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (used[i]) continue;
                double d = (points[i] - centers[assign[i]]) * (points[i] - centers[assign[i]]);
                if (d > fd) {
                    fd = d;
                    far = i;
                }
            }
            used[far] = 1;
            next[c] = points[far];
            changed = true;
        }
        centers = std::move(next);
        if (!changed) break;
    }
    // order ascending for reproducible output
    std::vector<std::size_t> order(centers.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return centers[a] < centers[b]; });
    res.centroids.reserve(centers.size());
    res.counts.reserve(centers.size());
    for (auto i : order) {
        res.centroids.push_back(centers[i]);
        res.counts.push_back(counts[i]);
    }
    res.wcss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double best = kInf;
        for (double c : res.centroids) best = std::min(best, (points[i] - c) * (points[i] - c));
        res.wcss += best;
    }
    return res;
}

ScenarioSet generate_scenarios(const TimeSeries& ts, const GenerateOptions& opt) {
    ts.validate();
    if (opt.k < 1) throw ValidationError("k must be >= 1");
    if (opt.n_samples < opt.k) throw ValidationError("n_samples must be >= k");
    ErrorDistribution ed = analyze_errors(ts, opt.bandwidth);
    LaplaceFit fit{ed.laplace_mu, ed.laplace_b};
    KdePdf kde(ed.samples, ed.kde_bandwidth);

    ScenarioSet set;
    set.per_timestep.resize(ts.size());
    std::vector<double> samples(opt.n_samples);
    for (std::size_t t = 0; t < ts.size(); ++t) {
        Rng rng(opt.seed + static_cast<std::uint64_t>(t));
        double f = ts.forecast_cf[t];
        for (int i = 0; i < opt.n_samples; ++i)
            samples[i] = std::clamp(f + laplace_sample(fit, rng), 0.0, 1.0);
        KmeansResult km = kmeans_1d(samples, opt.k, rng);
        auto& scen = set.per_timestep[t];
        double total = 0.0;
        std::vector<double> w(km.centroids.size());
        for (std::size_t c = 0; c < km.centroids.size(); ++c) {
            w[c] = kde(km.centroids[c] - f);
            total += w[c];
        }
        for (std::size_t c = 0; c < km.centroids.size(); ++c) {
            Scenario s;
            s.capacity_factor = km.centroids[c];
            s.probability = total > 0 ? w[c] / total
                                      : 1.0 / static_cast<double>(km.centroids.size());
            scen.push_back(s);
        }
        // exact unit sum under floating-point addition
        double sum = 0.0;
        for (auto& s : scen) sum += s.probability;
        if (!scen.empty() && sum != 0.0) scen.back().probability += 1.0 - sum;
    }
    set.validate();
    return set;
}

ScenarioSet single_series(const std::vector<double>& cf) {
    ScenarioSet set;
    set.per_timestep.resize(cf.size());
    for (std::size_t t = 0; t < cf.size(); ++t)
        set.per_timestep[t].push_back(Scenario{cf[t], 1.0});
    set.validate();
    return set;
}

void write_scenario_csv(const ScenarioSet& set, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ParseError(path, "cannot open for writing");
    f << "t,w,capacity_factor,probability\n";
    for (std::size_t t = 0; t < set.per_timestep.size(); ++t)
        for (std::size_t w = 0; w < set.per_timestep[t].size(); ++w)
            f << t << "," << w << "," << format_double(set.per_timestep[t][w].capacity_factor)
              << "," << format_double(set.per_timestep[t][w].probability) << "\n";
}

ScenarioSet read_scenario_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError(path, "cannot open");
    ScenarioSet set;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (lineno == 1 || line.empty()) continue;
        auto cells = split_csv(line);
        if (cells.size() != 4)
            throw ParseError(path + ":" + std::to_string(lineno), "expected t,w,cf,prob");
        std::size_t t = std::strtoull(cells[0].c_str(), nullptr, 10);
        if (set.per_timestep.size() <= t) set.per_timestep.resize(t + 1);
        Scenario s;
        s.capacity_factor = std::strtod(cells[2].c_str(), nullptr);
        s.probability = std::strtod(cells[3].c_str(), nullptr);
        set.per_timestep[t].push_back(s);
    }
    set.validate();
    return set;
}

} // namespace gridtopo::scen
