#pragma once

// Test-only LP oracles: a KKT certificate checker and a generator of random
// bounded LPs with a constructed, provably optimal point. Both are independent
// of the simplex implementation they are used to check.

#include <cmath>
#include <vector>

#include "gridtopo/common.hpp"
#include "gridtopo/simplex.hpp"

namespace lptest {

using gridtopo::Rng;
using gridtopo::lp::Problem;

struct KktReport {
    bool ok = true;
    std::string what;
};

// Verifies primal feasibility, dual feasibility and complementary slackness of
// (x, y) for the problem. For a linear program these conditions certify global
// optimality, so no reference solver is needed.
inline KktReport check_kkt(const Problem& p, const std::vector<double>& x,
                           const std::vector<double>& y, double tol = 1e-6) {
    KktReport rep;
    auto fail = [&](const std::string& msg) {
        rep.ok = false;
        rep.what = msg;
        return rep;
    };
    int n = p.num_cols(), m = p.num_rows();
    for (int j = 0; j < n; ++j) {
        if (x[j] < p.col_lo[j] - tol || x[j] > p.col_up[j] + tol)
            return fail("column bound violated at " + std::to_string(j));
    }
    std::vector<double> act(m, 0.0);
    for (int i = 0; i < m; ++i) {
        for (auto& [j, a] : p.rows[i].coef) act[i] += a * x[j];
        double scale = 1.0 + std::abs(act[i]);
        if (act[i] < p.rows[i].lo - tol * scale || act[i] > p.rows[i].up + tol * scale)
            return fail("row bound violated at " + std::to_string(i));
    }
    // reduced costs
    std::vector<double> rc(p.obj);
    for (int i = 0; i < m; ++i)
        for (auto& [j, a] : p.rows[i].coef) rc[j] -= y[i] * a;
    for (int j = 0; j < n; ++j) {
        if (rc[j] > tol && x[j] > p.col_lo[j] + tol)
            return fail("complementarity (lower) violated at column " + std::to_string(j));
        if (rc[j] < -tol && x[j] < p.col_up[j] - tol)
            return fail("complementarity (upper) violated at column " + std::to_string(j));
    }
    for (int i = 0; i < m; ++i) {
        double scale = 1.0 + std::abs(act[i]);
        if (y[i] > tol && act[i] > p.rows[i].lo + tol * scale)
            return fail("complementarity (row lower) violated at row " + std::to_string(i));
        if (y[i] < -tol && act[i] < p.rows[i].up - tol * scale)
            return fail("complementarity (row upper) violated at row " + std::to_string(i));
    }
    return rep;
}

struct BuiltLp {
    Problem prob;
    std::vector<double> x_star;
    double objective = 0.0;
};

// Builds a random LP around a chosen optimal point: draw x*, choose which
// bounds/rows bind, draw multipliers with the matching signs, then set
// c = rc + A^T y. (x*, y) then satisfies KKT by construction.
inline BuiltLp random_lp_with_known_optimum(Rng& rng, int n, int m, double density = 0.3) {
    BuiltLp out;
    Problem& p = out.prob;
    std::vector<double> x(n), rc(n, 0.0), y(m, 0.0);
    for (int j = 0; j < n; ++j) x[j] = 2.0 * rng.next_double() - 1.0;

    for (int i = 0; i < m; ++i) {
        Problem::Row row;
        for (int j = 0; j < n; ++j) {
            if (rng.next_double() < density)
                row.coef.push_back({j, std::round((2.0 * rng.next_double() - 1.0) * 8) / 2.0});
        }
        if (row.coef.empty()) row.coef.push_back({static_cast<int>(rng.next_index(n)), 1.0});
        double act = 0.0;
        for (auto& [j, a] : row.coef) act += a * x[j];
        double mode = rng.next_double();
        if (mode < 0.25) { // binds at lower
            row.lo = act;
            row.up = act + 1.0 + rng.next_double();
            y[i] = rng.next_double();
        } else if (mode < 0.5) { // binds at upper
            row.lo = act - 1.0 - rng.next_double();
            row.up = act;
            y[i] = -rng.next_double();
        } else if (mode < 0.6) { // equality
            row.lo = row.up = act;
            y[i] = 2.0 * rng.next_double() - 1.0;
        } else { // slack
            row.lo = act - 0.5 - rng.next_double();
            row.up = act + 0.5 + rng.next_double();
            y[i] = 0.0;
        }
        p.rows.push_back(row);
    }
    for (int j = 0; j < n; ++j) {
        double mode = rng.next_double();
        if (mode < 0.3) { // at lower
            p.col_lo.push_back(x[j]);
            p.col_up.push_back(x[j] + 1.0 + rng.next_double());
            rc[j] = rng.next_double();
        } else if (mode < 0.6) { // at upper
            p.col_lo.push_back(x[j] - 1.0 - rng.next_double());
            p.col_up.push_back(x[j]);
            rc[j] = -rng.next_double();
        } else { // interior
            p.col_lo.push_back(x[j] - 0.5 - rng.next_double());
            p.col_up.push_back(x[j] + 0.5 + rng.next_double());
            rc[j] = 0.0;
        }
    }
    p.obj = rc;
    for (int i = 0; i < m; ++i)
        for (auto& [j, a] : p.rows[i].coef) p.obj[j] += y[i] * a;
    out.x_star = x;
    for (int j = 0; j < n; ++j) out.objective += p.obj[j] * x[j];
    return out;
}

} // namespace lptest
