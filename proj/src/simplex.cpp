#include "gridtopo/simplex.hpp"

#include <Eigen/Dense>

#include <cassert>
#include <cmath>

namespace gridtopo::lp {

namespace {
constexpr double kPrimalTol = 1e-9;
constexpr double kDualTol = 1e-9;
constexpr double kPivotTol = 1e-8;
constexpr int kRefactorInterval = 100;
} // namespace

struct Simplex::Impl {
    // problem data; variable layout: [0, n) structural, [n, n+m) logical (row i).
    int n = 0, m = 0;
    std::vector<double> lo, up, cost; // size n + m; logical cost is 0
    double obj_constant = 0.0;
    // structural columns, sparse
    std::vector<std::vector<std::pair<int, double>>> cols;
    // row-major copy for alpha-row computation
    std::vector<std::vector<std::pair<int, double>>> rows;

    // basis state
    std::vector<int> basis;        // slot -> var
    std::vector<int> in_basis;     // var -> slot or -1
    std::vector<VarState> state;   // var -> state
    std::vector<double> xval;      // var -> current value

    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    struct Eta {
        int slot;
        Eigen::VectorXd w;
    };
    std::vector<Eta> etas;
    bool factor_valid = false;
    bool values_dirty = true;
    bool duals_dirty = true;

    std::vector<double> dvec; // reduced costs, size n + m
    std::vector<double> saved_cost; // pre-perturbation costs, empty when clean
    std::int64_t iters = 0;

    // workspaces
    Eigen::VectorXd ws_rhs, ws_rho;

    int total() const { return n + m; }

    const std::vector<std::pair<int, double>>& column(int var, std::pair<int, double>& unit) const {
        static const std::vector<std::pair<int, double>> empty;
        if (var < n) return cols[var];
        unit = {var - n, -1.0};
        return empty;
    }

    void load(const Problem& p) {
        n = p.num_cols();
        m = p.num_rows();
        lo.assign(n + m, 0.0);
        up.assign(n + m, 0.0);
        cost.assign(n + m, 0.0);
        obj_constant = p.obj_constant;
        for (int j = 0; j < n; ++j) {
            lo[j] = p.col_lo[j];
            up[j] = p.col_up[j];
            cost[j] = p.obj[j];
        }
        cols.assign(n, {});
        rows.assign(m, {});
        for (int i = 0; i < m; ++i) {
            lo[n + i] = p.rows[i].lo;
            up[n + i] = p.rows[i].up;
            rows[i] = p.rows[i].coef;
            for (auto& [j, a] : p.rows[i].coef) {
                assert(j >= 0 && j < n);
                cols[j].push_back({i, a});
            }
        }
        reset_basis();
    }

    void reset_basis() {
        basis.resize(m);
        in_basis.assign(n + m, -1);
        state.assign(n + m, VarState::AtLower);
        xval.assign(n + m, 0.0);
        for (int i = 0; i < m; ++i) {
            basis[i] = n + i;
            in_basis[n + i] = i;
            state[n + i] = VarState::Basic;
        }
        for (int j = 0; j < n; ++j) set_nonbasic_state(j);
        etas.clear();
        factor_valid = false;
        values_dirty = true;
        duals_dirty = true;
    }

    void set_nonbasic_state(int v) {
        double c = cost[v];
        bool lo_fin = std::isfinite(lo[v]);
        bool up_fin = std::isfinite(up[v]);
        VarState s;
        if (c > kDualTol) {
            if (lo_fin) s = VarState::AtLower;
            else if (up_fin) s = VarState::AtUpper; // dual infeasible; primal will fix or report
            else throw SolveError("column with nonzero cost is free in both directions");
        } else if (c < -kDualTol) {
            if (up_fin) s = VarState::AtUpper;
            else if (lo_fin) s = VarState::AtLower;
            else throw SolveError("column with nonzero cost is free in both directions");
        } else {
            if (lo_fin) s = VarState::AtLower;
            else if (up_fin) s = VarState::AtUpper;
            else s = VarState::FreeZero;
        }
        state[v] = s;
        xval[v] = s == VarState::AtLower ? lo[v] : s == VarState::AtUpper ? up[v] : 0.0;
    }

    void refactor() {
        Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m, m);
        for (int k = 0; k < m; ++k) {
            int v = basis[k];
            if (v < n) {
                for (auto& [i, a] : cols[v]) B(i, k) = a;
            } else {
                B(v - n, k) = -1.0;
            }
        }
        lu.compute(B);
        etas.clear();
        factor_valid = true;
    }

    void ftran(Eigen::VectorXd& x) const {
        x = lu.solve(x);
        for (const auto& e : etas) {
            double xr = x[e.slot] / e.w[e.slot];
            if (xr != 0.0) {
                x.noalias() -= e.w * xr;
                x[e.slot] = xr;
            } else {
                x[e.slot] = 0.0;
            }
        }
    }

    void btran(Eigen::VectorXd& y) const {
        for (auto it = etas.rbegin(); it != etas.rend(); ++it) {
            double acc = y[it->slot];
            double save = y[it->slot];
            y[it->slot] = 0.0;
            acc -= y.dot(it->w);
            y[it->slot] = save;
            y[it->slot] = acc / it->w[it->slot];
        }
        const auto& L = lu.matrixLU();
        // B^T y = c with P B = L U  =>  U^T L^T (P y) = c
        Eigen::VectorXd z = L.transpose().triangularView<Eigen::Lower>().solve(y);
        Eigen::VectorXd u = L.transpose().triangularView<Eigen::UnitUpper>().solve(z);
        y = lu.permutationP().transpose() * u;
    }

    // w := B^-1 * column(var)
    void ftran_col(int var, Eigen::VectorXd& w) const {
        w.setZero(m);
        if (var < n) {
            for (auto& [i, a] : cols[var]) w[i] = a;
        } else {
            w[var - n] = -1.0;
        }
        ftran(w);
    }

    void recompute_values() {
        for (int v = 0; v < n + m; ++v) {
            if (state[v] == VarState::AtLower) xval[v] = lo[v];
            else if (state[v] == VarState::AtUpper) xval[v] = up[v];
            else if (state[v] == VarState::FreeZero) xval[v] = 0.0;
        }
        ws_rhs.setZero(m);
        for (int v = 0; v < n + m; ++v) {
            if (state[v] == VarState::Basic || xval[v] == 0.0) continue;
            if (v < n) {
                for (auto& [i, a] : cols[v]) ws_rhs[i] -= a * xval[v];
            } else {
                ws_rhs[v - n] += xval[v];
            }
        }
        ftran(ws_rhs);
        for (int k = 0; k < m; ++k) xval[basis[k]] = ws_rhs[k];
        values_dirty = false;
    }

    void recompute_duals() {
        Eigen::VectorXd cb(m);
        for (int k = 0; k < m; ++k) cb[k] = cost[basis[k]];
        btran(cb);
        dvec.assign(n + m, 0.0);
        for (int j = 0; j < n; ++j) {
            if (state[j] == VarState::Basic) continue;
            double acc = cost[j];
            for (auto& [i, a] : cols[j]) acc -= cb[i] * a;
            dvec[j] = acc;
        }
        for (int i = 0; i < m; ++i) {
            if (state[n + i] == VarState::Basic) continue;
            dvec[n + i] = cb[i];
        }
        duals_dirty = false;
    }

    // Degenerate dual ties (many zero reduced costs) cycle; nudging each
    // nonbasic cost away from zero in its feasible direction breaks the ties
    // while keeping the current reduced-cost signs. run() restores the true
    // costs afterwards and lets a primal pass clean up.
    void perturb_costs() {
        if (!saved_cost.empty()) return;
        saved_cost = cost;
        for (int v = 0; v < n + m; ++v) {
            if (state[v] == VarState::Basic || lo[v] == up[v]) continue;
            double eps = 1e-8 * (1.0 + std::abs(cost[v])) *
                         (1.0 + static_cast<double>((v * 2654435761u) % 97) / 97.0);
            if (state[v] == VarState::AtLower) {
                cost[v] += eps;
                dvec[v] += eps;
            } else if (state[v] == VarState::AtUpper) {
                cost[v] -= eps;
                dvec[v] -= eps;
            }
        }
    }

    bool restore_costs() {
        if (saved_cost.empty()) return false;
        cost = std::move(saved_cost);
        saved_cost.clear();
        duals_dirty = true;
        return true;
    }

    bool dual_feasible() const {
        for (int v = 0; v < n + m; ++v) {
            switch (state[v]) {
                case VarState::Basic: break;
                case VarState::AtLower:
                    if (lo[v] == up[v]) break; // fixed: any sign fine
                    if (dvec[v] < -1e-7) return false;
                    break;
                case VarState::AtUpper:
                    if (lo[v] == up[v]) break;
                    if (dvec[v] > 1e-7) return false;
                    break;
                case VarState::FreeZero:
                    if (std::abs(dvec[v]) > 1e-7) return false;
                    break;
            }
        }
        return true;
    }

    bool primal_feasible() const {
        for (int k = 0; k < m; ++k) {
            int v = basis[k];
            if (xval[v] < lo[v] - feas_tol(lo[v]) || xval[v] > up[v] + feas_tol(up[v])) return false;
        }
        return true;
    }

    static double feas_tol(double bound) {
        return kPrimalTol * (1.0 + (std::isfinite(bound) ? std::abs(bound) : 0.0));
    }

    // alpha[j] = (B^-1 A)_{r,j} for all variables, from rho = B^-T e_r
    void alpha_row(const Eigen::VectorXd& rho, std::vector<double>& alpha) const {
        alpha.assign(n + m, 0.0);
        for (int i = 0; i < m; ++i) {
            double r = rho[i];
            if (std::abs(r) < 1e-13) continue;
            for (auto& [j, a] : rows[i]) alpha[j] += r * a;
            alpha[n + i] = -r;
        }
    }

    void append_eta(int slot, const Eigen::VectorXd& w) {
        etas.push_back({slot, w});
        if (static_cast<int>(etas.size()) >= kRefactorInterval) {
            refactor();
            recompute_values();
            recompute_duals();
        }
    }

    // ------------------------------- dual simplex -------------------------------
    Status solve_dual(std::int64_t limit) {
        if (!factor_valid) refactor();
        if (values_dirty) recompute_values();
        if (duals_dirty) recompute_duals();
        std::int64_t stall = 0;
        bool bland = false;
        std::vector<double> alpha;
        while (true) {
            // leaving: most violated basic (bland mode: lowest variable index)
            int r = -1;
            double best_viol = kPrimalTol;
            bool above = false;
            for (int k = 0; k < m; ++k) {
                int v = basis[k];
                double bl = lo[v], bu = up[v];
                double viol_lo = bl - xval[v] - feas_tol(bl);
                double viol_up = xval[v] - bu - feas_tol(bu);
                double viol = std::max(viol_lo, viol_up);
                bool take;
                if (bland) {
                    take = viol > kPrimalTol && (r < 0 || v < basis[r]);
                } else {
                    take = viol > best_viol;
                }
                if (take) {
                    best_viol = std::max(viol, best_viol);
                    r = k;
                    above = viol_up >= viol_lo;
                }
            }
            if (r < 0) return Status::Optimal;
            if (++iters > limit) return Status::IterLimit;

            int p = basis[r];
            ws_rho.setZero(m);
            ws_rho[r] = 1.0;
            btran(ws_rho);
            alpha_row(ws_rho, alpha);

            // entering: keep dual feasibility, min |d_j / alpha_j| over eligible.
            // In bland mode the smallest eligible index with a (near-)minimal
            // ratio wins, which breaks degenerate cycles.
            int q = -1;
            double best_ratio = kInf, best_mag = 0.0;
            for (int v = 0; v < n + m; ++v) {
                if (state[v] == VarState::Basic || lo[v] == up[v]) continue;
                double a = alpha[v];
                if (std::abs(a) < kPivotTol) continue;
                bool eligible;
                if (state[v] == VarState::FreeZero) {
                    eligible = true;
                } else if (above) { // x_p must decrease
                    eligible = (state[v] == VarState::AtLower && a > 0) ||
                               (state[v] == VarState::AtUpper && a < 0);
                } else { // x_p must increase
                    eligible = (state[v] == VarState::AtLower && a < 0) ||
                               (state[v] == VarState::AtUpper && a > 0);
                }
                if (!eligible) continue;
                double ratio = std::abs(dvec[v] / a);
                bool take;
                if (q < 0) {
                    take = true;
                } else if (bland) {
                    // lowest index among (near-)minimal ratios
                    take = ratio < best_ratio - 1e-10 ||
                           (ratio <= best_ratio + 1e-10 && v < q);
                } else {
                    take = ratio < best_ratio - 1e-12 ||
                           (ratio < best_ratio + 1e-9 && std::abs(a) > best_mag);
                }
                if (take) {
                    best_ratio = std::min(ratio, best_ratio);
                    best_mag = std::abs(a);
                    q = v;
                }
            }
            if (q < 0) {
                // prove it on a fresh factorization before declaring
                if (!etas.empty()) {
                    refactor();
                    recompute_values();
                    recompute_duals();
                    continue;
                }
                return Status::Infeasible;
            }

            double bound = above ? up[p] : lo[p];
            double delta = xval[p] - bound;
            double aq = alpha[q];
            double step = delta / aq;
            double theta_d = dvec[q] / aq;

            Eigen::VectorXd w(m);
            ftran_col(q, w);
            // numerical agreement between alpha (row) and w (column) pivots
            if (!std::isfinite(w[r]) || !std::isfinite(step) ||
                std::abs(w[r] - aq) > 1e-6 * std::max(1.0, std::abs(aq))) {
                if (etas.empty()) throw SolveError("simplex pivot disagreement after refactor");
                refactor();
                recompute_values();
                recompute_duals();
                continue;
            }
            // dual objective progress is theta_d * delta; stalls mean degeneracy
            if (std::abs(theta_d * delta) < 1e-13) {
                if (++stall > 100) {
                    if (saved_cost.empty()) {
                        perturb_costs();
                        stall = 0;
                    } else {
                        bland = true;
                    }
                }
            } else {
                stall = 0;
                bland = false;
            }

            // primal update
            if (step != 0.0) {
                for (int k = 0; k < m; ++k) {
                    if (w[k] != 0.0) xval[basis[k]] -= w[k] * step;
                }
            }
            xval[q] = xval[q] + step;
            xval[p] = bound;

            // dual update
            for (int v = 0; v < n + m; ++v) {
                if (state[v] == VarState::Basic || alpha[v] == 0.0) continue;
                dvec[v] -= theta_d * alpha[v];
            }
            dvec[p] = -theta_d;
            dvec[q] = 0.0;

            // basis swap
            basis[r] = q;
            in_basis[q] = r;
            in_basis[p] = -1;
            state[q] = VarState::Basic;
            state[p] = above ? VarState::AtUpper : VarState::AtLower;
            append_eta(r, w);
        }
    }

    // ------------------------------ primal simplex ------------------------------
    Status solve_primal(std::int64_t limit) {
        if (!factor_valid) refactor();
        if (values_dirty) recompute_values();
        if (duals_dirty) recompute_duals();
        if (!primal_feasible()) {
            reset_basis();
            refactor();
            recompute_values();
            recompute_duals();
            if (!dual_feasible())
                throw SolveError("cold start is neither primal nor dual feasible");
            return solve_dual(limit);
        }
        std::vector<double> alpha;
        std::int64_t stall = 0;
        bool bland = false;
        while (true) {
            int q = -1;
            double best = kDualTol;
            int dir = +1;
            for (int v = 0; v < n + m; ++v) {
                if (state[v] == VarState::Basic || lo[v] == up[v]) continue;
                double d = dvec[v];
                double score = 0.0;
                int sdir = 0;
                if (state[v] == VarState::AtLower && d < -best) { score = -d; sdir = +1; }
                else if (state[v] == VarState::AtUpper && d > best) { score = d; sdir = -1; }
                else if (state[v] == VarState::FreeZero && std::abs(d) > best) {
                    score = std::abs(d);
                    sdir = d < 0 ? +1 : -1;
                }
                if (sdir != 0 && (q < 0 || (bland ? v < q : score > best))) {
                    if (!bland) best = score;
                    q = v;
                    dir = sdir;
                    if (bland) break;
                }
            }
            if (q < 0) return Status::Optimal;
            if (++iters > limit) return Status::IterLimit;

            Eigen::VectorXd w(m);
            ftran_col(q, w);

            // ratio test: x_q moves by dir*t, basics move by -dir*w*t
            double own_gap = up[q] - lo[q];
            double tmax = std::isfinite(own_gap) ? own_gap : kInf;
            int r = -1;
            bool leave_at_upper = false;
            double best_piv = 0.0;
            for (int k = 0; k < m; ++k) {
                double wk = -static_cast<double>(dir) * w[k];
                if (std::abs(wk) < kPivotTol) continue;
                int v = basis[k];
                double t;
                bool at_up;
                if (wk > 0) { // basic increases, hits upper
                    if (!std::isfinite(up[v])) continue;
                    t = (up[v] - xval[v]) / wk;
                    at_up = true;
                } else { // decreases, hits lower
                    if (!std::isfinite(lo[v])) continue;
                    t = (lo[v] - xval[v]) / wk;
                    at_up = false;
                }
                if (t < 0.0) t = 0.0;
                bool take;
                if (r < 0) {
                    take = t < tmax - 1e-12 || !std::isfinite(tmax) || t <= tmax;
                } else if (bland) {
                    take = t < tmax - 1e-10 || (t <= tmax + 1e-10 && basis[k] < basis[r]);
                } else {
                    take = t < tmax - 1e-12 ||
                           (t < tmax + 1e-9 && std::abs(wk) > best_piv);
                }
                if (take) {
                    tmax = std::min(t, tmax);
                    r = k;
                    best_piv = std::abs(wk);
                    leave_at_upper = at_up;
                }
            }
            if (!std::isfinite(tmax)) return Status::Unbounded;
            if (r >= 0 && std::isfinite(own_gap) && own_gap <= tmax) r = -1; // bound flip wins
            if (tmax < 1e-12) {
                if (++stall > 500) bland = true;
            } else {
                stall = 0;
                bland = false;
            }

            if (r < 0) {
                // bound flip
                double t = dir > 0 ? up[q] - xval[q] : xval[q] - lo[q];
                for (int k = 0; k < m; ++k)
                    if (w[k] != 0.0) xval[basis[k]] -= w[k] * (dir > 0 ? t : -t);
                state[q] = dir > 0 ? VarState::AtUpper : VarState::AtLower;
                xval[q] = dir > 0 ? up[q] : lo[q];
                continue;
            }

            int p = basis[r];
            double step = static_cast<double>(dir) * tmax;
            for (int k = 0; k < m; ++k)
                if (w[k] != 0.0) xval[basis[k]] -= w[k] * step;
            xval[q] += step;
            xval[p] = leave_at_upper ? up[p] : lo[p];

            // dual update needs the alpha row of the leaving slot
            ws_rho.setZero(m);
            ws_rho[r] = 1.0;
            btran(ws_rho);
            alpha_row(ws_rho, alpha);
            double aq = alpha[q];
            if (std::abs(aq) < kPivotTol * 0.01) {
                refactor();
                recompute_values();
                recompute_duals();
                continue;
            }
            double theta_d = dvec[q] / aq;
            for (int v = 0; v < n + m; ++v) {
                if (state[v] == VarState::Basic || alpha[v] == 0.0) continue;
                dvec[v] -= theta_d * alpha[v];
            }
            dvec[p] = -theta_d;
            dvec[q] = 0.0;

            basis[r] = q;
            in_basis[q] = r;
            in_basis[p] = -1;
            state[q] = VarState::Basic;
            state[p] = leave_at_upper ? VarState::AtUpper : VarState::AtLower;
            append_eta(r, w);
        }
    }

    Status run(std::int64_t limit, bool prefer_primal) {
        if (!factor_valid) refactor();
        if (values_dirty) recompute_values();
        if (duals_dirty) recompute_duals();
        Status s;
        if (prefer_primal && primal_feasible()) {
            s = solve_primal(limit);
        } else if (dual_feasible()) {
            s = solve_dual(limit);
        } else if (primal_feasible()) {
            s = solve_primal(limit);
        } else {
            reset_basis();
            refactor();
            recompute_values();
            recompute_duals();
            if (!dual_feasible())
                throw SolveError("cold start is neither primal nor dual feasible");
            s = solve_dual(limit);
        }
        // Re-derive basic values through the factorization once and clean up
        // any drift the incremental updates accumulated.
        for (int attempt = 0; s == Status::Optimal && attempt < 3; ++attempt) {
            recompute_values();
            if (primal_feasible()) break;
            refactor();
            recompute_values();
            recompute_duals();
            s = solve_dual(limit);
            if (attempt == 2 && s == Status::Optimal && !primal_feasible())
                s = Status::IterLimit;
        }
        if (restore_costs()) {
            recompute_duals();
            if (s == Status::Optimal && !dual_feasible()) {
                // the perturbed optimum is primal feasible; finish with primal
                s = solve_primal(limit);
            }
        }
        return s;
    }

    double objective() const {
        double o = obj_constant;
        for (int j = 0; j < n; ++j)
            if (cost[j] != 0.0) o += cost[j] * xval[j];
        return o;
    }
};

Simplex::Simplex() : impl_(new Impl) {}
Simplex::~Simplex() = default;
Simplex::Simplex(Simplex&&) noexcept = default;
Simplex& Simplex::operator=(Simplex&&) noexcept = default;

void Simplex::load(const Problem& p) { impl_->load(p); }

void Simplex::set_col_bounds(int j, double lo, double up) {
    auto& im = *impl_;
    im.lo[j] = lo;
    im.up[j] = up;
    if (im.state[j] != VarState::Basic) {
        if (im.state[j] == VarState::AtLower && !std::isfinite(lo))
            im.state[j] = std::isfinite(up) ? VarState::AtUpper : VarState::FreeZero;
        if (im.state[j] == VarState::AtUpper && !std::isfinite(up))
            im.state[j] = std::isfinite(lo) ? VarState::AtLower : VarState::FreeZero;
    }
    im.values_dirty = true;
}

void Simplex::set_row_bounds(int i, double lo, double up) {
    set_col_bounds(impl_->n + i, lo, up);
}

void Simplex::set_obj(int j, double cost) {
    impl_->cost[j] = cost;
    impl_->duals_dirty = true;
}

void Simplex::set_obj_constant(double c) { impl_->obj_constant = c; }

Status Simplex::solve(int iter_limit) {
    std::int64_t lim = iter_limit > 0 ? iter_limit
                                      : 200LL * (impl_->n + impl_->m) + 20000;
    return impl_->run(impl_->iters + lim, false);
}

Status Simplex::solve_primal(int iter_limit) {
    std::int64_t lim = iter_limit > 0 ? iter_limit
                                      : 200LL * (impl_->n + impl_->m) + 20000;
    return impl_->run(impl_->iters + lim, true);
}

double Simplex::objective() const { return impl_->objective(); }

const std::vector<double>& Simplex::col_values() const { return impl_->xval; }

std::vector<double> Simplex::row_values() const {
    std::vector<double> rv(impl_->m, 0.0);
    for (int i = 0; i < impl_->m; ++i) {
        double acc = 0.0;
        for (auto& [j, a] : impl_->rows[i]) acc += a * impl_->xval[j];
        rv[i] = acc;
    }
    return rv;
}

std::vector<double> Simplex::duals() const {
    auto& im = *impl_;
    Eigen::VectorXd cb(im.m);
    for (int k = 0; k < im.m; ++k) cb[k] = im.cost[im.basis[k]];
    im.btran(cb);
    std::vector<double> y(im.m);
    for (int i = 0; i < im.m; ++i) y[i] = cb[i];
    return y;
}

std::vector<double> Simplex::reduced_costs() const {
    if (impl_->duals_dirty) impl_->recompute_duals();
    std::vector<double> rc(impl_->dvec.begin(), impl_->dvec.begin() + impl_->n);
    return rc;
}

Basis Simplex::basis() const {
    Basis b;
    b.state = impl_->state;
    return b;
}

void Simplex::set_basis(const Basis& b) {
    auto& im = *impl_;
    if (static_cast<int>(b.state.size()) != im.total())
        throw SolveError("basis size mismatch");
    im.state = b.state;
    im.basis.clear();
    im.in_basis.assign(im.total(), -1);
    for (int v = 0; v < im.total(); ++v) {
        if (im.state[v] == VarState::Basic) {
            im.in_basis[v] = static_cast<int>(im.basis.size());
            im.basis.push_back(v);
        }
    }
    if (static_cast<int>(im.basis.size()) != im.m)
        throw SolveError("basis does not have one variable per row");
    im.factor_valid = false;
    im.values_dirty = true;
    im.duals_dirty = true;
}

std::int64_t Simplex::iterations() const { return impl_->iters; }
int Simplex::num_cols() const { return impl_->n; }
int Simplex::num_rows() const { return impl_->m; }

} // namespace gridtopo::lp
