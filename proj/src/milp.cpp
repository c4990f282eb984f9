#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <queue>
#include <set>

#include "gridtopo/mip.hpp"
#include "gridtopo/simplex.hpp"

// Builtin branch-and-bound backend ("bnb").
//
// The LPAC instances this backend sees are block-structured: once the switch
// binaries are fixed (or relaxed to an interval over their domain), the
// continuous part falls apart into independent per-(t,w) components. The
// solver exploits that generically:
//   - every row is normalized to  lo <= cont·x + bin·z <= up; at a node the
//     binary part is replaced by its interval, a valid relaxation that
//     separates by connected component,
//   - each component keeps a persistent dual-simplex instance with lazy row
//     activation (most cuts and limits are slack at the optimum),
//   - interval propagation over all rows fixes binaries and prunes nodes,
//   - instances whose binaries repeat across timesteps are bracketed first:
//     a one-topology restriction gives an incumbent, dropping every
//     timestep-coupling row gives a group-decomposable lower bound, and the
//     tree search only runs when that bracket is wider than the target gap.

namespace gridtopo::mip {

namespace {

using Clock = std::chrono::steady_clock;

double now_s(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct NormRow {
    std::vector<std::pair<int, double>> cont; // (global var, coef)
    std::vector<std::pair<int, double>> bin;  // (bin position, coef)
    double lo = -kInf, up = kInf;
};

struct Domain {
    std::vector<std::int8_t> lo, up; // per binary, each in {0,1}

    bool decided(int k) const { return lo[k] == up[k]; }
    int count_undecided() const {
        int c = 0;
        for (std::size_t k = 0; k < lo.size(); ++k)
            if (lo[k] != up[k]) ++c;
        return c;
    }
};

std::pair<double, double> bin_interval(const NormRow& nr, const Domain& dom) {
    double mn = 0.0, mx = 0.0;
    for (auto& [k, g] : nr.bin) {
        mn += std::min(g * dom.lo[k], g * dom.up[k]);
        mx += std::max(g * dom.lo[k], g * dom.up[k]);
    }
    return {mn, mx};
}

// One continuous component: persistent simplex with lazy row activation.
class Block {
public:
    void init(const MipInstance& m, std::vector<int> cols, std::vector<int> rows,
              const std::vector<NormRow>* allrows) {
        cols_ = std::move(cols);
        rows_ = std::move(rows);
        all_ = allrows;
        local_.assign(m.num_vars(), -1);
        for (std::size_t k = 0; k < cols_.size(); ++k) local_[cols_[k]] = static_cast<int>(k);
        for (int g : cols_) {
            const auto& v = m.var(g);
            base_.add_col(v.lo, v.up, v.obj);
        }
        active_.assign(rows_.size(), 0);
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            const NormRow& nr = (*all_)[rows_[r]];
            if (nr.bin.empty() && nr.lo == nr.up) active_[r] = 1;
        }
        rebuild();
    }

    struct Result {
        lp::Status status = lp::Status::Optimal;
        double obj = 0.0;
    };

    Result solve(const Domain& dom) {
        if (!compute_bounds(dom) && cached_valid_) {
            return cached_; // node-level bounds identical to the applied ones
        }
        apply_bounds();
        Result res;
        for (int round = 0;; ++round) {
            auto st = sx_.solve();
            if (st != lp::Status::Optimal) {
                res.status = st;
                cached_valid_ = st == lp::Status::Infeasible;
                cached_ = res;
                return res;
            }
            if (!activate_violated()) break;
            if (round > 500) throw SolveError("row activation did not settle");
        }
        res.obj = sx_.objective();
        cached_ = res;
        cached_valid_ = true;
        return res;
    }

    void collect(std::vector<double>& x) const {
        const auto& v = sx_.col_values();
        for (std::size_t k = 0; k < cols_.size(); ++k) x[cols_[k]] = v[k];
    }

    const std::vector<int>& cols() const { return cols_; }

private:
    void rebuild() {
        // map: row id -> previous logical state (if it was active)
        std::map<int, lp::VarState> old_logical;
        std::vector<lp::VarState> old_cols;
        if (loaded_) {
            lp::Basis old = sx_.basis();
            int ncols = static_cast<int>(cols_.size());
            old_cols.assign(old.state.begin(), old.state.begin() + ncols);
            for (std::size_t li = 0; li < lp_rows_.size(); ++li)
                old_logical[lp_rows_[li]] = old.state[ncols + li];
        }
        lp::Problem p = base_;
        lp_rows_.clear();
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            if (!active_[r]) continue;
            const NormRow& nr = (*all_)[rows_[r]];
            std::vector<std::pair<int, double>> coef;
            coef.reserve(nr.cont.size());
            for (auto& [g, a] : nr.cont) coef.push_back({local_[g], a});
            p.add_row(nr.lo, nr.up, std::move(coef)); // bounds overwritten per solve
            lp_rows_.push_back(static_cast<int>(r));
        }
        bool have_basis = loaded_;
        sx_.load(p);
        if (have_basis) {
            lp::Basis nb;
            nb.state.assign(p.num_cols() + p.num_rows(), lp::VarState::Basic);
            for (int j = 0; j < p.num_cols(); ++j) nb.state[j] = old_cols[j];
            for (std::size_t li = 0; li < lp_rows_.size(); ++li) {
                auto it = old_logical.find(lp_rows_[li]);
                nb.state[p.num_cols() + li] =
                    it != old_logical.end() ? it->second : lp::VarState::Basic;
            }
            sx_.set_basis(nb);
        }
        loaded_ = true;
        cached_valid_ = false;
        applied_valid_ = false;
    }

    // returns true when the bounds changed vs the currently applied ones
    bool compute_bounds(const Domain& dom) {
        row_lo_.resize(rows_.size());
        row_up_.resize(rows_.size());
        bool changed = !applied_valid_;
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            const NormRow& nr = (*all_)[rows_[r]];
            double lo = nr.lo, up = nr.up;
            if (!nr.bin.empty()) {
                auto [mn, mx] = bin_interval(nr, dom);
                if (std::isfinite(lo)) lo -= mx;
                if (std::isfinite(up)) up -= mn;
            }
            if (!applied_valid_ || row_lo_[r] != lo || row_up_[r] != up) changed = true;
            row_lo_[r] = lo;
            row_up_[r] = up;
        }
        return changed;
    }

    void apply_bounds() {
        for (std::size_t li = 0; li < lp_rows_.size(); ++li)
            sx_.set_row_bounds(static_cast<int>(li), row_lo_[lp_rows_[li]],
                               row_up_[lp_rows_[li]]);
        applied_valid_ = true;
        cached_valid_ = false;
    }

    bool activate_violated() {
        const auto& x = sx_.col_values();
        std::vector<int> add;
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            if (active_[r]) continue;
            const NormRow& nr = (*all_)[rows_[r]];
            double act = 0.0;
            for (auto& [g, a] : nr.cont) act += a * x[local_[g]];
            double scale = 1.0 + std::abs(act);
            if (act < row_lo_[r] - 1e-9 * scale || act > row_up_[r] + 1e-9 * scale)
                add.push_back(static_cast<int>(r));
        }
        if (add.empty()) return false;
        for (int r : add) active_[r] = 1;
        rebuild();
        apply_bounds();
        return true;
    }

    std::vector<int> cols_, rows_;
    const std::vector<NormRow>* all_ = nullptr;
    std::vector<int> local_;
    lp::Problem base_;
    std::vector<char> active_;
    std::vector<int> lp_rows_; // active index -> rows_ index
    std::vector<double> row_lo_, row_up_;
    lp::Simplex sx_;
    bool loaded_ = false;
    bool applied_valid_ = false;
    bool cached_valid_ = false;
    Result cached_;
};

struct Node {
    double bound;
    std::int64_t id;
    Domain dom;
    bool operator<(const Node& o) const {
        if (bound != o.bound) return bound > o.bound; // min-heap
        return id > o.id;
    }
};

class BnbSolver {
public:
    BnbSolver(const MipInstance& m, const SolveOptions& opt, bool allow_bracket)
        : m_(m), opt_(opt), allow_bracket_(allow_bracket), t0_(Clock::now()) {}

    MipSolution run() {
        m_.validate();
        normalize();
        if (allow_bracket_ && should_bracket()) {
            auto res = bracket_solve();
            if (res) return *res;
        }
        if (blocks_.empty()) build_blocks();
        return search();
    }

private:
    // ------------------------------ preparation ------------------------------
    void normalize() {
        bin_pos_.assign(m_.num_vars(), -1);
        for (int j = 0; j < m_.num_vars(); ++j) {
            if (m_.var(j).kind == VarKind::Binary) {
                bin_pos_[j] = static_cast<int>(bins_.size());
                bins_.push_back(j);
            }
        }
        rows_.reserve(m_.rows().size());
        for (auto& r : m_.rows()) {
            NormRow nr;
            for (auto& [j, a] : r.coef) {
                if (a == 0.0) continue;
                if (bin_pos_[j] >= 0) nr.bin.push_back({bin_pos_[j], a});
                else nr.cont.push_back({j, a});
            }
            if (r.sense == Sense::LessEqual) nr.up = r.rhs;
            else if (r.sense == Sense::GreaterEqual) nr.lo = r.rhs;
            else nr.lo = nr.up = r.rhs;
            rows_.push_back(std::move(nr));
        }
        root_dom_.lo.resize(bins_.size());
        root_dom_.up.resize(bins_.size());
        for (std::size_t k = 0; k < bins_.size(); ++k) {
            root_dom_.lo[k] = static_cast<std::int8_t>(std::ceil(m_.var(bins_[k]).lo - 1e-9));
            root_dom_.up[k] = static_cast<std::int8_t>(std::floor(m_.var(bins_[k]).up + 1e-9));
            if (root_dom_.lo[k] > root_dom_.up[k])
                throw ValidationError("binary with empty domain: " + m_.var(bins_[k]).name);
        }
        score_.assign(bins_.size(), 0);
        for (auto& nr : rows_)
            for (auto& [k, g] : nr.bin) {
                (void)g;
                ++score_[k];
            }
    }

    void build_blocks() {
        parent_.resize(m_.num_vars());
        for (int j = 0; j < m_.num_vars(); ++j) parent_[j] = j;
        for (auto& nr : rows_)
            for (std::size_t i = 1; i < nr.cont.size(); ++i)
                unite(nr.cont[0].first, nr.cont[i].first);

        std::map<int, int> root_to_block;
        std::vector<std::vector<int>> bcols, brows;
        std::vector<char> in_row(m_.num_vars(), 0);
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            if (rows_[r].cont.empty()) continue; // pure-binary row: propagation only
            int root = find(rows_[r].cont[0].first);
            auto it = root_to_block.find(root);
            int b;
            if (it == root_to_block.end()) {
                b = static_cast<int>(bcols.size());
                root_to_block[root] = b;
                bcols.push_back({});
                brows.push_back({});
            } else {
                b = it->second;
            }
            brows[b].push_back(static_cast<int>(r));
            for (auto& [j, a] : rows_[r].cont) {
                (void)a;
                if (!in_row[j]) {
                    in_row[j] = 1;
                    bcols[b].push_back(j);
                }
            }
        }
        for (int j = 0; j < m_.num_vars(); ++j)
            if (bin_pos_[j] < 0 && !in_row[j]) loose_.push_back(j);
        blocks_.resize(bcols.size());
        for (std::size_t b = 0; b < bcols.size(); ++b)
            blocks_[b].init(m_, std::move(bcols[b]), std::move(brows[b]), &rows_);
        block_root_bound_.assign(blocks_.size(), -kInf);
    }

    int find(int x) { return parent_[x] == x ? x : parent_[x] = find(parent_[x]); }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[a] = b;
    }

    // ------------------------------ propagation ------------------------------
    bool propagate(Domain& dom) {
        wlo_.resize(m_.num_vars());
        wup_.resize(m_.num_vars());
        for (int j = 0; j < m_.num_vars(); ++j) {
            if (bin_pos_[j] >= 0) {
                wlo_[j] = dom.lo[bin_pos_[j]];
                wup_[j] = dom.up[bin_pos_[j]];
            } else {
                wlo_[j] = m_.var(j).lo;
                wup_[j] = m_.var(j).up;
            }
        }
        auto term_lo = [&](int j, double a) { return a >= 0 ? a * wlo_[j] : a * wup_[j]; };
        auto term_up = [&](int j, double a) { return a >= 0 ? a * wup_[j] : a * wlo_[j]; };
        const double eps = 1e-9;
        for (int pass = 0; pass < 4; ++pass) {
            bool changed = false;
            for (auto& nr : rows_) {
                double smin = 0.0, smax = 0.0;
                auto each = [&](auto&& fn) {
                    for (auto& [j, a] : nr.cont) fn(j, a);
                    for (auto& [k, g] : nr.bin) fn(bins_[k], g);
                };
                each([&](int j, double a) {
                    smin += term_lo(j, a);
                    smax += term_up(j, a);
                });
                if (smin > nr.up + eps || smax < nr.lo - eps) return false;
                bool bad = false;
                each([&](int j, double a) {
                    if (bad || a == 0.0) return;
                    double rest_min = smin - term_lo(j, a);
                    double rest_max = smax - term_up(j, a);
                    double lo_t = std::isfinite(nr.lo) && std::isfinite(rest_max)
                                      ? nr.lo - rest_max : -kInf;
                    double up_t = std::isfinite(nr.up) && std::isfinite(rest_min)
                                      ? nr.up - rest_min : kInf;
                    double nlo = wlo_[j], nup = wup_[j];
                    if (a > 0) {
                        if (std::isfinite(lo_t)) nlo = std::max(nlo, lo_t / a);
                        if (std::isfinite(up_t)) nup = std::min(nup, up_t / a);
                    } else {
                        if (std::isfinite(up_t)) nlo = std::max(nlo, up_t / a);
                        if (std::isfinite(lo_t)) nup = std::min(nup, lo_t / a);
                    }
                    if (bin_pos_[j] >= 0) {
                        nlo = nlo > eps ? 1.0 : wlo_[j];
                        nup = nup < 1.0 - eps ? 0.0 : wup_[j];
                    }
                    if (nlo > nup + eps) {
                        bad = true;
                        return;
                    }
                    if (nlo > wlo_[j] + eps || nup < wup_[j] - eps) {
                        wlo_[j] = std::max(wlo_[j], nlo);
                        wup_[j] = std::min(wup_[j], nup);
                        changed = true;
                    }
                });
                if (bad) return false;
            }
            if (!changed) break;
        }
        for (std::size_t k = 0; k < bins_.size(); ++k) {
            dom.lo[k] = static_cast<std::int8_t>(wlo_[bins_[k]] > 0.5 ? 1 : 0);
            dom.up[k] = static_cast<std::int8_t>(wup_[bins_[k]] < 0.5 ? 0 : 1);
            if (dom.lo[k] > dom.up[k]) return false;
        }
        return true;
    }

    // ------------------------------- evaluation -------------------------------
    struct Eval {
        bool feasible = false;
        double bound = kInf;
    };

    double binary_cost_bound(const Domain& dom) const {
        double c = 0.0;
        for (std::size_t k = 0; k < bins_.size(); ++k) {
            double cj = m_.var(bins_[k]).obj;
            c += std::min(cj * dom.lo[k], cj * dom.up[k]);
        }
        return c;
    }

    double loose_cost() const {
        double c = 0.0;
        for (int j : loose_) {
            double cj = m_.var(j).obj;
            if (cj > 0) {
                if (!std::isfinite(m_.var(j).lo)) throw SolveError("unbounded loose column");
                c += cj * m_.var(j).lo;
            } else if (cj < 0) {
                if (!std::isfinite(m_.var(j).up)) throw SolveError("unbounded loose column");
                c += cj * m_.var(j).up;
            }
        }
        return c;
    }

    // abort_above: once the partial bound provably exceeds it, stop early and
    // return a valid (under-)bound built from per-block root bounds.
    Eval evaluate(Domain& dom, double abort_above = kInf) {
        Eval ev;
        if (!propagate(dom)) return ev;
        double total = m_.obj_constant() + binary_cost_bound(dom) + loose_cost();
        double rest = 0.0;
        for (double rb : block_root_bound_)
            rest += std::isfinite(rb) ? rb : 0.0;
        for (std::size_t b = 0; b < blocks_.size(); ++b) {
            rest -= std::isfinite(block_root_bound_[b]) ? block_root_bound_[b] : 0.0;
            auto r = blocks_[b].solve(dom);
            if (r.status == lp::Status::Infeasible) return ev;
            if (r.status != lp::Status::Optimal)
                throw SolveError("component LP did not solve to optimality (status " +
                                 std::to_string(static_cast<int>(r.status)) + ")");
            total += r.obj;
            if (total + rest > abort_above) {
                ev.feasible = true;
                ev.bound = total + rest; // valid lower bound, enough to prune
                return ev;
            }
        }
        ev.feasible = true;
        ev.bound = total;
        return ev;
    }

    double try_incumbent(Domain& dom) {
        Eval ev = evaluate(dom);
        if (!ev.feasible) return kInf;
        std::vector<double> x(m_.num_vars(), 0.0);
        for (auto& b : blocks_) b.collect(x);
        for (std::size_t k = 0; k < bins_.size(); ++k) x[bins_[k]] = dom.lo[k];
        for (int j : loose_) {
            double cj = m_.var(j).obj;
            if (cj > 0) x[j] = m_.var(j).lo;
            else if (cj < 0) x[j] = m_.var(j).up;
            else x[j] = std::isfinite(m_.var(j).lo) ? m_.var(j).lo
                        : std::isfinite(m_.var(j).up) ? m_.var(j).up : 0.0;
        }
        if (max_violation(m_, x) > opt_.feas_tol) return kInf;
        if (ev.bound < incumbent_obj_ - 1e-12) {
            incumbent_obj_ = ev.bound;
            incumbent_x_ = std::move(x);
        }
        return ev.bound;
    }

    int pick_branch(const Domain& dom) const {
        int best = -1, best_score = -1;
        for (std::size_t k = 0; k < bins_.size(); ++k) {
            if (dom.decided(static_cast<int>(k))) continue;
            if (score_[k] > best_score) {
                best_score = score_[k];
                best = static_cast<int>(k);
            }
        }
        return best;
    }

    void dive(Domain dom) {
        for (;;) {
            if (!propagate(dom)) return;
            int k = pick_branch(dom);
            if (k < 0) break;
            std::int8_t prefer = 1;
            if (!incumbent_x_.empty())
                prefer = incumbent_x_[bins_[k]] > 0.5 ? 1 : 0;
            Domain trial = dom;
            trial.lo[k] = trial.up[k] = prefer;
            if (propagate(trial)) {
                dom = std::move(trial);
            } else {
                dom.lo[k] = dom.up[k] = static_cast<std::int8_t>(1 - prefer);
                if (!propagate(dom)) return;
            }
        }
        try_incumbent(dom);
    }

    // --------------------------------- search ---------------------------------
    MipSolution search() {
        MipSolution out;
        Domain root = root_dom_;
        Eval rv = evaluate(root);
        if (!rv.feasible) {
            out.status = SolveStatus::Infeasible;
            out.wall_time_s = now_s(t0_);
            return out;
        }
        // remember per-block root bounds for early aborts
        for (std::size_t b = 0; b < blocks_.size(); ++b) {
            auto r = blocks_[b].solve(root);
            block_root_bound_[b] = r.obj;
        }
        if (root.count_undecided() == 0) {
            try_incumbent(root);
            finish(out, rv.bound);
            return out;
        }
        dive(root);

        std::priority_queue<Node> pq;
        std::int64_t node_id = 0;
        pq.push(Node{rv.bound, node_id++, root});
        double lb = rv.bound;
        std::int64_t since_dive = 0;

        while (!pq.empty()) {
            if (now_s(t0_) > opt_.time_limit_s) {
                finish(out, lb);
                out.status = SolveStatus::TimeLimit;
                return out;
            }
            Node nd = pq.top();
            pq.pop();
            lb = nd.bound;
            if (!pq.empty()) lb = std::min(lb, pq.top().bound);
            lb = std::min(lb, incumbent_obj_);
            if (gap_of(lb) <= opt_.gap) {
                finish(out, lb);
                return out;
            }
            Eval ev = evaluate(nd.dom, cutoff());
            ++out.nodes;
            if (!ev.feasible) continue;
            if (ev.bound >= cutoff()) continue;
            if (!pq.empty() && ev.bound > pq.top().bound + 1e-9 * (1 + std::abs(ev.bound))) {
                pq.push(Node{ev.bound, node_id++, std::move(nd.dom)});
                continue;
            }
            if (nd.dom.count_undecided() == 0) {
                try_incumbent(nd.dom);
                continue;
            }
            if (++since_dive >= 64) {
                since_dive = 0;
                dive(nd.dom);
            }
            int k = pick_branch(nd.dom);
            std::int8_t prefer = 1;
            if (!incumbent_x_.empty()) prefer = incumbent_x_[bins_[k]] > 0.5 ? 1 : 0;
            for (int pass = 0; pass < 2; ++pass) {
                std::int8_t val = pass == 0 ? prefer : static_cast<std::int8_t>(1 - prefer);
                Node child{ev.bound, node_id++, nd.dom};
                child.dom.lo[k] = child.dom.up[k] = val;
                if (propagate(child.dom)) {
                    if (child.dom.count_undecided() == 0) try_incumbent(child.dom);
                    else pq.push(std::move(child));
                }
            }
        }
        finish(out, incumbent_obj_);
        return out;
    }

    double cutoff() const {
        if (!std::isfinite(incumbent_obj_)) return kInf;
        return incumbent_obj_ - 1e-9 * (1.0 + std::abs(incumbent_obj_));
    }

    double gap_of(double lb) const {
        if (!std::isfinite(incumbent_obj_)) return kInf;
        return (incumbent_obj_ - lb) / std::max(1e-10, std::abs(incumbent_obj_));
    }

    void finish(MipSolution& out, double lb) {
        out.wall_time_s = now_s(t0_);
        if (!std::isfinite(incumbent_obj_)) {
            out.status = SolveStatus::Infeasible;
            return;
        }
        out.objective = incumbent_obj_;
        out.values = incumbent_x_;
        out.best_bound = std::min(lb, incumbent_obj_);
        out.mip_gap = gap_of(out.best_bound);
        out.status = out.mip_gap <= opt_.gap ? SolveStatus::Optimal : SolveStatus::Feasible;
    }

    // ------------------------------- bracketing -------------------------------
    bool should_bracket() const {
        if (bins_.size() <= 40) return false;
        std::set<int> ts;
        for (int j : bins_) {
            const VarMeta* mt = m_.meta(j);
            if (!mt || mt->timestep < 0) return false;
            ts.insert(mt->timestep);
        }
        return ts.size() >= 2;
    }

    std::optional<MipSolution> bracket_solve();

    const MipInstance& m_;
    SolveOptions opt_;
    bool allow_bracket_;
    Clock::time_point t0_;

    std::vector<int> bins_;
    std::vector<int> bin_pos_;
    std::vector<NormRow> rows_;
    std::vector<int> parent_;
    std::vector<int> score_;
    std::vector<Block> blocks_;
    std::vector<double> block_root_bound_;
    std::vector<int> loose_;
    std::vector<double> wlo_, wup_;
    Domain root_dom_;

    double incumbent_obj_ = kInf;
    std::vector<double> incumbent_x_;
};

// Splits an instance into independent sub-instances (connected components of
// the variable/row graph) and solves each; used for the decomposed lower
// bound. Returns summed best bounds, or nullopt if any part is infeasible.
std::optional<double> solve_decomposed(const MipInstance& m, const SolveOptions& opt) {
    int n = m.num_vars();
    std::vector<int> parent(n);
    for (int j = 0; j < n; ++j) parent[j] = j;
    std::function<int(int)> find = [&](int x) {
        return parent[x] == x ? x : parent[x] = find(parent[x]);
    };
    auto unite = [&](int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[a] = b;
    };
    for (auto& r : m.rows())
        for (std::size_t i = 1; i < r.coef.size(); ++i)
            unite(r.coef[0].first, r.coef[i].first);

    std::map<int, int> group_of_root;
    std::vector<MipInstance> subs;
    std::vector<std::vector<int>> gvars;
    std::vector<int> var_to_sub(n, -1), var_local(n, -1);
    for (int j = 0; j < n; ++j) {
        int root = find(j);
        auto it = group_of_root.find(root);
        int g;
        if (it == group_of_root.end()) {
            g = static_cast<int>(subs.size());
            group_of_root[root] = g;
            subs.emplace_back();
            gvars.push_back({});
        } else {
            g = it->second;
        }
        const auto& v = m.var(j);
        var_local[j] = subs[g].add_var(v.name, v.lo, v.up, v.kind, v.obj);
        var_to_sub[j] = g;
        if (const VarMeta* mt = m.meta(j)) subs[g].set_meta(var_local[j], *mt);
        gvars[g].push_back(j);
    }
    for (auto& r : m.rows()) {
        if (r.coef.empty()) {
            double lhs = 0.0;
            bool ok = r.sense == Sense::LessEqual    ? lhs <= r.rhs + 1e-9
                      : r.sense == Sense::GreaterEqual ? lhs >= r.rhs - 1e-9
                                                       : std::abs(lhs - r.rhs) <= 1e-9;
            if (!ok) return std::nullopt;
            continue;
        }
        int g = var_to_sub[r.coef[0].first];
        std::vector<std::pair<int, double>> coef;
        for (auto& [j, a] : r.coef) coef.push_back({var_local[j], a});
        subs[g].add_row(r.name, r.sense, r.rhs, std::move(coef));
    }
    double total = m.obj_constant();
    for (auto& sub : subs) {
        BnbSolver solver(sub, opt, false);
        MipSolution s = solver.run();
        if (s.status == SolveStatus::Infeasible) return std::nullopt;
        total += s.best_bound;
    }
    return total;
}

std::optional<MipSolution> BnbSolver::bracket_solve() {
    std::map<std::string, std::vector<int>> groups;
    for (int j : bins_) groups[m_.meta(j)->entity].push_back(j);
    bool any_group = false;
    for (auto& [e, g] : groups)
        if (g.size() >= 2) any_group = true;
    if (!any_group) return std::nullopt;

    // (a) incumbent: one value per entity over the whole horizon
    MipInstance restricted = m_;
    for (auto& [e, g] : groups)
        for (std::size_t i = 1; i < g.size(); ++i)
            restricted.add_row("onetopo_" + e + "_" + std::to_string(i), Sense::Equal, 0.0,
                               {{g[0], 1.0}, {g[i], -1.0}});
    BnbSolver inc_solver(restricted, opt_, false);
    MipSolution inc = inc_solver.run();
    if (inc.status == SolveStatus::Infeasible) return std::nullopt;

    // (b) lower bound: drop timestep-coupling rows, solve the separable rest
    auto spans = [&](const MipRow& r) {
        std::set<int> ts;
        for (auto& [j, a] : r.coef) {
            (void)a;
            const VarMeta* mt = m_.meta(j);
            if (mt && mt->timestep >= 0) ts.insert(mt->timestep);
        }
        return ts.size() >= 2;
    };
    MipInstance relaxed;
    for (int j = 0; j < m_.num_vars(); ++j) {
        const auto& v = m_.var(j);
        relaxed.add_var(v.name, v.lo, v.up, v.kind, v.obj);
        if (const VarMeta* mt = m_.meta(j)) relaxed.set_meta(j, *mt);
    }
    relaxed.add_obj_constant(m_.obj_constant());
    for (auto& r : m_.rows())
        if (!spans(r)) relaxed.add_row(r.name, r.sense, r.rhs, r.coef);
    SolveOptions sub_opt = opt_;
    sub_opt.gap = std::min(opt_.gap * 0.2, 1e-4);
    auto lb_opt = solve_decomposed(relaxed, sub_opt);
    if (!lb_opt) {
        MipSolution out;
        out.status = SolveStatus::Infeasible;
        out.wall_time_s = now_s(t0_);
        return out;
    }
    double lb = *lb_opt;

    double gap = (inc.objective - lb) / std::max(1e-10, std::abs(inc.objective));
    if (gap <= opt_.gap || inc.status == SolveStatus::TimeLimit) {
        inc.best_bound = std::min(lb, inc.objective);
        inc.mip_gap = std::max(gap, 0.0);
        if (inc.mip_gap <= opt_.gap) inc.status = SolveStatus::Optimal;
        inc.wall_time_s = now_s(t0_);
        return inc;
    }
    // bracket too wide: full search seeded with the incumbent
    incumbent_obj_ = inc.objective;
    incumbent_x_ = inc.values;
    build_blocks();
    MipSolution full = search();
    if (std::isfinite(lb) && full.best_bound < lb && !full.values.empty()) {
        full.best_bound = lb;
        full.mip_gap = (full.objective - lb) / std::max(1e-10, std::abs(full.objective));
        if (full.status == SolveStatus::Feasible && full.mip_gap <= opt_.gap)
            full.status = SolveStatus::Optimal;
    }
    return full;
}

class BnbBackend : public Backend {
public:
    std::string name() const override { return "bnb"; }
    MipSolution solve(const MipInstance& m, const SolveOptions& opt) override {
        BnbSolver solver(m, opt, true);
        return solver.run();
    }
};

} // namespace

void register_builtin_backends(BackendRegistry& reg) {
    reg.register_backend("bnb",
                         [] { return std::unique_ptr<Backend>(new BnbBackend()); });
}

} // namespace gridtopo::mip
