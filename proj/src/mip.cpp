#include "gridtopo/mip.hpp"

#include <algorithm>
#include <cmath>

#include "gridtopo/simplex.hpp"

namespace gridtopo::mip {

int MipInstance::add_var(const std::string& name, double lo, double up, VarKind kind,
                         double obj) {
    if (by_name_.count(name))
        throw ValidationError("duplicate variable name: " + name);
    if (kind == VarKind::Binary && (lo < 0.0 || up > 1.0))
        throw ValidationError("binary variable with bounds outside [0,1]: " + name);
    vars_.push_back(MipVar{name, lo, up, kind, obj});
    by_name_[name] = static_cast<int>(vars_.size()) - 1;
    return static_cast<int>(vars_.size()) - 1;
}

int MipInstance::add_row(const std::string& name, Sense sense, double rhs,
                         std::vector<std::pair<int, double>> coef) {
    for (auto& [j, a] : coef) {
        (void)a;
        if (j < 0 || j >= num_vars())
            throw ValidationError("row " + name + " references unknown column");
    }
    rows_.push_back(MipRow{name, std::move(coef), sense, rhs});
    return static_cast<int>(rows_.size()) - 1;
}

void MipInstance::set_obj(int var, double coef) { vars_.at(var).obj = coef; }

void MipInstance::set_meta(int var, VarMeta meta) { meta_[var] = std::move(meta); }

int MipInstance::num_binaries() const {
    int k = 0;
    for (auto& v : vars_)
        if (v.kind == VarKind::Binary) ++k;
    return k;
}

const VarMeta* MipInstance::meta(int var) const {
    auto it = meta_.find(var);
    return it == meta_.end() ? nullptr : &it->second;
}

std::optional<int> MipInstance::find_var(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
}

void MipInstance::validate() const {
    for (auto& v : vars_) {
        if (v.lo > v.up)
            throw ValidationError("variable " + v.name + " has crossed bounds");
        if (v.kind == VarKind::Binary && (v.lo < 0.0 || v.up > 1.0))
            throw ValidationError("binary variable " + v.name + " outside [0,1]");
        if (!std::isfinite(v.obj))
            throw ValidationError("non-finite objective on " + v.name);
    }
    for (auto& r : rows_) {
        for (auto& [j, a] : r.coef) {
            if (j < 0 || j >= num_vars())
                throw ValidationError("row " + r.name + " references unknown column");
            if (!std::isfinite(a))
                throw ValidationError("non-finite coefficient in row " + r.name);
        }
        if (!std::isfinite(r.rhs))
            throw ValidationError("non-finite rhs in row " + r.name);
    }
}

double max_violation(const MipInstance& m, const std::vector<double>& x) {
    double worst = 0.0;
    for (auto& r : m.rows()) {
        double act = 0.0;
        for (auto& [j, a] : r.coef) act += a * x[j];
        double v = 0.0;
        switch (r.sense) {
            case Sense::LessEqual: v = act - r.rhs; break;
            case Sense::GreaterEqual: v = r.rhs - act; break;
            case Sense::Equal: v = std::abs(act - r.rhs); break;
        }
        worst = std::max(worst, v);
    }
    for (int j = 0; j < m.num_vars(); ++j) {
        worst = std::max(worst, m.var(j).lo - x[j]);
        worst = std::max(worst, x[j] - m.var(j).up);
    }
    return worst;
}

BackendRegistry& BackendRegistry::instance() {
    static BackendRegistry reg;
    static bool builtin_done = [] {
        register_builtin_backends(reg);
        return true;
    }();
    (void)builtin_done;
    return reg;
}

void BackendRegistry::register_backend(const std::string& name,
                                       std::function<std::unique_ptr<Backend>()> factory) {
    factories_[name] = std::move(factory);
}

std::unique_ptr<Backend> BackendRegistry::create(const std::string& name) const {
    auto it = factories_.find(name);
    if (it == factories_.end()) return nullptr;
    return it->second();
}

std::vector<std::string> BackendRegistry::names() const {
    std::vector<std::string> out;
    for (auto& [k, v] : factories_) {
        (void)v;
        out.push_back(k);
    }
    return out;
}

MipSolution solve(const MipInstance& m, const std::string& backend_name,
                  const SolveOptions& opt) {
    std::string name = backend_name.empty() ? "bnb" : backend_name;
    auto backend = BackendRegistry::instance().create(name);
    if (!backend)
        throw SolveError("no solve backend registered under '" + name +
                         "' (available: export the model as MPS and solve externally)");
    return backend->solve(m, opt);
}

// ----------------------------- enumeration oracle -----------------------------

namespace {

lp::Problem relaxation_of(const MipInstance& m) {
    lp::Problem p;
    for (auto& v : m.vars()) p.add_col(v.lo, v.up, v.obj);
    p.obj_constant = m.obj_constant();
    for (auto& r : m.rows()) {
        double lo = -kInf, up = kInf;
        if (r.sense == Sense::LessEqual) up = r.rhs;
        else if (r.sense == Sense::GreaterEqual) lo = r.rhs;
        else lo = up = r.rhs;
        p.add_row(lo, up, r.coef);
    }
    return p;
}

} // namespace

MipSolution enumerate_binaries(const MipInstance& m, const SolveOptions& opt,
                               std::int64_t* stats_enumerated) {
    m.validate();
    std::vector<int> bins;
    for (int j = 0; j < m.num_vars(); ++j)
        if (m.var(j).kind == VarKind::Binary) bins.push_back(j);
    if (bins.size() > 24)
        throw SolveError("enumerate_binaries refused: " + std::to_string(bins.size()) +
                         " binaries exceed the 24-binary limit");

    // rows touching only binaries, used to prune partial assignments
    std::vector<char> is_bin(m.num_vars(), 0);
    for (int j : bins) is_bin[j] = 1;
    std::vector<const MipRow*> bin_rows;
    for (auto& r : m.rows()) {
        bool all = !r.coef.empty();
        for (auto& [j, a] : r.coef) {
            (void)a;
            if (!is_bin[j]) { all = false; break; }
        }
        if (all) bin_rows.push_back(&r);
    }

    lp::Problem relax = relaxation_of(m);
    lp::Simplex sx;
    sx.load(relax);

    std::vector<int> assign(bins.size(), -1);
    MipSolution best;
    best.status = SolveStatus::Infeasible;
    best.objective = kInf;
    std::int64_t enumerated = 0;

    // partial feasibility: can every binary row still be satisfied?
    auto prunable = [&]() {
        for (auto* r : bin_rows) {
            double mn = 0.0, mx = 0.0;
            for (auto& [j, a] : r->coef) {
                double zl = m.var(j).lo, zu = m.var(j).up;
                auto it = std::lower_bound(bins.begin(), bins.end(), j);
                int k = static_cast<int>(it - bins.begin());
                if (assign[k] >= 0) zl = zu = assign[k];
                mn += std::min(a * zl, a * zu);
                mx += std::max(a * zl, a * zu);
            }
            double tol = 1e-9;
            if (r->sense == Sense::LessEqual && mn > r->rhs + tol) return true;
            if (r->sense == Sense::GreaterEqual && mx < r->rhs - tol) return true;
            if (r->sense == Sense::Equal && (mn > r->rhs + tol || mx < r->rhs - tol))
                return true;
        }
        return false;
    };

    std::function<void(std::size_t)> rec = [&](std::size_t k) {
        if (prunable()) return;
        if (k == bins.size()) {
            ++enumerated;
            for (std::size_t i = 0; i < bins.size(); ++i)
                sx.set_col_bounds(bins[i], assign[i], assign[i]);
            auto st = sx.solve();
            if (st == lp::Status::Optimal && sx.objective() < best.objective - 1e-12) {
                best.objective = sx.objective();
                best.values = sx.col_values();
                best.values.resize(m.num_vars());
                best.status = SolveStatus::Optimal;
            }
            return;
        }
        double zl = m.var(bins[k]).lo, zu = m.var(bins[k]).up;
        for (int v = static_cast<int>(zl); v <= static_cast<int>(zu); ++v) {
            assign[k] = v;
            rec(k + 1);
        }
        assign[k] = -1;
    };
    rec(0);

    if (stats_enumerated) *stats_enumerated = enumerated;
    if (best.status == SolveStatus::Optimal) {
        best.best_bound = best.objective;
        best.mip_gap = 0.0;
        (void)opt;
    }
    return best;
}

} // namespace gridtopo::mip
