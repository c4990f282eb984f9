#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gridtopo/common.hpp"

namespace gridtopo::mip {

enum class VarKind : char { Continuous = 'c', Binary = 'b' };

enum class Sense : char { LessEqual = 'L', Equal = 'E', GreaterEqual = 'G' };

/// What a variable stands for in the source model; carried so that solvers,
/// reports and tests can interpret solutions without the builder present.
struct VarMeta {
    std::string entity; // e.g. "sw:12", "gen:3", "bus:6"
    int timestep = -1;  // t index or -1
    int scenario = -1;  // w index or -1
};

struct MipVar {
    std::string name;
    double lo = 0.0;
    double up = 0.0;
    VarKind kind = VarKind::Continuous;
    double obj = 0.0;
};

struct MipRow {
    std::string name;
    std::vector<std::pair<int, double>> coef; // column index, value
    Sense sense = Sense::LessEqual;
    double rhs = 0.0;
};

class MipInstance {
public:
    int add_var(const std::string& name, double lo, double up, VarKind kind,
                double obj = 0.0);
    int add_row(const std::string& name, Sense sense, double rhs,
                std::vector<std::pair<int, double>> coef);
    void set_obj(int var, double coef);
    void add_obj_constant(double c) { obj_constant_ += c; }
    void set_meta(int var, VarMeta meta);

    int num_vars() const { return static_cast<int>(vars_.size()); }
    int num_rows() const { return static_cast<int>(rows_.size()); }
    int num_binaries() const;
    const MipVar& var(int j) const { return vars_[j]; }
    MipVar& var(int j) { return vars_[j]; }
    const MipRow& row(int i) const { return rows_[i]; }
    const std::vector<MipVar>& vars() const { return vars_; }
    const std::vector<MipRow>& rows() const { return rows_; }
    double obj_constant() const { return obj_constant_; }
    const VarMeta* meta(int var) const;
    std::optional<int> find_var(const std::string& name) const;

    /// Throws ValidationError on dangling column references, binary bounds
    /// outside [0,1], or duplicate names.
    void validate() const;

private:
    std::vector<MipVar> vars_;
    std::vector<MipRow> rows_;
    std::map<std::string, int> by_name_;
    std::map<int, VarMeta> meta_;
    double obj_constant_ = 0.0;
};

enum class SolveStatus { Optimal, Feasible, Infeasible, TimeLimit };

struct MipSolution {
    SolveStatus status = SolveStatus::Infeasible;
    double objective = 0.0;
    double best_bound = -kInf;
    std::vector<double> values;
    double mip_gap = kInf; // relative proven gap
    double wall_time_s = 0.0;
    std::int64_t nodes = 0;
};

struct SolveOptions {
    double gap = 1e-3;
    double time_limit_s = kInf;
    double feas_tol = 1e-6;
    double int_tol = 1e-6;
};

/// A solve backend. Registered by name; `solve` must return solutions that
/// satisfy every constraint within feas_tol and prove the reported gap.
class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string name() const = 0;
    virtual MipSolution solve(const MipInstance& m, const SolveOptions& opt) = 0;
};

class BackendRegistry;

/// Defined by the builtin solver translation unit; invoked on first registry
/// access so the static library keeps the backend linked in.
void register_builtin_backends(BackendRegistry& reg);

/// Name -> factory registry. The builtin branch-and-bound registers itself;
/// more backends can be added without touching callers.
class BackendRegistry {
public:
    static BackendRegistry& instance();
    void register_backend(const std::string& name,
                          std::function<std::unique_ptr<Backend>()> factory);
    std::unique_ptr<Backend> create(const std::string& name) const;
    std::vector<std::string> names() const;

private:
    std::map<std::string, std::function<std::unique_ptr<Backend>()>> factories_;
};

/// Solves with the named backend ("" = default). Throws SolveError when no
/// backend is registered under the name.
MipSolution solve(const MipInstance& m, const std::string& backend_name,
                  const SolveOptions& opt);

/// Exhaustive oracle: solves the continuous relaxation for every feasible
/// assignment of the binaries (pruned through binary-only rows). Refuses
/// instances with more than 24 binaries. `stats_enumerated`, when given,
/// receives the number of assignments whose LP was actually solved.
MipSolution enumerate_binaries(const MipInstance& m, const SolveOptions& opt,
                               std::int64_t* stats_enumerated = nullptr);

/// Residual of the most violated row at `x` (0 when feasible).
double max_violation(const MipInstance& m, const std::vector<double>& x);

} // namespace gridtopo::mip
