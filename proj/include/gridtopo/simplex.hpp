#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "gridtopo/common.hpp"

namespace gridtopo::lp {

/// Linear program in bound form:
///   minimize  obj·x + obj_constant
///   s.t.      row_lo <= A x <= row_up,  col_lo <= x <= col_up
/// Equalities are rows with row_lo == row_up. Infinities mark absent bounds.
struct Problem {
    std::vector<double> col_lo, col_up, obj;
    double obj_constant = 0.0;

    struct Row {
        std::vector<std::pair<int, double>> coef; // (column, value), column unique per row
        double lo = -kInf;
        double up = kInf;
    };
    std::vector<Row> rows;

    int add_col(double lo, double up, double cost = 0.0) {
        col_lo.push_back(lo);
        col_up.push_back(up);
        obj.push_back(cost);
        return static_cast<int>(col_lo.size()) - 1;
    }
    int add_row(double lo, double up, std::vector<std::pair<int, double>> coef) {
        rows.push_back(Row{std::move(coef), lo, up});
        return static_cast<int>(rows.size()) - 1;
    }
    int num_cols() const { return static_cast<int>(col_lo.size()); }
    int num_rows() const { return static_cast<int>(rows.size()); }
};

enum class Status { Optimal, Infeasible, Unbounded, IterLimit };

/// Variable position in the simplex dictionary. Structural columns come first,
/// then one logical per row.
enum class VarState : std::uint8_t { Basic, AtLower, AtUpper, FreeZero };

struct Basis {
    std::vector<VarState> state; // size num_cols + num_rows
};

/// Bounded-variable revised simplex with a dense LU basis (Eigen) and
/// product-form eta updates. The dual algorithm is the workhorse: cold starts
/// use the all-logical basis, which is dual feasible as long as every free
/// column has zero cost (asserted), and warm starts after bound changes keep
/// dual feasibility because costs never change. A primal phase-2 is provided
/// for objective-only warm starts.
class Simplex {
public:
    Simplex();
    ~Simplex();
    Simplex(Simplex&&) noexcept;
    Simplex& operator=(Simplex&&) noexcept;

    void load(const Problem& p);

    /// Bound edits between solves; basis is retained.
    void set_col_bounds(int j, double lo, double up);
    void set_row_bounds(int i, double lo, double up);
    void set_obj(int j, double cost);
    void set_obj_constant(double c);

    Status solve(int iter_limit = 0); // 0 = automatic limit
    Status solve_primal(int iter_limit = 0);

    double objective() const;
    const std::vector<double>& col_values() const;
    std::vector<double> row_values() const;
    /// Row duals y with the sign convention: y_i > 0 binds the row at its
    /// lower bound, y_i < 0 at its upper bound.
    std::vector<double> duals() const;
    std::vector<double> reduced_costs() const;

    Basis basis() const;
    void set_basis(const Basis& b);

    std::int64_t iterations() const;
    int num_cols() const;
    int num_rows() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace gridtopo::lp
