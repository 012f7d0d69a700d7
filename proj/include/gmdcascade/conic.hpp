#pragma once

// Linear-objective programs with linear and second-order-cone constraints,
// and two bundled solvers for them.
//
// Both work on the homogeneous self-dual embedding of
//     minimize c'x  subject to  A x + s = b,  s in K
// with K a product of the zero cone, the nonnegative orthant and Lorentz
// cones, and report infeasible and unbounded programs from the embedding's
// certificates. The default is a primal-dual interior-point method
// (Nesterov-Todd scaling, Mehrotra predictor-corrector, sparse LDL' of the
// quasidefinite KKT system). The alternative is an operator-splitting scheme
// that alternates a linear solve with the embedding's skew operator and a
// projection onto the cone product; it is cheap per iteration but converges
// slowly on degenerate programs.

#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace gmdcascade::conic {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Affine expression sum(coef * x[var]) + constant.
struct LinearExpr {
    std::vector<std::pair<int, double>> terms;
    double constant = 0.0;

    LinearExpr() = default;
    LinearExpr(double c) : constant(c) {}  // NOLINT(google-explicit-constructor)
    LinearExpr(std::vector<std::pair<int, double>> t, double c = 0.0) : terms(std::move(t)), constant(c) {}

    static LinearExpr var(int index, double coef = 1.0) { return LinearExpr({{index, coef}}); }
    LinearExpr& add(int index, double coef) {
        terms.emplace_back(index, coef);
        return *this;
    }
    [[nodiscard]] double eval(const std::vector<double>& x) const;
};

enum class ConstraintKind { equality, inequality, soc, rotated_soc, bounds };

/// One constraint as added by the builders.
///  equality:    expr == 0
///  inequality:  expr <= 0
///  soc:         || cone_terms || <= expr
///  rotated_soc: u * v >= || cone_terms ||^2, u, v >= 0   (u = expr, v = expr2)
///  bounds:      lower <= x[var] <= upper
struct Constraint {
    ConstraintKind kind = ConstraintKind::equality;
    LinearExpr expr;
    LinearExpr expr2;
    std::vector<LinearExpr> cone_terms;
    int var = -1;
    double lower = -kInf;
    double upper = kInf;
};

class ConicProgram {
public:
    /// Adds a variable with optional box bounds and returns its index.
    int add_variable(double lower = -kInf, double upper = kInf, std::string name = {});
    [[nodiscard]] int num_variables() const { return static_cast<int>(lower_.size()); }
    [[nodiscard]] const std::string& name(int var) const { return names_.at(static_cast<std::size_t>(var)); }
    [[nodiscard]] double lower(int var) const { return lower_.at(static_cast<std::size_t>(var)); }
    [[nodiscard]] double upper(int var) const { return upper_.at(static_cast<std::size_t>(var)); }

    /// Objective is minimize sum(objective coefficient * x) + constant.
    void set_objective_coefficient(int var, double coef);
    void add_objective_constant(double c) { objective_constant_ += c; }
    [[nodiscard]] const std::vector<double>& objective() const { return objective_; }
    [[nodiscard]] double objective_constant() const { return objective_constant_; }

    // Constraint builders; ids are consecutive across all kinds.
    int add_equality(LinearExpr lhs, double rhs);
    int add_inequality(LinearExpr lhs, double rhs);   // lhs <= rhs
    int add_soc(std::vector<LinearExpr> terms, LinearExpr bound);
    int add_rotated_soc(LinearExpr u, LinearExpr v, std::vector<LinearExpr> terms);
    int add_bounds(int var, double lower, double upper);

    [[nodiscard]] const std::vector<Constraint>& constraints() const { return constraints_; }
    [[nodiscard]] std::size_t num_constraints() const { return constraints_.size(); }

    /// Objective value at x (including the constant).
    [[nodiscard]] double objective_value(const std::vector<double>& x) const;

private:
    void check_expr(const LinearExpr& e) const;

    std::vector<double> lower_, upper_, objective_;
    std::vector<std::string> names_;
    double objective_constant_ = 0.0;
    std::vector<Constraint> constraints_;
};

enum class SolveStatus { optimal, infeasible, unbounded, numerical_failure };

[[nodiscard]] const char* to_string(SolveStatus status);

struct ConicSolution {
    SolveStatus status = SolveStatus::numerical_failure;
    std::vector<double> x;
    double objective = 0.0;
    double max_primal_residual = 0.0;
    double max_cone_violation = 0.0;
    int iterations = 0;
    double solve_seconds = 0.0;
};

enum class SolverMethod { interior_point, operator_splitting };

struct SolverSettings {
    SolverMethod method = SolverMethod::interior_point;
    double tol = 1e-6;
    int ipm_max_iterations = 100;
    int max_iterations = 50000;  // operator splitting
    double relaxation = 1.5;
    int ruiz_passes = 25;
    int check_interval = 10;
    /// When set, programs are handed to this backend instead of the bundled solver.
    std::function<ConicSolution(const ConicProgram&, const SolverSettings&)> backend;
};

/// Residuals of a candidate point measured directly on the program's constraints.
struct Audit {
    double max_primal_residual = 0.0;  // equalities, inequalities, bounds
    double max_cone_violation = 0.0;   // soc and rotated soc
};

[[nodiscard]] Audit audit(const ConicProgram& prog, const std::vector<double>& x);

[[nodiscard]] ConicSolution solve(const ConicProgram& prog, const SolverSettings& settings = {});
[[nodiscard]] inline ConicSolution solve(const ConicProgram& prog, double tol) {
    SolverSettings s;
    s.tol = tol;
    return solve(prog, s);
}

/// Standard-form sparse triplet dump: c, then A and b with cone sizes.
[[nodiscard]] std::string format_program(const ConicProgram& prog);

}  // namespace gmdcascade::conic
