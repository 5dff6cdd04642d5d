// Linear programs and the embedded simplex solver.
#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace concolic {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Residual tolerance every optimal solution is checked against.
inline constexpr double kLpTolerance = 1e-7;

using VarId = std::size_t;

struct LpVariable {
    std::string name;
    double lower = 0.0;
    double upper = kInf;
};

enum class Sense { LessEq, Equal, GreaterEq };

struct LinearTerm {
    VarId var = 0;
    double coef = 0.0;
};

struct LpConstraint {
    std::vector<LinearTerm> terms;
    Sense sense = Sense::LessEq;
    double rhs = 0.0;
    std::string name;
};

/// minimize objective . x  subject to constraints and variable bounds.
class LpProblem {
public:
    VarId add_variable(std::string name, double lower = 0.0, double upper = kInf);
    std::size_t add_constraint(std::vector<LinearTerm> terms, Sense sense, double rhs, std::string name = {});
    void set_objective(std::vector<LinearTerm> terms) { objective_ = std::move(terms); }

    std::size_t variable_count() const { return vars_.size(); }
    std::size_t constraint_count() const { return rows_.size(); }
    const std::vector<LpVariable>& variables() const { return vars_; }
    const std::vector<LpConstraint>& constraints() const { return rows_; }
    const std::vector<LinearTerm>& objective() const { return objective_; }
    LpVariable& variable(VarId id) { return vars_.at(id); }

    /// Largest violation of a constraint or bound by `x`.
    double max_violation(const std::vector<double>& x) const;
    double objective_value(const std::vector<double>& x) const;

    /// CPLEX LP-style text: Minimize / Subject To / Bounds / End.
    void write_lp(std::ostream& os) const;

private:
    std::vector<LpVariable> vars_;
    std::vector<LpConstraint> rows_;
    std::vector<LinearTerm> objective_;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit, NumericalFailure };

std::string_view lp_status_name(LpStatus s);

struct LpOutcome {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> values;  // one per variable when optimal
    double objective = 0.0;
    std::size_t iterations = 0;
    double max_violation = 0.0;
};

struct SimplexOptions {
    std::size_t max_iterations = 50000;
    double pivot_tolerance = 1e-9;
    double cost_tolerance = 1e-9;
};

/// Pluggable back end; encodings only talk to this interface.
class LpSolver {
public:
    virtual ~LpSolver() = default;
    virtual LpOutcome solve(const LpProblem& problem) const = 0;
};

/// Dense two-phase tableau simplex with Bland's rule. Deterministic.
class SimplexSolver : public LpSolver {
public:
    explicit SimplexSolver(SimplexOptions options = {})
        : options_(options)
    {
    }
    LpOutcome solve(const LpProblem& problem) const override;

private:
    SimplexOptions options_;
};

LpOutcome solve(const LpProblem& problem, const SimplexOptions& options = {});

}  // namespace concolic
