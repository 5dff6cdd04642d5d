#include "concolic/error.hpp"
#include "concolic/format.hpp"
#include "concolic/kernels.hpp"
#include "concolic/lp.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace concolic {

VarId LpProblem::add_variable(std::string name, double lower, double upper)
{
    if (std::isnan(lower) || std::isnan(upper)) {
        throw DomainError("LP variable " + name + " has a NaN bound");
    }
    vars_.push_back({std::move(name), lower, upper});
    return vars_.size() - 1;
}

std::size_t LpProblem::add_constraint(std::vector<LinearTerm> terms, Sense sense, double rhs, std::string name)
{
    for (const LinearTerm& t : terms) {
        if (t.var >= vars_.size()) {
            throw EncodingError("constraint refers to unknown variable " + std::to_string(t.var));
        }
        if (!std::isfinite(t.coef)) {
            throw DomainError("constraint " + name + " has a non-finite coefficient");
        }
    }
    if (!std::isfinite(rhs)) {
        throw DomainError("constraint " + name + " has a non-finite right-hand side");
    }
    rows_.push_back({std::move(terms), sense, rhs, std::move(name)});
    return rows_.size() - 1;
}

double LpProblem::max_violation(const std::vector<double>& x) const
{
    double worst = 0.0;
    for (std::size_t j = 0; j < vars_.size(); ++j) {
        worst = std::max({worst, vars_[j].lower - x[j], x[j] - vars_[j].upper});
    }
    for (const LpConstraint& c : rows_) {
        double lhs = 0.0;
        for (const LinearTerm& t : c.terms) {
            lhs += t.coef * x[t.var];
        }
        const double gap = lhs - c.rhs;
        switch (c.sense) {
        case Sense::LessEq: worst = std::max(worst, gap); break;
        case Sense::GreaterEq: worst = std::max(worst, -gap); break;
        case Sense::Equal: worst = std::max(worst, std::abs(gap)); break;
        }
    }
    return worst;
}

double LpProblem::objective_value(const std::vector<double>& x) const
{
    double z = 0.0;
    for (const LinearTerm& t : objective_) {
        z += t.coef * x[t.var];
    }
    return z;
}

namespace {

void write_terms(std::ostream& os, const std::vector<LinearTerm>& terms, const std::vector<LpVariable>& vars)
{
    if (terms.empty()) {
        os << " 0";
    }
    for (const LinearTerm& t : terms) {
        os << (t.coef < 0 ? " - " : " + ") << format_double(std::abs(t.coef)) << ' ' << vars[t.var].name;
    }
}

}  // namespace

void LpProblem::write_lp(std::ostream& os) const
{
    os << "Minimize\n obj:";
    write_terms(os, objective_, vars_);
    os << "\nSubject To\n";
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        const LpConstraint& c = rows_[i];
        os << ' ' << (c.name.empty() ? "c" + std::to_string(i) : c.name) << ':';
        write_terms(os, c.terms, vars_);
        os << (c.sense == Sense::LessEq ? " <= " : c.sense == Sense::Equal ? " = " : " >= ") << format_double(c.rhs) << '\n';
    }
    os << "Bounds\n";
    for (const LpVariable& v : vars_) {
        if (std::isinf(v.lower) && std::isinf(v.upper)) {
            os << ' ' << v.name << " free\n";
        } else if (std::isinf(v.lower)) {
            os << " -inf <= " << v.name << " <= " << format_double(v.upper) << '\n';
        } else if (std::isinf(v.upper)) {
            os << ' ' << v.name << " >= " << format_double(v.lower) << '\n';
        } else {
            os << ' ' << format_double(v.lower) << " <= " << v.name << " <= " << format_double(v.upper) << '\n';
        }
    }
    os << "End\n";
}

std::string_view lp_status_name(LpStatus s)
{
    switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration_limit";
    case LpStatus::NumericalFailure: return "numerical_failure";
    }
    return "?";
}

namespace {

// x_j = offset + sign * y[col] (- y[col2] for free variables)
struct ColumnMap {
    double offset = 0.0;
    double sign = 1.0;
    std::size_t col = 0;
    std::ptrdiff_t col2 = -1;
};

struct StandardRow {
    std::vector<std::pair<std::size_t, double>> terms;
    Sense sense = Sense::LessEq;
    double rhs = 0.0;
};

class Tableau {
public:
    Tableau(std::size_t rows, std::size_t cols)
        : m_(rows)
        , n_(cols)
        , data_((rows + 2) * (cols + 1), 0.0)
        , basis_(rows, 0)
    {
    }

    std::span<double> row(std::size_t i) { return {data_.data() + i * (n_ + 1), n_ + 1}; }
    double& at(std::size_t i, std::size_t j) { return data_[i * (n_ + 1) + j]; }
    double& rhs(std::size_t i) { return at(i, n_); }
    std::size_t& basis(std::size_t i) { return basis_[i]; }
    std::size_t rows() const { return m_; }
    std::size_t cols() const { return n_; }
    // Cost rows sit below the constraint rows: phase two at m, phase one at m + 1.
    std::size_t phase2_row() const { return m_; }
    std::size_t phase1_row() const { return m_ + 1; }

    void pivot(std::size_t pr, std::size_t pc)
    {
        std::span<double> p = row(pr);
        kernels::divide(p, p[pc]);
        p[pc] = 1.0;
        for (std::size_t i = 0; i < m_ + 2; ++i) {
            if (i == pr) {
                continue;
            }
            const double f = at(i, pc);
            if (f != 0.0) {
                kernels::axpy(-f, p, row(i));
                at(i, pc) = 0.0;
            }
        }
        basis_[pr] = pc;
    }

private:
    std::size_t m_, n_;
    std::vector<double> data_;
    std::vector<std::size_t> basis_;
};

enum class Step { Optimal, Unbounded, Limit };

class Simplex {
public:
    Simplex(Tableau& t, std::size_t first_artificial, const SimplexOptions& opt)
        : t_(t)
        , first_artificial_(first_artificial)
        , opt_(opt)
    {
    }

    Step run(std::size_t cost_row)
    {
        for (;;) {
            if (iterations_ >= opt_.max_iterations) {
                return Step::Limit;
            }
            // Bland: lowest-index column with negative reduced cost.
            std::size_t enter = t_.cols();
            for (std::size_t j = 0; j < first_artificial_; ++j) {
                if (t_.at(cost_row, j) < -opt_.cost_tolerance) {
                    enter = j;
                    break;
                }
            }
            if (enter == t_.cols()) {
                return Step::Optimal;
            }
            std::size_t leave = t_.rows();
            double best = 0.0;
            for (std::size_t i = 0; i < t_.rows(); ++i) {
                const double a = t_.at(i, enter);
                if (a <= opt_.pivot_tolerance) {
                    continue;
                }
                const double ratio = t_.rhs(i) / a;
                if (leave == t_.rows() || ratio < best - 1e-12) {
                    best = ratio;
                    leave = i;
                } else if (ratio <= best + 1e-12 && t_.basis(i) < t_.basis(leave)) {
                    best = std::min(best, ratio);
                    leave = i;
                }
            }
            if (leave == t_.rows()) {
                return Step::Unbounded;
            }
            t_.pivot(leave, enter);
            ++iterations_;
        }
    }

    std::size_t iterations() const { return iterations_; }

private:
    Tableau& t_;
    std::size_t first_artificial_;
    const SimplexOptions& opt_;
    std::size_t iterations_ = 0;
};

}  // namespace

LpOutcome SimplexSolver::solve(const LpProblem& problem) const
{
    LpOutcome out;
    const auto& vars = problem.variables();

    // Shift and split variables so that every structural column is >= 0.
    std::vector<ColumnMap> map(vars.size());
    std::vector<StandardRow> rows;
    std::size_t ncols = 0;
    for (std::size_t j = 0; j < vars.size(); ++j) {
        const LpVariable& v = vars[j];
        if (v.lower > v.upper) {
            return out;
        }
        ColumnMap& cm = map[j];
        if (std::isfinite(v.lower)) {
            cm = {v.lower, 1.0, ncols++, -1};
            if (std::isfinite(v.upper)) {
                rows.push_back({{{cm.col, 1.0}}, Sense::LessEq, v.upper - v.lower});
            }
        } else if (std::isfinite(v.upper)) {
            cm = {v.upper, -1.0, ncols++, -1};
        } else {
            cm.offset = 0.0;
            cm.col = ncols++;
            cm.col2 = static_cast<std::ptrdiff_t>(ncols++);
        }
    }
    const std::size_t structural = ncols;

    auto expand = [&](const std::vector<LinearTerm>& terms, double& constant) {
        std::vector<double> dense(structural, 0.0);
        for (const LinearTerm& t : terms) {
            const ColumnMap& cm = map[t.var];
            constant += t.coef * cm.offset;
            dense[cm.col] += t.coef * cm.sign;
            if (cm.col2 >= 0) {
                dense[static_cast<std::size_t>(cm.col2)] -= t.coef;
            }
        }
        return dense;
    };

    std::vector<std::vector<double>> dense_rows;
    std::vector<Sense> senses;
    std::vector<double> rhs;
    for (const StandardRow& r : rows) {
        std::vector<double> d(structural, 0.0);
        for (auto [c, a] : r.terms) {
            d[c] += a;
        }
        dense_rows.push_back(std::move(d));
        senses.push_back(r.sense);
        rhs.push_back(r.rhs);
    }
    for (const LpConstraint& c : problem.constraints()) {
        double constant = 0.0;
        dense_rows.push_back(expand(c.terms, constant));
        senses.push_back(c.sense);
        rhs.push_back(c.rhs - constant);
    }
    double obj_constant = 0.0;
    const std::vector<double> cost = expand(problem.objective(), obj_constant);

    // Non-negative right-hand sides, then slack, surplus and artificial columns.
    const std::size_t m = dense_rows.size();
    std::size_t slacks = 0;
    std::size_t artificials = 0;
    for (std::size_t i = 0; i < m; ++i) {
        if (rhs[i] < 0) {
            rhs[i] = -rhs[i];
            for (double& a : dense_rows[i]) {
                a = -a;
            }
            if (senses[i] == Sense::LessEq) {
                senses[i] = Sense::GreaterEq;
            } else if (senses[i] == Sense::GreaterEq) {
                senses[i] = Sense::LessEq;
            }
        }
        if (senses[i] != Sense::Equal) {
            ++slacks;
        }
        if (senses[i] != Sense::LessEq) {
            ++artificials;
        }
    }
    const std::size_t first_artificial = structural + slacks;
    Tableau t(m, first_artificial + artificials);
    std::size_t next_slack = structural;
    std::size_t next_art = first_artificial;
    for (std::size_t i = 0; i < m; ++i) {
        std::copy(dense_rows[i].begin(), dense_rows[i].end(), t.row(i).begin());
        t.rhs(i) = rhs[i];
        if (senses[i] == Sense::LessEq) {
            t.at(i, next_slack) = 1.0;
            t.basis(i) = next_slack++;
        } else {
            if (senses[i] == Sense::GreaterEq) {
                t.at(i, next_slack++) = -1.0;
            }
            t.at(i, next_art) = 1.0;
            t.basis(i) = next_art++;
        }
    }
    for (std::size_t j = 0; j < structural; ++j) {
        t.at(t.phase2_row(), j) = cost[j];
    }
    // Phase-one cost: sum of artificials, priced out against the initial basis.
    for (std::size_t i = 0; i < m; ++i) {
        if (t.basis(i) >= first_artificial) {
            for (std::size_t j = 0; j < first_artificial; ++j) {
                t.at(t.phase1_row(), j) -= t.at(i, j);
            }
            t.rhs(t.phase1_row()) -= t.rhs(i);
        }
    }

    Simplex sx(t, first_artificial, options_);
    if (artificials > 0) {
        const Step s = sx.run(t.phase1_row());
        out.iterations = sx.iterations();
        if (s == Step::Limit) {
            out.status = LpStatus::IterationLimit;
            return out;
        }
        double scale = 1.0;
        for (double b : rhs) {
            scale = std::max(scale, b);
        }
        if (-t.rhs(t.phase1_row()) > 1e-9 * scale) {
            out.status = LpStatus::Infeasible;
            return out;
        }
        // Drive artificials out of the basis where a real column can replace them.
        for (std::size_t i = 0; i < m; ++i) {
            if (t.basis(i) < first_artificial) {
                continue;
            }
            for (std::size_t j = 0; j < first_artificial; ++j) {
                if (std::abs(t.at(i, j)) > options_.pivot_tolerance) {
                    t.pivot(i, j);
                    break;
                }
            }
        }
    }
    const Step s = sx.run(t.phase2_row());
    out.iterations = sx.iterations();
    if (s == Step::Limit) {
        out.status = LpStatus::IterationLimit;
        return out;
    }
    if (s == Step::Unbounded) {
        out.status = LpStatus::Unbounded;
        return out;
    }

    std::vector<double> y(t.cols(), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        y[t.basis(i)] = t.rhs(i);
    }
    out.values.resize(vars.size());
    for (std::size_t j = 0; j < vars.size(); ++j) {
        const ColumnMap& cm = map[j];
        double x = cm.offset + cm.sign * y[cm.col];
        if (cm.col2 >= 0) {
            x -= y[static_cast<std::size_t>(cm.col2)];
        }
        out.values[j] = x;
    }
    out.objective = problem.objective_value(out.values);
    out.max_violation = problem.max_violation(out.values);
    out.status = out.max_violation <= kLpTolerance ? LpStatus::Optimal : LpStatus::NumericalFailure;
    return out;
}

LpOutcome solve(const LpProblem& problem, const SimplexOptions& options)
{
    return SimplexSolver(options).solve(problem);
}

}  // namespace concolic
