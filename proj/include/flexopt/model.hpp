#ifndef FLEXOPT_MODEL_HPP
#define FLEXOPT_MODEL_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace flexopt {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind { Continuous, Binary };
enum class RowSense { LE, EQ, GE };

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterLimit, TimeLimit };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "Optimal";
        case SolveStatus::Infeasible: return "Infeasible";
        case SolveStatus::Unbounded: return "Unbounded";
        case SolveStatus::IterLimit: return "IterLimit";
        case SolveStatus::TimeLimit: return "TimeLimit";
    }
    return "?";
}

using VarId = int;

struct Variable {
    std::string name;
    double lb = 0.0;
    double ub = kInf;
    double obj = 0.0;
    VarKind kind = VarKind::Continuous;
};

struct RowTerm {
    VarId col;
    double coef;
};

struct Constraint {
    std::vector<RowTerm> terms;
    RowSense sense = RowSense::LE;
    double rhs = 0.0;
    std::string name;
};

struct Sos2Set {
    std::vector<VarId> members;  // ordered
};

/// A linear/mixed-integer program in minimize form. Rows and columns keep
/// their insertion order; solvers are required to be deterministic with
/// respect to that order.
class Model {
public:
    VarId add_variable(std::string name, double lb, double ub, double obj,
                       VarKind kind = VarKind::Continuous) {
        if (!(lb <= ub))
            throw std::invalid_argument("variable '" + name + "': lb > ub");
        if (kind == VarKind::Binary && (lb < 0.0 || ub > 1.0))
            throw std::invalid_argument("binary variable '" + name +
                                        "' must have bounds within [0,1]");
        vars_.push_back(Variable{std::move(name), lb, ub, obj, kind});
        return static_cast<VarId>(vars_.size() - 1);
    }

    int add_constraint(std::vector<RowTerm> terms, RowSense sense, double rhs,
                       std::string name = {}) {
        for (const auto& t : terms)
            if (t.col < 0 || t.col >= static_cast<VarId>(vars_.size()))
                throw std::invalid_argument("constraint '" + name +
                                            "' references undeclared variable");
        rows_.push_back(Constraint{std::move(terms), sense, rhs, std::move(name)});
        return static_cast<int>(rows_.size() - 1);
    }

    int add_sos2(std::vector<VarId> members) {
        if (members.size() < 3)
            throw std::invalid_argument("SOS2 set needs at least 3 members");
        for (VarId v : members) {
            if (v < 0 || v >= static_cast<VarId>(vars_.size()))
                throw std::invalid_argument("SOS2 set references undeclared variable");
            if (!sos_members_.insert(v).second)
                throw std::invalid_argument("variable '" + vars_[v].name +
                                            "' appears in more than one SOS2 set");
        }
        sos2_.push_back(Sos2Set{std::move(members)});
        return static_cast<int>(sos2_.size() - 1);
    }

    void set_obj(VarId v, double c) { vars_.at(v).obj = c; }
    void add_obj(VarId v, double c) { vars_.at(v).obj += c; }
    void set_bounds(VarId v, double lb, double ub) {
        if (!(lb <= ub)) throw std::invalid_argument("set_bounds: lb > ub");
        vars_.at(v).lb = lb;
        vars_.at(v).ub = ub;
    }

    int num_vars() const { return static_cast<int>(vars_.size()); }
    int num_rows() const { return static_cast<int>(rows_.size()); }
    int num_binaries() const {
        int n = 0;
        for (const auto& v : vars_) n += v.kind == VarKind::Binary;
        return n;
    }
    bool has_integrality() const { return num_binaries() > 0; }
    bool has_sos2() const { return !sos2_.empty(); }

    const Variable& var(VarId v) const { return vars_.at(v); }
    const std::vector<Variable>& vars() const { return vars_; }
    const std::vector<Constraint>& rows() const { return rows_; }
    const std::vector<Sos2Set>& sos2_sets() const { return sos2_; }

    /// Debug dump in CPLEX LP-file conventions for cross-checking against
    /// external solvers.
    void write_lp(std::ostream& os) const;

private:
    std::vector<Variable> vars_;
    std::vector<Constraint> rows_;
    std::vector<Sos2Set> sos2_;
    std::unordered_set<VarId> sos_members_;
};

struct Solution {
    SolveStatus status = SolveStatus::Infeasible;
    std::vector<double> values;  // per variable, empty unless an incumbent exists
    double objective = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> duals;   // per row; filled for LP solves only
    long node_count = 0;
    double wall_seconds = 0.0;

    double value(VarId v) const { return values.at(static_cast<size_t>(v)); }
    bool has_values() const { return !values.empty(); }
};

namespace detail {
inline void lp_write_num(std::ostream& os, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
}
inline std::string lp_var_name(const Model& m, VarId j) {
    const std::string& n = m.var(j).name;
    return n.empty() ? ("x" + std::to_string(j)) : n;
}
}  // namespace detail

inline void Model::write_lp(std::ostream& os) const {
    os << "Minimize\n obj:";
    bool any = false;
    for (VarId j = 0; j < num_vars(); ++j) {
        double c = vars_[j].obj;
        if (c == 0.0) continue;
        os << (c < 0 ? " - " : (any ? " + " : " "));
        detail::lp_write_num(os, std::fabs(c));
        os << " " << detail::lp_var_name(*this, j);
        any = true;
    }
    if (!any) os << " 0 " << detail::lp_var_name(*this, 0);
    os << "\nSubject To\n";
    for (size_t r = 0; r < rows_.size(); ++r) {
        const auto& row = rows_[r];
        os << " " << (row.name.empty() ? "c" + std::to_string(r) : row.name) << ":";
        bool first = true;
        for (const auto& t : row.terms) {
            os << (t.coef < 0 ? " - " : (first ? " " : " + "));
            detail::lp_write_num(os, std::fabs(t.coef));
            os << " " << detail::lp_var_name(*this, t.col);
            first = false;
        }
        if (first) os << " 0 " << detail::lp_var_name(*this, 0);
        os << (row.sense == RowSense::LE ? " <= " : row.sense == RowSense::EQ ? " = " : " >= ");
        detail::lp_write_num(os, row.rhs);
        os << "\n";
    }
    os << "Bounds\n";
    for (VarId j = 0; j < num_vars(); ++j) {
        const auto& v = vars_[j];
        os << " ";
        if (v.lb == v.ub) {
            os << detail::lp_var_name(*this, j) << " = ";
            detail::lp_write_num(os, v.lb);
        } else {
            if (v.lb == -kInf)
                os << "-inf";
            else
                detail::lp_write_num(os, v.lb);
            os << " <= " << detail::lp_var_name(*this, j) << " <= ";
            if (v.ub == kInf)
                os << "+inf";
            else
                detail::lp_write_num(os, v.ub);
        }
        os << "\n";
    }
    if (num_binaries() > 0) {
        os << "Binary\n";
        for (VarId j = 0; j < num_vars(); ++j)
            if (vars_[j].kind == VarKind::Binary) os << " " << detail::lp_var_name(*this, j) << "\n";
    }
    if (!sos2_.empty()) {
        os << "SOS\n";
        for (size_t s = 0; s < sos2_.size(); ++s) {
            os << " s" << s << ": S2::";
            int w = 1;
            for (VarId v : sos2_[s].members) os << " " << detail::lp_var_name(*this, v) << ":" << w++;
            os << "\n";
        }
    }
    os << "End\n";
}

}  // namespace flexopt

#endif
