#ifndef FLEXOPT_SOLVER_HPP
#define FLEXOPT_SOLVER_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "flexopt/model.hpp"
#include "flexopt/simplex.hpp"

namespace flexopt {

struct MilpOptions {
    double feas_tol = 1e-6;
    double int_tol = 1e-5;
    double gap_tol = 1e-4;
    long node_limit = 200000;
    double time_limit_s = kInf;
};

/// Appends an epigraph variable q with objective coefficient `weight` plus
/// tangent cuts so that q under-approximates (var - center)^2 over the
/// variable's box with maximum envelope error ((ub - lb) / (2 n_segments))^2.
/// Tangency points sit on a grid phased through the center, so q = 0 exactly
/// at var = center whenever the center lies inside the box (the ADMM
/// proximal and penalty terms rely on that fixed-point exactness).
inline VarId add_separable_quadratic(Model& model, VarId var, double center,
                                     double weight, int n_segments) {
    if (weight < 0.0)
        throw std::invalid_argument("add_separable_quadratic: negative weight");
    const double lb = model.var(var).lb;
    const double ub = model.var(var).ub;
    if (!(lb > -kInf && ub < kInf))
        throw std::invalid_argument(
            "add_separable_quadratic: variable '" + model.var(var).name +
            "' needs finite bounds (quadratic linearization needs a box)");
    std::string qname = model.var(var).name + "_quad";
    if (weight == 0.0) return model.add_variable(qname, 0.0, 0.0, 0.0);
    if (n_segments < 1)
        throw std::invalid_argument("add_separable_quadratic: n_segments < 1");

    if (ub == lb) {
        double f = (lb - center) * (lb - center);
        return model.add_variable(qname, f, f, weight);
    }
    double h = (ub - lb) / n_segments;
    std::vector<double> pts{lb, ub};
    long k_min = static_cast<long>(std::ceil((lb - center) / h - 1e-12));
    long k_max = static_cast<long>(std::floor((ub - center) / h + 1e-12));
    for (long k = k_min; k <= k_max; ++k) pts.push_back(center + k * h);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [&](double a, double b) { return std::fabs(a - b) < 1e-12 * (1 + h); }),
              pts.end());

    bool center_inside = (center >= lb - 1e-12 && center <= ub + 1e-12);
    double fmax = std::max((lb - center) * (lb - center), (ub - center) * (ub - center));
    double qlb = center_inside ? 0.0 : -h * h / 4.0 - 1e-12;
    VarId q = model.add_variable(qname, qlb, fmax + 1e-9, weight);
    int s = 0;
    for (double vs : pts) {
        double slope = 2.0 * (vs - center);
        // q >= (vs-c)^2 + slope*(var - vs)
        double rhs = (vs - center) * (vs - center) - slope * vs;
        model.add_constraint({{q, 1.0}, {var, -slope}}, RowSense::GE, rhs,
                             qname + "_cut" + std::to_string(s++));
    }
    return q;
}

namespace detail {

inline Solution lp_result(simplex::Solver& sx, simplex::Status st, const Model& model,
                          bool want_duals) {
    Solution out;
    switch (st) {
        case simplex::Status::Optimal: out.status = SolveStatus::Optimal; break;
        case simplex::Status::Infeasible: out.status = SolveStatus::Infeasible; break;
        case simplex::Status::Unbounded: out.status = SolveStatus::Unbounded; break;
        case simplex::Status::IterLimit: out.status = SolveStatus::IterLimit; break;
    }
    if (st == simplex::Status::Optimal) {
        out.values = sx.structural_values();
        out.objective = sx.objective();
        if (want_duals) out.duals = sx.row_duals();
    }
    (void)model;
    return out;
}

}  // namespace detail

inline Solution solve_lp(const Model& model, double feas_tol = 1e-6,
                         bool relax = false) {
    if (!relax && (model.has_integrality() || model.has_sos2()))
        throw std::invalid_argument(
            "solve_lp: model has integrality/SOS2 restrictions; pass relax=true "
            "for the relaxation");
    auto t0 = std::chrono::steady_clock::now();
    simplex::Options sopt;
    sopt.feas_tol = feas_tol;
    simplex::Solver sx(model, sopt);
    simplex::Status st = sx.solve_primal_cold();
    Solution out = detail::lp_result(sx, st, model, /*want_duals=*/true);
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

namespace detail {

struct BnbNode {
    long id = 0;
    double bound = -kInf;
    // cumulative restrictions
    std::vector<std::pair<VarId, double>> binary_fixes;       // var -> value
    std::vector<std::pair<int, std::pair<int, int>>> windows; // sos set -> [lo,hi]
    simplex::Basis basis;
};

struct NodeOrder {
    bool operator()(const BnbNode& a, const BnbNode& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;  // min-heap on bound
        return a.id > b.id;
    }
};

class BranchAndBound {
public:
    BranchAndBound(const Model& model, const MilpOptions& opt)
        : model_(model), opt_(opt) {
        for (VarId j = 0; j < model.num_vars(); ++j)
            if (model.var(j).kind == VarKind::Binary) binaries_.push_back(j);
        simplex::Options sopt;
        sopt.feas_tol = opt.feas_tol;
        sx_ = std::make_unique<simplex::Solver>(model, sopt);
    }

    Solution run() {
        auto t0 = std::chrono::steady_clock::now();
        Solution out;

        BnbNode root;
        root.id = next_id_++;
        simplex::Status rst = solve_node(root, /*warm=*/false);
        ++nodes_solved_;
        if (rst == simplex::Status::Infeasible) {
            out.status = SolveStatus::Infeasible;
            finish(out, t0);
            return out;
        }
        if (rst == simplex::Status::Unbounded) {
            out.status = SolveStatus::Unbounded;
            finish(out, t0);
            return out;
        }
        if (rst == simplex::Status::IterLimit) {
            out.status = SolveStatus::IterLimit;
            finish(out, t0);
            return out;
        }
        process_solved_node(root);

        while (!open_.empty()) {
            if (nodes_solved_ >= opt_.node_limit) {
                out.status = SolveStatus::IterLimit;
                emit_incumbent(out, t0);
                return out;
            }
            if (elapsed(t0) > opt_.time_limit_s) {
                out.status = SolveStatus::TimeLimit;
                emit_incumbent(out, t0);
                return out;
            }
            BnbNode node = open_.top();
            open_.pop();
            if (has_incumbent_ && node.bound >= incumbent_obj_ - 1e-12) continue;
            if (gap_closed()) break;

            simplex::Status st = solve_node(node, /*warm=*/true);
            ++nodes_solved_;
            if (st == simplex::Status::Infeasible) continue;
            if (st != simplex::Status::Optimal) {
                out.status = (st == simplex::Status::IterLimit) ? SolveStatus::IterLimit
                                                                : SolveStatus::Infeasible;
                emit_incumbent(out, t0);
                return out;
            }
            process_solved_node(node);
        }

        if (has_incumbent_) {
            out.status = SolveStatus::Optimal;
            out.values = incumbent_;
            out.objective = incumbent_obj_;
        } else {
            out.status = SolveStatus::Infeasible;
        }
        finish(out, t0);
        return out;
    }

private:
    static double elapsed(std::chrono::steady_clock::time_point t0) {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    void finish(Solution& out, std::chrono::steady_clock::time_point t0) {
        out.node_count = nodes_solved_;
        out.wall_seconds = elapsed(t0);
    }

    void emit_incumbent(Solution& out, std::chrono::steady_clock::time_point t0) {
        if (has_incumbent_) {
            out.values = incumbent_;
            out.objective = incumbent_obj_;
        }
        finish(out, t0);
    }

    bool gap_closed() const {
        if (!has_incumbent_ || open_.empty()) return false;
        double bound = open_.top().bound;
        double gap = (incumbent_obj_ - bound) / std::max(1.0, std::fabs(incumbent_obj_));
        return gap <= opt_.gap_tol;
    }

    bool apply_restrictions(const BnbNode& node) {
        for (VarId j : binaries_) {
            const auto& v = model_.var(j);
            sx_->set_var_bounds(j, v.lb, v.ub);
        }
        for (const auto& s : touched_sos_members_) {
            const auto& v = model_.var(s);
            sx_->set_var_bounds(s, v.lb, v.ub);
        }
        touched_sos_members_.clear();
        bool ok = true;
        for (const auto& [j, val] : node.binary_fixes) {
            const auto& v = model_.var(j);
            if (val < v.lb - 1e-12 || val > v.ub + 1e-12) ok = false;
            sx_->set_var_bounds(j, val, val);
        }
        for (const auto& [set_idx, win] : node.windows) {
            const auto& members = model_.sos2_sets()[set_idx].members;
            for (int i = 0; i < static_cast<int>(members.size()); ++i) {
                if (i < win.first || i > win.second) {
                    const auto& v = model_.var(members[i]);
                    if (v.lb > 1e-12 || v.ub < -1e-12) ok = false;
                    sx_->set_var_bounds(members[i], 0.0, 0.0);
                    touched_sos_members_.push_back(members[i]);
                }
            }
        }
        return ok;
    }

    simplex::Status solve_node(BnbNode& node, bool warm) {
        if (!apply_restrictions(node)) return simplex::Status::Infeasible;
        simplex::Status st;
        if (warm && node.basis.valid) {
            sx_->load_basis(node.basis);
            try {
                st = sx_->solve_dual();
            } catch (const NumericalInstability&) {
                st = simplex::Status::IterLimit;
            }
            if (st == simplex::Status::IterLimit) st = sx_->solve_primal_cold();
        } else {
            st = sx_->solve_primal_cold();
        }
        if (st == simplex::Status::Optimal) {
            node.bound = sx_->objective();
            node.basis = sx_->save_basis();
        }
        return st;
    }

    // classify + either accept incumbent or branch
    void process_solved_node(const BnbNode& node) {
        if (has_incumbent_ && node.bound >= incumbent_obj_ - 1e-12) return;
        std::vector<double> x = sx_->structural_values();

        int bad_sos = violated_sos(node, x);
        if (bad_sos < 0) {
            VarId frac = most_fractional(x);
            if (frac < 0) {
                accept_incumbent(x, node.bound);
                return;
            }
            if (try_repair(x, node.bound)) return;
            branch_binary(node, frac, x);
            return;
        }
        branch_sos(node, bad_sos, x);
    }

    VarId most_fractional(const std::vector<double>& x) const {
        VarId best = -1;
        double best_frac = opt_.int_tol;
        for (VarId j : binaries_) {
            double f = std::min(x[j], 1.0 - x[j]);
            if (f > best_frac + 1e-15) {
                best_frac = f;
                best = j;
            }
        }
        return best;
    }

    std::pair<int, int> window_of(const BnbNode& node, int set_idx) const {
        int lo = 0, hi = static_cast<int>(model_.sos2_sets()[set_idx].members.size()) - 1;
        for (const auto& [s, win] : node.windows)
            if (s == set_idx) {
                lo = std::max(lo, win.first);
                hi = std::min(hi, win.second);
            }
        return {lo, hi};
    }

    int violated_sos(const BnbNode& node, const std::vector<double>& x) const {
        for (int s = 0; s < static_cast<int>(model_.sos2_sets().size()); ++s) {
            const auto& members = model_.sos2_sets()[s].members;
            int first = -1, last = -1, count = 0;
            for (int i = 0; i < static_cast<int>(members.size()); ++i) {
                if (std::fabs(x[members[i]]) > opt_.int_tol) {
                    if (first < 0) first = i;
                    last = i;
                    ++count;
                }
            }
            if (count > 2 || (count == 2 && last - first > 1)) return s;
        }
        return -1;
    }

    void accept_incumbent(const std::vector<double>& x, double obj) {
        if (!has_incumbent_ || obj < incumbent_obj_ - 1e-12) {
            incumbent_ = x;
            incumbent_obj_ = obj;
            has_incumbent_ = true;
        }
    }

    /// Zero-objective binaries whose LP value is fractional can often be
    /// rounded without touching the rest of the vertex; a full feasibility
    /// re-check guards the shortcut.
    bool try_repair(std::vector<double> x, double obj) {
        for (VarId j : binaries_) {
            double f = std::min(x[j], 1.0 - x[j]);
            if (f <= opt_.int_tol) {
                x[j] = std::round(x[j]);
                continue;
            }
            if (model_.var(j).obj != 0.0) return false;
            x[j] = 0.0;
            if (!rows_feasible_for(x, j)) x[j] = 1.0;
        }
        if (!all_rows_feasible(x)) return false;
        accept_incumbent(x, obj);
        return true;
    }

    bool rows_feasible_for(const std::vector<double>& x, VarId j) const {
        for (const auto& row : model_.rows()) {
            bool touches = false;
            for (const auto& t : row.terms)
                if (t.col == j) {
                    touches = true;
                    break;
                }
            if (!touches) continue;
            if (!row_ok(row, x)) return false;
        }
        return true;
    }

    bool row_ok(const Constraint& row, const std::vector<double>& x) const {
        double act = 0.0;
        for (const auto& t : row.terms) act += t.coef * x[t.col];
        switch (row.sense) {
            case RowSense::LE: return act <= row.rhs + opt_.feas_tol;
            case RowSense::GE: return act >= row.rhs - opt_.feas_tol;
            case RowSense::EQ: return std::fabs(act - row.rhs) <= opt_.feas_tol;
        }
        return false;
    }

    bool all_rows_feasible(const std::vector<double>& x) const {
        for (const auto& row : model_.rows())
            if (!row_ok(row, x)) return false;
        return true;
    }

    void branch_binary(const BnbNode& node, VarId j, const std::vector<double>&) {
        for (double val : {0.0, 1.0}) {
            BnbNode child = node;
            child.id = next_id_++;
            child.binary_fixes.push_back({j, val});
            open_.push(std::move(child));
        }
    }

    void branch_sos(const BnbNode& node, int set_idx, const std::vector<double>& x) {
        const auto& members = model_.sos2_sets()[set_idx].members;
        auto [lo, hi] = window_of(node, set_idx);
        double wsum = 0.0, csum = 0.0;
        for (int i = lo; i <= hi; ++i) {
            double w = std::fabs(x[members[i]]);
            wsum += w;
            csum += w * i;
        }
        int r = (wsum > 0) ? static_cast<int>(std::lround(csum / wsum)) : (lo + hi) / 2;
        r = std::clamp(r, lo + 1, hi - 1);
        BnbNode left = node;
        left.id = next_id_++;
        left.windows.push_back({set_idx, {lo, r}});
        open_.push(std::move(left));
        BnbNode right = node;
        right.id = next_id_++;
        right.windows.push_back({set_idx, {r, hi}});
        open_.push(std::move(right));
    }

    const Model& model_;
    MilpOptions opt_;
    std::vector<VarId> binaries_;
    std::unique_ptr<simplex::Solver> sx_;
    std::vector<VarId> touched_sos_members_;
    std::priority_queue<BnbNode, std::vector<BnbNode>, NodeOrder> open_;
    std::vector<double> incumbent_;
    double incumbent_obj_ = kInf;
    bool has_incumbent_ = false;
    long nodes_solved_ = 0;
    long next_id_ = 0;
};

}  // namespace detail

inline Solution solve_milp(const Model& model, const MilpOptions& opt = {}) {
    if (!model.has_integrality() && !model.has_sos2()) {
        Solution s = solve_lp(model, opt.feas_tol);
        s.node_count = 1;
        return s;
    }
    detail::BranchAndBound bnb(model, opt);
    return bnb.run();
}

}  // namespace flexopt

#endif
