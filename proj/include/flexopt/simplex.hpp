#ifndef FLEXOPT_SIMPLEX_HPP
#define FLEXOPT_SIMPLEX_HPP

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "flexopt/model.hpp"

namespace flexopt {

/// Raised when the basis factorization cannot be recovered.
struct NumericalInstability : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace simplex {

enum class Status { Optimal, Infeasible, Unbounded, IterLimit };

struct Options {
    double feas_tol = 1e-6;
    double dual_tol = 1e-7;
    double pivot_tol = 1e-7;   // smallest pivot accepted by the ratio tests
    double drop_tol = 1e-11;   // magnitudes below this are treated as zero
    int refactor_every = 80;
    long stall_limit = 600;    // degenerate pivots before switching to Bland's rule
    long iter_limit = -1;      // -1: derived from problem size
};

enum class VStat : uint8_t { Basic, AtLower, AtUpper, FreeZero };

struct Basis {
    std::vector<int> basic;
    std::vector<VStat> vstat;
    bool valid = false;
};

/// Revised simplex for bounded variables over the system A x - s = 0,
/// with one logical (s) per row carrying the row bounds and one artificial
/// per row used by the primal phase-1 start. The basis inverse is kept as
/// an Eigen sparse LU factorization plus a product-form eta chain.
class Solver {
public:
    Solver(const Model& model, Options opt = {}) : opt_(opt) {
        n_struct_ = model.num_vars();
        m_ = model.num_rows();
        ncols_ = n_struct_ + 2 * m_;

        lb_.assign(ncols_, 0.0);
        ub_.assign(ncols_, 0.0);
        cost_.assign(ncols_, 0.0);
        for (int j = 0; j < n_struct_; ++j) {
            const auto& v = model.var(j);
            lb_[j] = v.lb;
            ub_[j] = v.ub;
            cost_[j] = v.obj;
        }
        // logicals: row activity bounds; artificials: configured at cold start
        for (int r = 0; r < m_; ++r) {
            const auto& row = model.rows()[r];
            double L = -kInf, U = kInf;
            switch (row.sense) {
                case RowSense::LE: U = row.rhs; break;
                case RowSense::GE: L = row.rhs; break;
                case RowSense::EQ: L = U = row.rhs; break;
            }
            lb_[n_struct_ + r] = L;
            ub_[n_struct_ + r] = U;
            lb_[art(r)] = 0.0;
            ub_[art(r)] = 0.0;
        }

        // column-wise matrix, structural part from the model
        col_ptr_.assign(ncols_ + 1, 0);
        std::vector<std::vector<std::pair<int, double>>> tmp(n_struct_);
        for (int r = 0; r < m_; ++r)
            for (const auto& t : model.rows()[r].terms)
                if (t.coef != 0.0) tmp[t.col].push_back({r, t.coef});
        size_t nnz = 0;
        for (auto& c : tmp) nnz += c.size();
        nnz += 2 * static_cast<size_t>(m_);
        row_idx_.reserve(nnz);
        val_.reserve(nnz);
        for (int j = 0; j < n_struct_; ++j) {
            // merge duplicate (row, col) entries
            auto& c = tmp[j];
            std::sort(c.begin(), c.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            size_t out = row_idx_.size();
            for (const auto& [r, v] : c) {
                if (row_idx_.size() > out && row_idx_.back() == r)
                    val_.back() += v;
                else {
                    row_idx_.push_back(r);
                    val_.push_back(v);
                }
            }
            col_ptr_[j + 1] = static_cast<int>(row_idx_.size());
        }
        for (int r = 0; r < m_; ++r) {  // logical r: -e_r
            row_idx_.push_back(r);
            val_.push_back(-1.0);
            col_ptr_[n_struct_ + r + 1] = static_cast<int>(row_idx_.size());
        }
        for (int r = 0; r < m_; ++r) {  // artificial r: +e_r
            row_idx_.push_back(r);
            val_.push_back(1.0);
            col_ptr_[art(r) + 1] = static_cast<int>(row_idx_.size());
        }

        x_.assign(ncols_, 0.0);
        vstat_.assign(ncols_, VStat::AtLower);
        basic_.assign(m_, -1);
        pos_.assign(ncols_, -1);
        work_.resize(m_);
        work2_.resize(m_);
        if (opt_.iter_limit < 0)
            opt_.iter_limit = 200L * (m_ + n_struct_) + 20000L;
    }

    int num_rows() const { return m_; }
    int num_structural() const { return n_struct_; }
    long iterations() const { return iters_; }

    void set_var_bounds(int j, double lo, double hi) {
        lb_[j] = lo;
        ub_[j] = hi;
    }
    double var_lb(int j) const { return lb_[j]; }
    double var_ub(int j) const { return ub_[j]; }

    /// Cold solve: phase-1 start from a logical/artificial basis, then phase 2.
    Status solve_primal_cold() {
        cold_start();
        Status s1 = primal_loop(/*phase1=*/true);
        if (s1 != Status::Optimal) return s1;
        if (phase1_infeasibility() > opt_.feas_tol) return Status::Infeasible;
        seal_artificials();
        return primal_loop(/*phase1=*/false);
    }

    /// Dual re-solve from the current (dual-feasible) basis after bound
    /// changes. Returns Infeasible when the dual is unbounded.
    Status solve_dual() {
        if (!basis_loaded_) throw std::logic_error("solve_dual: no basis");
        snap_nonbasic_to_bounds();
        refactorize();
        compute_basic_values();
        return dual_loop();
    }

    Basis save_basis() const {
        Basis b;
        b.basic = basic_;
        b.vstat = vstat_;
        b.valid = true;
        return b;
    }

    void load_basis(const Basis& b) {
        basic_ = b.basic;
        vstat_ = b.vstat;
        std::fill(pos_.begin(), pos_.end(), -1);
        for (int p = 0; p < m_; ++p) pos_[basic_[p]] = p;
        basis_loaded_ = true;
    }

    double objective() const {
        double z = 0.0;
        for (int j = 0; j < n_struct_; ++j) z += cost_[j] * x_[j];
        return z;
    }

    double value(int j) const { return x_[j]; }

    std::vector<double> structural_values() const {
        return std::vector<double>(x_.begin(), x_.begin() + n_struct_);
    }

    /// Row duals y with the phase-2 objective (valid after an Optimal solve).
    std::vector<double> row_duals() {
        compute_duals(/*phase1=*/false);
        return std::vector<double>(y_.begin(), y_.end());
    }

    double max_primal_violation() const {
        double v = 0.0;
        for (int p = 0; p < m_; ++p) {
            int j = basic_[p];
            v = std::max(v, lb_[j] - x_[j]);
            v = std::max(v, x_[j] - ub_[j]);
        }
        return v;
    }

private:
    int art(int r) const { return n_struct_ + m_ + r; }

    // --- cold start ----------------------------------------------------

    void cold_start() {
        for (int j = 0; j < n_struct_; ++j) {
            if (lb_[j] > -kInf) {
                x_[j] = lb_[j];
                vstat_[j] = VStat::AtLower;
            } else if (ub_[j] < kInf) {
                x_[j] = ub_[j];
                vstat_[j] = VStat::AtUpper;
            } else {
                x_[j] = 0.0;
                vstat_[j] = VStat::FreeZero;
            }
        }
        std::vector<double> act(m_, 0.0);
        for (int j = 0; j < n_struct_; ++j) {
            if (x_[j] == 0.0) continue;
            for (int k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k)
                act[row_idx_[k]] += val_[k] * x_[j];
        }
        for (int r = 0; r < m_; ++r) {
            int sj = n_struct_ + r;
            int zj = art(r);
            double L = lb_[sj], U = ub_[sj];
            cost_[zj] = 0.0;
            if (act[r] >= L - opt_.feas_tol && act[r] <= U + opt_.feas_tol) {
                // logical basic at the (feasible) activity, artificial parked
                basic_[r] = sj;
                vstat_[sj] = VStat::Basic;
                x_[sj] = act[r];
                lb_[zj] = ub_[zj] = 0.0;
                x_[zj] = 0.0;
                vstat_[zj] = VStat::AtLower;
            } else {
                double starget = (act[r] < L) ? L : U;
                x_[sj] = starget;
                vstat_[sj] = (act[r] < L) ? VStat::AtLower : VStat::AtUpper;
                double z = starget - act[r];  // row: act - s + z = 0
                basic_[r] = zj;
                vstat_[zj] = VStat::Basic;
                x_[zj] = z;
                if (z >= 0) {
                    lb_[zj] = 0.0;
                    ub_[zj] = kInf;
                    cost_[zj] = 1.0;
                } else {
                    lb_[zj] = -kInf;
                    ub_[zj] = 0.0;
                    cost_[zj] = -1.0;
                }
            }
        }
        std::fill(pos_.begin(), pos_.end(), -1);
        for (int p = 0; p < m_; ++p) pos_[basic_[p]] = p;
        basis_loaded_ = true;
        refactorize();
    }

    double phase1_infeasibility() const {
        double s = 0.0;
        for (int r = 0; r < m_; ++r) s += std::fabs(x_[art(r)]);
        return s;
    }

    void seal_artificials() {
        for (int r = 0; r < m_; ++r) {
            int zj = art(r);
            lb_[zj] = ub_[zj] = 0.0;
            cost_[zj] = 0.0;
            if (vstat_[zj] != VStat::Basic) {
                x_[zj] = 0.0;
                vstat_[zj] = VStat::AtLower;
            }
        }
    }

    void snap_nonbasic_to_bounds() {
        for (int j = 0; j < ncols_; ++j) {
            switch (vstat_[j]) {
                case VStat::AtLower:
                    x_[j] = (lb_[j] > -kInf) ? lb_[j] : (ub_[j] < kInf ? ub_[j] : 0.0);
                    if (lb_[j] == -kInf && ub_[j] < kInf) vstat_[j] = VStat::AtUpper;
                    else if (lb_[j] == -kInf) vstat_[j] = VStat::FreeZero;
                    break;
                case VStat::AtUpper:
                    x_[j] = (ub_[j] < kInf) ? ub_[j] : (lb_[j] > -kInf ? lb_[j] : 0.0);
                    if (ub_[j] == kInf && lb_[j] > -kInf) vstat_[j] = VStat::AtLower;
                    else if (ub_[j] == kInf) vstat_[j] = VStat::FreeZero;
                    break;
                default: break;
            }
        }
    }

    // --- factorization -------------------------------------------------

    void refactorize() {
        if (m_ == 0) { etas_.clear(); return; }
        build_and_factor();
        if (lu_.info() != Eigen::Success) {
            // one repair attempt: restart from the trivial logical basis
            for (int r = 0; r < m_; ++r) {
                int old = basic_[r];
                if (vstat_[old] == VStat::Basic) {
                    vstat_[old] = (lb_[old] > -kInf) ? VStat::AtLower
                                 : (ub_[old] < kInf) ? VStat::AtUpper
                                                     : VStat::FreeZero;
                    x_[old] = (vstat_[old] == VStat::AtLower)   ? lb_[old]
                              : (vstat_[old] == VStat::AtUpper) ? ub_[old]
                                                                : 0.0;
                }
            }
            std::fill(pos_.begin(), pos_.end(), -1);
            for (int r = 0; r < m_; ++r) {
                int sj = n_struct_ + r;
                basic_[r] = sj;
                vstat_[sj] = VStat::Basic;
                pos_[sj] = r;
            }
            build_and_factor();
            if (lu_.info() != Eigen::Success)
                throw NumericalInstability("basis factorization failed after retry");
        }
        etas_.clear();
        compute_basic_values();
    }

    void build_and_factor() {
        std::vector<Eigen::Triplet<double>> tr;
        tr.reserve(static_cast<size_t>(m_) * 4);
        for (int p = 0; p < m_; ++p) {
            int j = basic_[p];
            for (int k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k)
                tr.emplace_back(row_idx_[k], p, val_[k]);
        }
        Bmat_.resize(m_, m_);
        Bmat_.setFromTriplets(tr.begin(), tr.end());
        Bmat_.makeCompressed();
        lu_.isSymmetric(false);
        lu_.analyzePattern(Bmat_);
        lu_.factorize(Bmat_);
    }

    struct Eta {
        int p;
        double wp;
        std::vector<std::pair<int, double>> w;  // sparse pivot column incl. p
    };

    // w := B^{-1} a  (a given as dense work vector)
    void ftran(Eigen::VectorXd& v) {
        v = lu_.solve(v);
        for (const auto& e : etas_) {
            double t = v[e.p] / e.wp;
            if (t != 0.0) {
                for (const auto& [i, wi] : e.w)
                    if (i != e.p) v[i] -= wi * t;
            }
            v[e.p] = t;
        }
    }

    // v := B^{-T} v
    void btran(Eigen::VectorXd& v) {
        for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
            double dot = 0.0;
            for (const auto& [i, wi] : it->w) dot += wi * v[i];
            v[it->p] -= (dot - v[it->p]) / it->wp;
        }
        v = lu_.transpose().solve(v);
    }

    void compute_basic_values() {
        if (m_ == 0) return;
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
        for (int j = 0; j < ncols_; ++j) {
            if (vstat_[j] == VStat::Basic || x_[j] == 0.0) continue;
            for (int k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k)
                rhs[row_idx_[k]] -= val_[k] * x_[j];
        }
        ftran(rhs);
        for (int p = 0; p < m_; ++p) x_[basic_[p]] = rhs[p];
    }

    void compute_duals(bool phase1) {
        y_.resize(m_);
        if (m_ == 0) return;
        for (int p = 0; p < m_; ++p) y_[p] = cost_of(basic_[p], phase1);
        btran(y_);
    }

    double cost_of(int j, bool phase1) const {
        if (phase1) return (j >= n_struct_ + m_) ? cost_[j] : 0.0;
        return cost_[j];
    }

    double reduced_cost(int j, bool phase1) const {
        double d = cost_of(j, phase1);
        for (int k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) d -= y_[row_idx_[k]] * val_[k];
        return d;
    }

    // --- primal simplex ------------------------------------------------

    Status primal_loop(bool phase1) {
        if (m_ == 0) return bound_only_optimum(phase1);
        long stall = 0;
        bool bland = false;
        double last_obj = kInf;
        for (;;) {
            if (++iters_ > opt_.iter_limit) return Status::IterLimit;
            compute_duals(phase1);

            int q = -1;
            double best = opt_.dual_tol;
            for (int j = 0; j < ncols_; ++j) {
                VStat st = vstat_[j];
                if (st == VStat::Basic) continue;
                if (lb_[j] == ub_[j]) continue;  // fixed, cannot move
                double d = reduced_cost(j, phase1);
                double viol = 0.0;
                if (st == VStat::AtLower)
                    viol = -d;
                else if (st == VStat::AtUpper)
                    viol = d;
                else
                    viol = std::fabs(d);
                if (viol > best + 1e-15) {
                    q = j;
                    best = viol;
                    if (bland) break;  // lowest eligible index
                }
            }
            if (q < 0) return Status::Optimal;

            double dq = reduced_cost(q, phase1);
            double sgn = 1.0;
            if (vstat_[q] == VStat::AtUpper) sgn = -1.0;
            else if (vstat_[q] == VStat::FreeZero && dq > 0) sgn = -1.0;

            Eigen::VectorXd& w = work_;
            w.setZero();
            for (int k = col_ptr_[q]; k < col_ptr_[q + 1]; ++k) w[row_idx_[k]] = val_[k];
            ftran(w);

            // ratio test: x_B(t) = x_B - t*sgn*w, entering moves by sgn*t
            double span = ub_[q] - lb_[q];  // may be inf
            double t_row = kInf;
            int leave_p = -1;
            double leave_piv = 0.0;
            bool leave_to_upper = false;
            for (int p = 0; p < m_; ++p) {
                double wp = w[p];
                if (std::fabs(wp) <= opt_.pivot_tol) continue;
                int bj = basic_[p];
                double rate = sgn * wp;  // positive: basic decreases
                double ratio;
                bool to_upper;
                if (rate > 0) {
                    if (lb_[bj] == -kInf) continue;
                    ratio = (x_[bj] - lb_[bj]) / rate;
                    to_upper = false;
                } else {
                    if (ub_[bj] == kInf) continue;
                    ratio = (ub_[bj] - x_[bj]) / (-rate);
                    to_upper = true;
                }
                if (ratio < 0) ratio = 0;
                if (ratio < t_row - 1e-10 ||
                    (leave_p >= 0 && ratio < t_row + 1e-10 &&
                     std::fabs(wp) > std::fabs(leave_piv) + 1e-12)) {
                    t_row = ratio;
                    leave_p = p;
                    leave_piv = wp;
                    leave_to_upper = to_upper;
                }
            }

            if (leave_p < 0 && span == kInf) {
                if (phase1)
                    throw NumericalInstability("phase-1 ray detected");
                return Status::Unbounded;
            }

            if (leave_p < 0 || span <= t_row) {
                // bound flip: entering jumps to its opposite bound
                double t = span;
                for (int p = 0; p < m_; ++p) {
                    if (w[p] != 0.0) x_[basic_[p]] -= t * sgn * w[p];
                }
                x_[q] = (sgn > 0) ? ub_[q] : lb_[q];
                vstat_[q] = (sgn > 0) ? VStat::AtUpper : VStat::AtLower;
            } else {
                double t = t_row;
                for (int p = 0; p < m_; ++p) {
                    if (w[p] != 0.0) x_[basic_[p]] -= t * sgn * w[p];
                }
                int lj = basic_[leave_p];
                x_[lj] = leave_to_upper ? ub_[lj] : lb_[lj];
                vstat_[lj] = leave_to_upper ? VStat::AtUpper : VStat::AtLower;
                x_[q] = x_[q] + sgn * t;
                vstat_[q] = VStat::Basic;
                basic_[leave_p] = q;
                pos_[lj] = -1;
                pos_[q] = leave_p;
                push_eta(leave_p, w);
            }

            // stall detection -> Bland's rule
            double obj = phase_objective(phase1);
            if (obj < last_obj - 1e-12 * (1.0 + std::fabs(last_obj))) {
                stall = 0;
                last_obj = obj;
            } else if (++stall > opt_.stall_limit) {
                bland = true;
            }
            if (static_cast<int>(etas_.size()) >= opt_.refactor_every) refactorize();
        }
    }

    Status bound_only_optimum(bool phase1) {
        for (int j = 0; j < n_struct_; ++j) {
            double c = cost_of(j, phase1);
            if (c > 0) {
                if (lb_[j] == -kInf) return Status::Unbounded;
                x_[j] = lb_[j];
                vstat_[j] = VStat::AtLower;
            } else if (c < 0) {
                if (ub_[j] == kInf) return Status::Unbounded;
                x_[j] = ub_[j];
                vstat_[j] = VStat::AtUpper;
            }
        }
        return Status::Optimal;
    }

    double phase_objective(bool phase1) const {
        double z = 0.0;
        for (int j = 0; j < ncols_; ++j) {
            double c = cost_of(j, phase1);
            if (c != 0.0) z += c * x_[j];
        }
        return z;
    }

    void push_eta(int p, const Eigen::VectorXd& w) {
        Eta e;
        e.p = p;
        e.wp = w[p];
        if (std::fabs(e.wp) < opt_.pivot_tol) {
            // unreliable update; rebuild instead
            refactorize();
            return;
        }
        for (int i = 0; i < m_; ++i)
            if (std::fabs(w[i]) > opt_.drop_tol) e.w.emplace_back(i, w[i]);
        etas_.push_back(std::move(e));
    }

    // --- dual simplex ----------------------------------------------------

    Status dual_loop() {
        long stall_guard = 0;
        for (;;) {
            if (++iters_ > opt_.iter_limit) return Status::IterLimit;
            if (++stall_guard > 20L * (m_ + n_struct_) + 5000L) return Status::IterLimit;

            int leave_p = -1;
            double worst = opt_.feas_tol;
            bool below = false;
            for (int p = 0; p < m_; ++p) {
                int j = basic_[p];
                double vlo = lb_[j] - x_[j];
                double vhi = x_[j] - ub_[j];
                if (vlo > worst) {
                    worst = vlo;
                    leave_p = p;
                    below = true;
                }
                if (vhi > worst) {
                    worst = vhi;
                    leave_p = p;
                    below = false;
                }
            }
            if (leave_p < 0) return Status::Optimal;

            // row leave_p of B^{-1}
            Eigen::VectorXd& alpha = work_;
            alpha.setZero();
            alpha[leave_p] = 1.0;
            btran(alpha);

            compute_duals(false);
            // entering: preserves dual feasibility, min |d_j / alpha_j|
            int q = -1;
            double best_theta = kInf;
            double alpha_q = 0.0;
            for (int j = 0; j < ncols_; ++j) {
                if (vstat_[j] == VStat::Basic || lb_[j] == ub_[j]) continue;
                double aj = 0.0;
                for (int k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k)
                    aj += alpha[row_idx_[k]] * val_[k];
                if (std::fabs(aj) <= opt_.pivot_tol) continue;
                // basic must move toward the violated bound:
                //   below (x < lb): x_Bp increases; dx_Bp/dx_j = -aj
                bool ok;
                if (below)
                    ok = (vstat_[j] == VStat::AtLower && aj < 0) ||
                         (vstat_[j] == VStat::AtUpper && aj > 0) ||
                         (vstat_[j] == VStat::FreeZero);
                else
                    ok = (vstat_[j] == VStat::AtLower && aj > 0) ||
                         (vstat_[j] == VStat::AtUpper && aj < 0) ||
                         (vstat_[j] == VStat::FreeZero);
                if (!ok) continue;
                double d = reduced_cost(j, false);
                double theta = std::fabs(d) / std::fabs(aj);
                if (theta < best_theta - 1e-12 ||
                    (theta < best_theta + 1e-12 &&
                     (q < 0 || std::fabs(aj) > std::fabs(alpha_q) + 1e-12))) {
                    best_theta = theta;
                    q = j;
                    alpha_q = aj;
                }
            }
            if (q < 0) return Status::Infeasible;  // dual unbounded

            Eigen::VectorXd& w = work2_;
            w.setZero();
            for (int k = col_ptr_[q]; k < col_ptr_[q + 1]; ++k) w[row_idx_[k]] = val_[k];
            ftran(w);
            if (std::fabs(w[leave_p]) <= opt_.pivot_tol) {
                refactorize();
                continue;
            }

            int lj = basic_[leave_p];
            double target = below ? lb_[lj] : ub_[lj];
            double delta_q = (x_[lj] - target) / w[leave_p];  // dx_q
            for (int p = 0; p < m_; ++p)
                if (w[p] != 0.0) x_[basic_[p]] -= delta_q * w[p];
            x_[lj] = target;
            vstat_[lj] = below ? VStat::AtLower : VStat::AtUpper;
            x_[q] += delta_q;
            vstat_[q] = VStat::Basic;
            basic_[leave_p] = q;
            pos_[lj] = -1;
            pos_[q] = leave_p;
            push_eta(leave_p, w);
            if (static_cast<int>(etas_.size()) >= opt_.refactor_every) refactorize();
        }
    }

    Options opt_;
    int n_struct_ = 0, m_ = 0, ncols_ = 0;
    std::vector<int> col_ptr_, row_idx_;
    std::vector<double> val_;
    std::vector<double> lb_, ub_, cost_, x_;
    std::vector<VStat> vstat_;
    std::vector<int> basic_, pos_;
    bool basis_loaded_ = false;
    long iters_ = 0;

    Eigen::SparseMatrix<double> Bmat_;
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
    std::vector<Eta> etas_;
    Eigen::VectorXd work_, work2_, y_;
};

}  // namespace simplex
}  // namespace flexopt

#endif
