#ifndef FLEXOPT_TESTS_TABLEAU_ORACLE_HPP
#define FLEXOPT_TESTS_TABLEAU_ORACLE_HPP

// Independent LP oracle: classic dense full-tableau simplex with Big-M and
// Bland's rule. Intentionally shares no code with flexopt::simplex; used to
// cross-check the production solver on small instances. Requires finite
// lower bounds on all variables.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "flexopt/model.hpp"

namespace oracle {

struct TableauResult {
    bool feasible = false;
    bool bounded = true;
    double objective = 0.0;
    std::vector<double> x;
};

inline TableauResult solve_tableau(const flexopt::Model& model) {
    using flexopt::RowSense;
    const int n = model.num_vars();

    // shift x = lb + x', collect rows (including finite upper bounds)
    std::vector<double> lb(n), shift_obj(1, 0.0);
    double c0 = 0.0;
    for (int j = 0; j < n; ++j) {
        lb[j] = model.var(j).lb;
        if (!(lb[j] > -flexopt::kInf))
            throw std::invalid_argument("tableau oracle needs finite lower bounds");
        c0 += model.var(j).obj * lb[j];
    }

    struct Row {
        std::vector<double> a;
        double b;
        RowSense s;
    };
    std::vector<Row> rows;
    for (const auto& r : model.rows()) {
        Row row{std::vector<double>(n, 0.0), r.rhs, r.sense};
        for (const auto& t : r.terms) {
            row.a[t.col] += t.coef;
            row.b -= t.coef * lb[t.col];
        }
        rows.push_back(std::move(row));
    }
    for (int j = 0; j < n; ++j) {
        double ub = model.var(j).ub;
        if (ub < flexopt::kInf && ub > lb[j]) {
            Row row{std::vector<double>(n, 0.0), ub - lb[j], RowSense::LE};
            row.a[j] = 1.0;
            rows.push_back(std::move(row));
        } else if (ub == lb[j]) {
            Row row{std::vector<double>(n, 0.0), 0.0, RowSense::EQ};
            row.a[j] = 1.0;
            rows.push_back(std::move(row));
        }
    }

    const int m = static_cast<int>(rows.size());
    // normalize to b >= 0
    for (auto& r : rows) {
        if (r.b < 0) {
            for (auto& v : r.a) v = -v;
            r.b = -r.b;
            r.s = (r.s == RowSense::LE) ? RowSense::GE : (r.s == RowSense::GE ? RowSense::LE : RowSense::EQ);
        }
    }
    int n_slack = 0, n_art = 0;
    for (const auto& r : rows) {
        if (r.s != RowSense::EQ) ++n_slack;
        if (r.s != RowSense::LE) ++n_art;
    }
    const int total = n + n_slack + n_art;
    const double bigM = 1e7;

    // tableau: m rows x (total+1), plus objective row
    std::vector<std::vector<double>> T(m + 1, std::vector<double>(total + 1, 0.0));
    std::vector<int> basis(m, -1);
    int sc = n, ac = n + n_slack;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) T[i][j] = rows[i].a[j];
        T[i][total] = rows[i].b;
        if (rows[i].s == RowSense::LE) {
            T[i][sc] = 1.0;
            basis[i] = sc++;
        } else if (rows[i].s == RowSense::GE) {
            T[i][sc] = -1.0;
            ++sc;
            T[i][ac] = 1.0;
            basis[i] = ac++;
        } else {
            T[i][ac] = 1.0;
            basis[i] = ac++;
        }
    }
    for (int j = 0; j < n; ++j) T[m][j] = model.var(j).obj;
    for (int j = n + n_slack; j < total; ++j) T[m][j] = bigM;
    // price out the basic artificials
    for (int i = 0; i < m; ++i)
        if (basis[i] >= n + n_slack)
            for (int j = 0; j <= total; ++j) T[m][j] -= bigM * T[i][j];

    const double eps = 1e-9;
    for (long iter = 0; iter < 200000; ++iter) {
        int q = -1;  // Bland: first column with negative reduced cost
        for (int j = 0; j < total; ++j)
            if (T[m][j] < -eps) {
                q = j;
                break;
            }
        if (q < 0) break;
        int piv = -1;
        double best = flexopt::kInf;
        for (int i = 0; i < m; ++i) {
            if (T[i][q] > eps) {
                double ratio = T[i][total] / T[i][q];
                if (ratio < best - 1e-12 ||
                    (ratio < best + 1e-12 && (piv < 0 || basis[i] < basis[piv]))) {
                    best = ratio;
                    piv = i;
                }
            }
        }
        if (piv < 0) return {true, false, 0.0, {}};  // unbounded
        double pv = T[piv][q];
        for (int j = 0; j <= total; ++j) T[piv][j] /= pv;
        for (int i = 0; i <= m; ++i) {
            if (i == piv) continue;
            double f = T[i][q];
            if (f == 0.0) continue;
            for (int j = 0; j <= total; ++j) T[i][j] -= f * T[piv][j];
        }
        basis[piv] = q;
    }

    // infeasible if an artificial stays basic at a positive level
    for (int i = 0; i < m; ++i)
        if (basis[i] >= n + n_slack && T[i][total] > 1e-6) return {false, true, 0.0, {}};

    TableauResult res;
    res.feasible = true;
    res.x.assign(n, 0.0);
    for (int i = 0; i < m; ++i)
        if (basis[i] < n) res.x[basis[i]] = T[i][total];
    res.objective = c0;
    for (int j = 0; j < n; ++j) {
        res.x[j] += lb[j];
        res.objective += model.var(j).obj * (res.x[j] - lb[j]);
    }
    return res;
}

}  // namespace oracle

#endif
