#include <doctest.h>

#include "flexopt/model.hpp"
#include "flexopt/solver.hpp"
#include "support/rng.hpp"

using namespace flexopt;

TEST_CASE("knapsack: min -3x1-2x2 s.t. 2x1+x2 <= 2, x binary") {
    Model m;
    VarId x1 = m.add_variable("x1", 0.0, 1.0, -3.0, VarKind::Binary);
    VarId x2 = m.add_variable("x2", 0.0, 1.0, -2.0, VarKind::Binary);
    m.add_constraint({{x1, 2.0}, {x2, 1.0}}, RowSense::LE, 2.0);
    Solution s = solve_milp(m);
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(s.objective == doctest::Approx(-3.0).epsilon(1e-9));
    CHECK(s.value(x1) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("SOS2 adjacency: forcing w1=w3=0.5 is infeasible") {
    Model m;
    VarId w1 = m.add_variable("w1", 0.5, 0.5, 0.0);
    VarId w2 = m.add_variable("w2", 0.0, 1.0, 0.0);
    VarId w3 = m.add_variable("w3", 0.5, 0.5, 0.0);
    m.add_constraint({{w1, 1.0}, {w2, 1.0}, {w3, 1.0}}, RowSense::EQ, 1.0);
    m.add_sos2({w1, w2, w3});
    Solution s = solve_milp(m);
    CHECK(s.status == SolveStatus::Infeasible);
}

TEST_CASE("SOS2 solutions keep at most two adjacent members nonzero") {
    // maximize an objective that would prefer the two extreme members
    Model m;
    VarId w1 = m.add_variable("w1", 0.0, 1.0, -1.0);
    VarId w2 = m.add_variable("w2", 0.0, 1.0, 0.5);
    VarId w3 = m.add_variable("w3", 0.0, 1.0, 0.0);
    VarId w4 = m.add_variable("w4", 0.0, 1.0, -1.0);
    m.add_constraint({{w1, 1.0}, {w2, 1.0}, {w3, 1.0}, {w4, 1.0}}, RowSense::EQ, 1.0);
    m.add_sos2({w1, w2, w3, w4});
    Solution s = solve_milp(m);
    REQUIRE(s.status == SolveStatus::Optimal);
    int nz = 0, first = -1, last = -1, i = 0;
    for (VarId w : {w1, w2, w3, w4}) {
        if (std::fabs(s.value(w)) > 1e-5) {
            if (first < 0) first = i;
            last = i;
            ++nz;
        }
        ++i;
    }
    CHECK(nz <= 2);
    CHECK(last - first <= 1);
    // the best SOS2-feasible point is w1=1 (obj -1), not a w1/w4 mix
    CHECK(s.objective == doctest::Approx(-1.0).epsilon(1e-6));
}

namespace {

// brute force over all binary assignments, solving the remaining LP for each
double enumerate_milp(const Model& m, bool& feasible) {
    std::vector<VarId> bins;
    for (VarId j = 0; j < m.num_vars(); ++j)
        if (m.var(j).kind == VarKind::Binary) bins.push_back(j);
    feasible = false;
    double best = kInf;
    Model work = m;
    for (uint64_t mask = 0; mask < (1ULL << bins.size()); ++mask) {
        for (size_t i = 0; i < bins.size(); ++i) {
            double v = (mask >> i) & 1 ? 1.0 : 0.0;
            work.set_bounds(bins[i], v, v);
        }
        Solution s = solve_lp(work, 1e-6, /*relax=*/true);
        if (s.status == SolveStatus::Optimal && s.objective < best) {
            best = s.objective;
            feasible = true;
        }
    }
    return best;
}

Model random_milp(testrng::Rng& rng, int n_cont, int n_bin, int n_rows) {
    Model m;
    for (int j = 0; j < n_cont; ++j)
        m.add_variable("x" + std::to_string(j), 0.0, rng.uniform(0.5, 4.0),
                       rng.uniform(-2.0, 2.0));
    for (int j = 0; j < n_bin; ++j)
        m.add_variable("b" + std::to_string(j), 0.0, 1.0, rng.uniform(-2.0, 2.0),
                       VarKind::Binary);
    for (int r = 0; r < n_rows; ++r) {
        std::vector<RowTerm> terms;
        for (int j = 0; j < n_cont + n_bin; ++j)
            if (rng.uniform() < 0.5) terms.push_back({j, rng.uniform(-3.0, 3.0)});
        if (terms.empty()) terms.push_back({0, 1.0});
        RowSense sense = rng.uniform() < 0.7 ? RowSense::LE : RowSense::GE;
        m.add_constraint(std::move(terms), sense, rng.uniform(-1.0, 5.0));
    }
    return m;
}

}  // namespace

TEST_CASE("MILPs with few binaries match exhaustive enumeration") {
    int checked = 0;
    for (uint64_t seed = 1; seed <= 40; ++seed) {
        testrng::Rng rng(seed * 104729);
        Model m = random_milp(rng, 4, 6, 6);
        bool enum_feasible = false;
        double enum_obj = enumerate_milp(m, enum_feasible);
        Solution s = solve_milp(m);
        INFO("seed ", seed);
        if (!enum_feasible) {
            CHECK(s.status == SolveStatus::Infeasible);
            continue;
        }
        REQUIRE(s.status == SolveStatus::Optimal);
        CHECK(s.objective == doctest::Approx(enum_obj).epsilon(1e-7));
        ++checked;
    }
    CHECK(checked >= 15);
}

TEST_CASE("MILP determinism: identical model, identical solution") {
    testrng::Rng rng(5150);
    Model m = random_milp(rng, 5, 5, 7);
    Solution a = solve_milp(m);
    Solution b = solve_milp(m);
    REQUIRE(a.status == b.status);
    CHECK(a.node_count == b.node_count);
    if (a.status == SolveStatus::Optimal) {
        CHECK(a.objective == b.objective);
        for (int j = 0; j < m.num_vars(); ++j) CHECK(a.value(j) == b.value(j));
    }
}

TEST_CASE("node limit yields IterLimit status") {
    testrng::Rng rng(31337);
    Model m = random_milp(rng, 3, 10, 8);
    MilpOptions opt;
    opt.node_limit = 1;
    Solution s = solve_milp(m, opt);
    CHECK((s.status == SolveStatus::IterLimit || s.status == SolveStatus::Optimal ||
           s.status == SolveStatus::Infeasible));
}

TEST_CASE("solve_lp refuses un-relaxed integer models") {
    Model m;
    m.add_variable("b", 0.0, 1.0, 1.0, VarKind::Binary);
    CHECK_THROWS_AS(solve_lp(m), std::invalid_argument);
    CHECK_NOTHROW(solve_lp(m, 1e-6, /*relax=*/true));
}
