#include <doctest.h>

#include "flexopt/model.hpp"
#include "flexopt/solver.hpp"
#include "support/rng.hpp"
#include "support/tableau_oracle.hpp"

#include <sstream>

using namespace flexopt;

TEST_CASE("single-constraint LP: min x s.t. x >= 3") {
    Model m;
    VarId x = m.add_variable("x", 0.0, 10.0, 1.0);
    m.add_constraint({{x, 1.0}}, RowSense::GE, 3.0);
    Solution s = solve_lp(m);
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(s.value(x) == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(s.objective == doctest::Approx(3.0).epsilon(1e-9));
    REQUIRE(s.duals.size() == 1);
    CHECK(s.duals[0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("degenerate optimum: min -x-y s.t. x+y <= 1") {
    Model m;
    VarId x = m.add_variable("x", 0.0, kInf, -1.0);
    VarId y = m.add_variable("y", 0.0, kInf, -1.0);
    m.add_constraint({{x, 1.0}, {y, 1.0}}, RowSense::LE, 1.0);
    Solution s = solve_lp(m);
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(s.objective == doctest::Approx(-1.0).epsilon(1e-9));
    // any vertex of the optimal face is acceptable
    CHECK(s.value(x) + s.value(y) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("infeasible and unbounded LPs are reported") {
    Model m1;
    VarId x = m1.add_variable("x", 0.0, 1.0, 1.0);
    m1.add_constraint({{x, 1.0}}, RowSense::GE, 2.0);
    CHECK(solve_lp(m1).status == SolveStatus::Infeasible);

    Model m2;
    VarId z = m2.add_variable("z", 0.0, kInf, -1.0);
    m2.add_constraint({{z, -1.0}}, RowSense::LE, 0.0);
    CHECK(solve_lp(m2).status == SolveStatus::Unbounded);
}

TEST_CASE("bound-only model (no rows)") {
    Model m;
    VarId x = m.add_variable("x", 3.0, 10.0, 1.0);
    VarId y = m.add_variable("y", -2.0, 5.0, -2.0);
    Solution s = solve_lp(m);
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(s.value(x) == doctest::Approx(3.0));
    CHECK(s.value(y) == doctest::Approx(5.0));
}

namespace {

Model random_lp(testrng::Rng& rng, int n_vars, int n_rows) {
    Model m;
    for (int j = 0; j < n_vars; ++j) {
        double lo = rng.uniform(-5.0, 0.0);
        double hi = lo + rng.uniform(0.5, 8.0);
        m.add_variable("x" + std::to_string(j), lo, hi, rng.uniform(-2.0, 2.0));
    }
    for (int r = 0; r < n_rows; ++r) {
        std::vector<RowTerm> terms;
        for (int j = 0; j < n_vars; ++j)
            if (rng.uniform() < 0.4) terms.push_back({j, rng.uniform(-3.0, 3.0)});
        if (terms.empty()) terms.push_back({rng.uniform_int(0, n_vars - 1), 1.0});
        double rhs = rng.uniform(-4.0, 6.0);
        double u = rng.uniform();
        RowSense sense = u < 0.45 ? RowSense::LE : (u < 0.9 ? RowSense::GE : RowSense::EQ);
        m.add_constraint(std::move(terms), sense, rhs);
    }
    return m;
}

}  // namespace

TEST_CASE("randomized 20-var LPs match the dense tableau oracle") {
    int optimal_seen = 0;
    for (uint64_t seed = 1; seed <= 60; ++seed) {
        testrng::Rng rng(seed * 7919);
        Model m = random_lp(rng, 20, 14);
        Solution s = solve_lp(m);
        auto ref = oracle::solve_tableau(m);
        INFO("seed ", seed);
        if (!ref.feasible) {
            CHECK(s.status == SolveStatus::Infeasible);
            continue;
        }
        if (!ref.bounded) {
            CHECK(s.status == SolveStatus::Unbounded);
            continue;
        }
        REQUIRE(s.status == SolveStatus::Optimal);
        CHECK(s.objective == doctest::Approx(ref.objective).epsilon(1e-6));
        ++optimal_seen;
    }
    CHECK(optimal_seen >= 20);  // the family is not degenerate
}

TEST_CASE("strong duality holds on random optimal LPs") {
    for (uint64_t seed = 200; seed < 240; ++seed) {
        testrng::Rng rng(seed);
        Model m = random_lp(rng, 12, 8);
        Solution s = solve_lp(m);
        if (s.status != SolveStatus::Optimal) continue;
        // dual objective: y'b + sum over nonbasic-at-bound reduced costs * bound
        REQUIRE(s.duals.size() == m.rows().size());
        std::vector<double> rc(m.num_vars());
        for (int j = 0; j < m.num_vars(); ++j) rc[j] = m.var(j).obj;
        double dual_obj = 0.0;
        for (size_t r = 0; r < m.rows().size(); ++r) {
            dual_obj += s.duals[r] * m.rows()[r].rhs;
            for (const auto& t : m.rows()[r].terms) rc[t.col] -= s.duals[r] * t.coef;
        }
        for (int j = 0; j < m.num_vars(); ++j) {
            if (std::fabs(rc[j]) > 1e-7) dual_obj += rc[j] * s.value(j);
        }
        INFO("seed ", seed);
        CHECK(dual_obj == doctest::Approx(s.objective).epsilon(1e-6));
    }
}

TEST_CASE("identical models solve bit-for-bit identically") {
    testrng::Rng rng(424242);
    Model m = random_lp(rng, 15, 10);
    Solution a = solve_lp(m);
    Solution b = solve_lp(m);
    REQUIRE(a.status == b.status);
    if (a.status == SolveStatus::Optimal) {
        CHECK(a.objective == b.objective);  // exact
        for (int j = 0; j < m.num_vars(); ++j) CHECK(a.value(j) == b.value(j));
        for (size_t r = 0; r < a.duals.size(); ++r) CHECK(a.duals[r] == b.duals[r]);
    }
}

TEST_CASE("LP file dump has the expected sections") {
    Model m;
    VarId x = m.add_variable("x", 0.0, 2.0, 1.0);
    VarId b = m.add_variable("b", 0.0, 1.0, 0.0, VarKind::Binary);
    VarId w1 = m.add_variable("w1", 0.0, 1.0, 0.0);
    VarId w2 = m.add_variable("w2", 0.0, 1.0, 0.0);
    VarId w3 = m.add_variable("w3", 0.0, 1.0, 0.0);
    m.add_constraint({{x, 1.0}, {b, -2.0}}, RowSense::LE, 0.0, "cap");
    m.add_sos2({w1, w2, w3});
    std::ostringstream os;
    m.write_lp(os);
    std::string lp = os.str();
    CHECK(lp.find("Minimize") != std::string::npos);
    CHECK(lp.find("Subject To") != std::string::npos);
    CHECK(lp.find("Bounds") != std::string::npos);
    CHECK(lp.find("Binary") != std::string::npos);
    CHECK(lp.find("SOS") != std::string::npos);
    CHECK(lp.find("S2::") != std::string::npos);
    CHECK(lp.find("cap:") != std::string::npos);
}
