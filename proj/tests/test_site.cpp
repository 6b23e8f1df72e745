#include <doctest.h>

#include "flexopt/scenario.hpp"
#include "flexopt/site.hpp"
#include "flexopt/solver.hpp"
#include "support/enumeration.hpp"

using namespace flexopt;

namespace {

SiteSpec flat_site(int horizon, double price = 0.10) {
    SiteSpec s;
    s.id = "t";
    s.import_cap = 10.0;
    s.export_cap = 10.0;
    s.price_buy.assign(horizon, price);
    s.price_sell.assign(horizon, 0.05);
    s.price_curtail.assign(horizon, 0.20);
    s.load.assign(horizon, 1.0);
    s.pv.assign(horizon, 0.0);
    BatterySpec b;
    b.capacity = 10.0;
    b.floor_kwh = 0.0;
    b.q_charge = b.q_discharge = 3.8;
    b.eff_charge = b.eff_discharge = 1.0;
    b.segment_caps = default_segment_caps(10.0, 0.0, 1);
    b.segment_costs = {0.05};
    b.inverter_curve = {{0.0, 1.0}, {1.0, 1.0}};
    b.initial_soc = 0.0;
    b.cal_s0 = 0.0;
    b.cal_s_soc = 0.0;
    b.cv_tuning = 0.0;
    s.battery = b;
    return s;
}

}  // namespace

TEST_CASE("24-period site with 10-segment battery has 72 binaries") {
    Scenario sc = generate_synthetic(1, 7);
    auto [model, sv] = build_site_model(sc.sites[0], sc.horizon.periods);
    CHECK(model.num_binaries() == 72);
}

TEST_CASE("dead battery, no load, no PV: all-zero schedule, calendar floor cost") {
    SiteSpec s = flat_site(4);
    s.load.assign(4, 0.0);
    s.battery.q_charge = s.battery.q_discharge = 0.0;
    s.battery.cal_s0 = 0.3;
    s.battery.cal_s_soc = 1.7;
    SiteSchedule sched = optimize_site(s, 4);
    double floor_cost = 4.0 * s.battery.invest_cost / s.battery.lifetime_ptus * 0.3;
    CHECK(sched.total_cost == doctest::Approx(floor_cost).epsilon(1e-9));
    for (int t = 0; t < 4; ++t) {
        CHECK(sched.buy[t] == doctest::Approx(0.0));
        CHECK(sched.sell[t] == doctest::Approx(0.0));
        CHECK(sched.battery.charge[t] == doctest::Approx(0.0));
        CHECK(sched.battery.discharge[t] == doctest::Approx(0.0));
    }
}

TEST_CASE("flat prices: battery stays idle (cycling is pure loss)") {
    SiteSpec s = flat_site(6);
    s.battery.eff_charge = s.battery.eff_discharge = 0.95;
    SiteSchedule sched = optimize_site(s, 6);
    for (int t = 0; t < 6; ++t) {
        CHECK(sched.battery.charge[t] == doctest::Approx(0.0).epsilon(1e-7));
        CHECK(sched.battery.discharge[t] == doctest::Approx(0.0).epsilon(1e-7));
    }
}

TEST_CASE("2-period arbitrage: wide spread cycles, narrow spread does not") {
    SiteSpec s = flat_site(2);
    s.battery.segment_costs = {0.05};

    SUBCASE("spread 0.30 vs cycle cost 0.05: full charge then discharge") {
        s.price_buy = {0.05, 0.35};
        s.load = {1.0, 5.0};  // the expensive period can absorb a full discharge
        SiteSchedule sched = optimize_site(s, 2);
        CHECK(sched.battery.charge[0] == doctest::Approx(3.8).epsilon(1e-7));
        CHECK(sched.battery.discharge[1] == doctest::Approx(3.8).epsilon(1e-7));
    }
    SUBCASE("spread 0.03 below cycle cost: battery idle") {
        s.price_buy = {0.32, 0.35};
        SiteSchedule sched = optimize_site(s, 2);
        CHECK(sched.battery.charge[0] == doctest::Approx(0.0).epsilon(1e-7));
        CHECK(sched.battery.discharge[1] == doctest::Approx(0.0).epsilon(1e-7));
    }
    SUBCASE("cycle decision matches the closed-form profit test across spreads") {
        for (double spread : {0.01, 0.03, 0.07, 0.10, 0.20, 0.30}) {
            s.price_buy = {0.05, 0.05 + spread};
            SiteSchedule sched = optimize_site(s, 2);
            bool cycles = sched.battery.discharge[1] > 1e-6;
            bool profitable = spread > 0.05;  // eta=1, cycle cost 0.05, no calendar
            INFO("spread ", spread);
            CHECK(cycles == profitable);
        }
    }
}

TEST_CASE("energy balance and exclusivity hold on the synthetic site") {
    Scenario sc = generate_synthetic(2, 99);
    for (const auto& site : sc.sites) {
        SiteSchedule sched = optimize_site(site, sc.horizon.periods);
        for (int t = 0; t < sc.horizon.periods; ++t) {
            double lhs = sched.buy[t] + sched.battery.discharge[t] + sched.psi[t];
            double rhs = sched.sell[t] + sched.battery.charge[t] + site.load[t];
            CHECK(std::fabs(lhs - rhs) < 1e-6);
            CHECK(sched.buy[t] * sched.sell[t] == doctest::Approx(0.0).epsilon(1e-8));
            CHECK(sched.chi_tot[t] ==
                  doctest::Approx(sched.buy[t] - sched.sell[t]).epsilon(1e-8));
        }
    }
}

TEST_CASE("PV surplus shifts into the evening; no curtailment with ample export") {
    Scenario sc = generate_synthetic(1, 3);
    const SiteSpec& site = sc.sites[0];
    SiteSchedule sched = optimize_site(site, sc.horizon.periods);
    double charged_in_surplus = 0.0, charged_elsewhere = 0.0, evening_discharge = 0.0;
    for (int t = 0; t < sc.horizon.periods; ++t) {
        if (site.pv[t] > site.load[t])
            charged_in_surplus += sched.battery.charge[t];
        else
            charged_elsewhere += sched.battery.charge[t];
        if (t >= 18) evening_discharge += sched.battery.discharge[t];
        CHECK(sched.psi[t] == doctest::Approx(site.pv[t]).epsilon(1e-7));
    }
    CHECK(charged_in_surplus > 0.5);
    CHECK(evening_discharge > 0.5);
    CHECK(charged_elsewhere < 1e-6);
}

TEST_CASE("3-period site matches the discretized-action enumeration oracle") {
    for (uint64_t seed : {11u, 12u, 13u}) {
        SynthTemplate tpl;
        tpl.periods = 3;
        tpl.segments = 2;
        tpl.flat_inverter = true;
        tpl.include_request = false;
        Scenario sc = generate_synthetic(1, seed, tpl);
        SiteSpec site = sc.sites[0];
        auto oracle_best = oracle::best_site_cost(site, 3);
        REQUIRE(oracle_best.has_value());

        auto [model, sv] = build_site_model(site, 3);
        oracle::discretize_battery_actions(model, sv, site.battery);
        MilpOptions opt;
        opt.gap_tol = 0.0;
        Solution sol = solve_milp(model, opt);
        REQUIRE(sol.status == SolveStatus::Optimal);
        INFO("seed ", seed);
        CHECK(sol.objective == doctest::Approx(*oracle_best).epsilon(1e-6));
    }
}

TEST_CASE("baseline aggregation") {
    SUBCASE("single site: baseline equals its chi_tot") {
        Scenario sc = generate_synthetic(1, 21);
        BaselineResult base = compute_baseline(sc.sites, sc.horizon.periods);
        for (int t = 0; t < sc.horizon.periods; ++t)
            CHECK(base.w_base[t] == doctest::Approx(base.schedules[0].chi_tot[t]));
    }
    SUBCASE("two identical sites: baseline doubles") {
        Scenario sc = generate_synthetic(1, 22);
        std::vector<SiteSpec> sites = {sc.sites[0], sc.sites[0]};
        sites[1].id = "clone";
        BaselineResult base = compute_baseline(sites, sc.horizon.periods);
        for (int t = 0; t < sc.horizon.periods; ++t)
            CHECK(base.w_base[t] ==
                  doctest::Approx(2.0 * base.schedules[0].chi_tot[t]).epsilon(1e-9));
    }
    SUBCASE("worker count does not change the result") {
        Scenario sc = generate_synthetic(6, 23);
        BaselineResult a = compute_baseline(sc.sites, sc.horizon.periods, 1);
        BaselineResult b = compute_baseline(sc.sites, sc.horizon.periods, 4);
        for (int t = 0; t < sc.horizon.periods; ++t) CHECK(a.w_base[t] == b.w_base[t]);
        CHECK(a.total_cost == b.total_cost);
    }
    SUBCASE("infeasible site is reported by id") {
        Scenario sc = generate_synthetic(1, 24);
        sc.sites[0].import_cap = 0.0;
        sc.sites[0].export_cap = 0.0;  // load cannot be served
        try {
            compute_baseline(sc.sites, sc.horizon.periods);
            FAIL("expected SolveFailure");
        } catch (const SolveFailure& e) {
            CHECK(std::string(e.what()).find("site001") != std::string::npos);
        }
    }
}

TEST_CASE("series length mismatch is rejected with the series name") {
    SiteSpec s = flat_site(4);
    s.load.pop_back();
    try {
        s.validate(4);
        FAIL("expected invalid_argument");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("load") != std::string::npos);
    }
}
