#ifndef FLEXOPT_SITE_HPP
#define FLEXOPT_SITE_HPP

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "flexopt/battery.hpp"
#include "flexopt/model.hpp"
#include "flexopt/parallel.hpp"
#include "flexopt/solver.hpp"

namespace flexopt {

/// Thrown when a solve does not reach Optimal and the caller asked for a
/// schedule.
struct SolveFailure : std::runtime_error {
    SolveStatus status;
    SolveFailure(SolveStatus st, const std::string& what)
        : std::runtime_error(what), status(st) {}
};

struct SiteSpec {
    std::string id;
    double import_cap = 10.0;  // X_imp [kWh/PTU]
    double export_cap = 10.0;  // X_exp [kWh/PTU]
    std::vector<double> price_buy, price_sell, price_curtail;  // [EUR/kWh]
    std::vector<double> load, pv;                              // [kWh/PTU]
    BatterySpec battery;

    void validate(int horizon) const {
        auto fail = [&](const std::string& what) {
            throw std::invalid_argument("site '" + id + "': " + what);
        };
        if (!(import_cap >= 0) || import_cap == kInf) fail("import cap must be finite and >= 0");
        if (!(export_cap >= 0) || export_cap == kInf) fail("export cap must be finite and >= 0");
        auto check_series = [&](const std::vector<double>& s, const char* name, bool nonneg) {
            if (static_cast<int>(s.size()) != horizon)
                fail(std::string(name) + " series length " + std::to_string(s.size()) +
                     " does not match horizon " + std::to_string(horizon));
            if (nonneg)
                for (double v : s)
                    if (v < 0) fail(std::string(name) + " has negative entries");
        };
        check_series(price_buy, "price_buy", false);
        check_series(price_sell, "price_sell", false);
        check_series(price_curtail, "price_curtail", false);
        check_series(load, "load", true);
        check_series(pv, "pv", true);
        try {
            battery.validate();
        } catch (const std::invalid_argument& e) {
            fail(e.what());
        }
    }
};

struct SiteVars {
    std::vector<VarId> buy, sell, dbuy, dsell, psi, zeta, chi_tot;
    BatteryVars bat;
};

/// Emits the full site block (energy balance, import/export caps and
/// exclusivity, PV dispatch, flexibility-cost definition, battery block)
/// into `model` and prices the objective terms.
inline SiteVars emit_site(Model& model, const SiteSpec& site, int horizon,
                          const std::string& prefix) {
    site.validate(horizon);
    const BatterySpec& bat = site.battery;

    SiteVars sv;
    sv.bat = emit_battery_constraints(bat, horizon, model, prefix + "_bat");

    const double cal_rate = bat.invest_cost / bat.lifetime_ptus;
    const double cal_soc_coef = cal_rate * bat.cal_s_soc / (2.0 * bat.capacity);
    double max_seg_cost = bat.segment_costs.back();
    double tout_ub = model.var(sv.bat.term_out[0]).ub;

    sv.buy.resize(horizon);
    sv.sell.resize(horizon);
    sv.dbuy.resize(horizon);
    sv.dsell.resize(horizon);
    sv.psi.resize(horizon);
    sv.zeta.resize(horizon);
    sv.chi_tot.resize(horizon);

    auto nm = [&](const char* tag, int t) { return prefix + "_" + tag + "_" + std::to_string(t); };

    for (int t = 0; t < horizon; ++t) {
        sv.buy[t] = model.add_variable(nm("buy", t), 0.0, site.import_cap, site.price_buy[t]);
        sv.sell[t] = model.add_variable(nm("sell", t), 0.0, site.export_cap, -site.price_sell[t]);
        sv.dbuy[t] = model.add_variable(nm("dbuy", t), 0.0, 1.0, 0.0, VarKind::Binary);
        sv.dsell[t] = model.add_variable(nm("dsell", t), 0.0, 1.0, 0.0, VarKind::Binary);
        sv.psi[t] = model.add_variable(nm("psi", t), 0.0, site.pv[t], 0.0);
        double zeta_ub = site.price_curtail[t] * site.pv[t] + max_seg_cost * tout_ub +
                         cal_rate * (bat.cal_s0 + bat.cal_s_soc) + 1.0;
        sv.zeta[t] = model.add_variable(nm("zeta", t), 0.0, zeta_ub, 1.0);
        sv.chi_tot[t] =
            model.add_variable(nm("chitot", t), -site.export_cap, site.import_cap, 0.0);
    }

    for (int t = 0; t < horizon; ++t) {
        // electricity balance: buy + dis + psi = sell + ch + load
        model.add_constraint({{sv.buy[t], 1.0},
                              {sv.bat.discharge[t], 1.0},
                              {sv.psi[t], 1.0},
                              {sv.sell[t], -1.0},
                              {sv.bat.charge[t], -1.0}},
                             RowSense::EQ, site.load[t], nm("bal", t));
        model.add_constraint({{sv.buy[t], 1.0}, {sv.dbuy[t], -site.import_cap}}, RowSense::LE,
                             0.0, nm("impcap", t));
        model.add_constraint({{sv.sell[t], 1.0}, {sv.dsell[t], -site.export_cap}}, RowSense::LE,
                             0.0, nm("expcap", t));
        model.add_constraint({{sv.dbuy[t], 1.0}, {sv.dsell[t], 1.0}}, RowSense::LE, 1.0,
                             nm("excl", t));
        model.add_constraint({{sv.chi_tot[t], 1.0}, {sv.buy[t], -1.0}, {sv.sell[t], 1.0}},
                             RowSense::EQ, 0.0, nm("chidef", t));

        // flexibility cost: zeta = P_gen (pv - psi) + cycle + calendar
        std::vector<RowTerm> zr{{sv.zeta[t], 1.0},
                                {sv.psi[t], site.price_curtail[t]},
                                {sv.bat.soc[t], -cal_soc_coef}};
        double rhs = site.price_curtail[t] * site.pv[t] + cal_rate * bat.cal_s0;
        if (t == 0)
            rhs += cal_soc_coef * bat.initial_soc;
        else
            zr.push_back({sv.bat.soc[t - 1], -cal_soc_coef});
        for (int j = 0; j < bat.num_segments(); ++j)
            zr.push_back({sv.bat.seg_dis[t][j], -bat.segment_costs[j]});
        model.add_constraint(std::move(zr), RowSense::EQ, rhs, nm("zetadef", t));
    }
    return sv;
}

inline std::pair<Model, SiteVars> build_site_model(const SiteSpec& site, int horizon) {
    Model model;
    SiteVars sv = emit_site(model, site, horizon, site.id.empty() ? "site" : site.id);
    return {std::move(model), std::move(sv)};
}

struct SiteSchedule {
    std::string site_id;
    std::vector<double> buy, sell, psi, zeta, chi_tot;
    BatterySchedule battery;
    double total_cost = 0.0;  // [EUR]
};

/// Site cost f(x): energy bill plus flexibility cost, Eq.-(1a)-style.
inline double site_cost(const SiteSpec& site, const std::vector<double>& buy,
                        const std::vector<double>& sell, const std::vector<double>& zeta) {
    double c = 0.0;
    for (size_t t = 0; t < buy.size(); ++t)
        c += site.price_buy[t] * buy[t] - site.price_sell[t] * sell[t] + zeta[t];
    return c;
}

inline SiteSchedule extract_site_schedule(const Solution& sol, const SiteSpec& site,
                                          const SiteVars& sv) {
    SiteSchedule out;
    out.site_id = site.id;
    auto grab = [&](const std::vector<VarId>& v) {
        std::vector<double> r(v.size());
        for (size_t i = 0; i < v.size(); ++i) r[i] = sol.value(v[i]);
        return r;
    };
    out.buy = grab(sv.buy);
    out.sell = grab(sv.sell);
    out.psi = grab(sv.psi);
    out.zeta = grab(sv.zeta);
    out.chi_tot = grab(sv.chi_tot);
    out.battery = extract_battery_schedule(sol, sv.bat);
    out.total_cost = site_cost(site, out.buy, out.sell, out.zeta);
    return out;
}

inline SiteSchedule optimize_site(const SiteSpec& site, int horizon,
                                  const MilpOptions& opt = {}) {
    auto [model, sv] = build_site_model(site, horizon);
    Solution sol = solve_milp(model, opt);
    if (sol.status != SolveStatus::Optimal)
        throw SolveFailure(sol.status, "site '" + site.id + "' solve ended " +
                                           std::string(to_string(sol.status)));
    return extract_site_schedule(sol, site, sv);
}

struct BaselineResult {
    std::vector<SiteSchedule> schedules;
    std::vector<double> w_base;  // aggregated net load per period [kWh]
    double total_cost = 0.0;
};

/// Independent per-site optima; the aggregated chi_tot series is the
/// portfolio baseline. Site solves run on a worker pool, aggregation is in
/// fixed site order.
inline BaselineResult compute_baseline(const std::vector<SiteSpec>& sites, int horizon,
                                       int threads = 1, const MilpOptions& opt = {}) {
    BaselineResult res;
    res.schedules.resize(sites.size());
    parallel_for_indexed(static_cast<int>(sites.size()), threads, [&](int i) {
        res.schedules[static_cast<size_t>(i)] =
            optimize_site(sites[static_cast<size_t>(i)], horizon, opt);
    });
    res.w_base.assign(static_cast<size_t>(horizon), 0.0);
    for (const auto& s : res.schedules) {
        for (int t = 0; t < horizon; ++t) res.w_base[static_cast<size_t>(t)] += s.chi_tot[static_cast<size_t>(t)];
        res.total_cost += s.total_cost;
    }
    return res;
}

}  // namespace flexopt

#endif
