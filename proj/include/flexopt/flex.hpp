#ifndef FLEXOPT_FLEX_HPP
#define FLEXOPT_FLEX_HPP

#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "flexopt/site.hpp"

namespace flexopt {

/// A flexibility request against a computed baseline. FR_t > 0 asks for
/// up-regulation (consumption decrease), FR_t < 0 for down-regulation; the
/// target profile is W_flex = W_base - FR.
struct FlexRequest {
    std::map<int, double> fr;     // period -> FR_t [kWh], nonzero
    std::vector<double> baseline; // W_base [kWh]
    bool peak_caps = false;
    double penalty = 10.0;        // P_penal [EUR/kWh^2]

    int horizon() const { return static_cast<int>(baseline.size()); }

    std::vector<int> constrained_periods() const {
        std::vector<int> out;
        for (const auto& [t, v] : fr) out.push_back(t);
        return out;
    }
    std::vector<int> up_periods() const {
        std::vector<int> out;
        for (const auto& [t, v] : fr)
            if (v > 0) out.push_back(t);
        return out;
    }
    std::vector<int> down_periods() const {
        std::vector<int> out;
        for (const auto& [t, v] : fr)
            if (v < 0) out.push_back(t);
        return out;
    }
    double fr_at(int t) const {
        auto it = fr.find(t);
        return it == fr.end() ? 0.0 : it->second;
    }
    double w_flex(int t) const { return baseline.at(static_cast<size_t>(t)) - fr_at(t); }
    double max_w_flex() const {
        double m = -kInf;
        for (int t = 0; t < horizon(); ++t) m = std::max(m, w_flex(t));
        return m;
    }
    double fr_norm2() const {
        double s = 0.0;
        for (const auto& [t, v] : fr) s += v * v;
        return std::sqrt(s);
    }

    void validate() const {
        for (const auto& [t, v] : fr) {
            if (t < 0 || t >= horizon())
                throw std::invalid_argument("flex request: period " + std::to_string(t) +
                                            " outside horizon");
            if (v == 0.0)
                throw std::invalid_argument("flex request: zero FR entry at period " +
                                            std::to_string(t));
        }
        if (penalty < 0) throw std::invalid_argument("flex request: negative penalty");
    }
};

struct FlexOffer {
    std::map<int, double> offered;    // per constrained period [kWh]
    std::map<int, double> shortfall;  // FR_t - offered_t [kWh]
    double total_cost = 0.0;          // portfolio cost of the offering schedule [EUR]
};

struct PortfolioVars {
    std::vector<SiteVars> sites;
};

inline PortfolioVars emit_portfolio(Model& model, const std::vector<SiteSpec>& sites,
                                    int horizon) {
    PortfolioVars pv;
    pv.sites.reserve(sites.size());
    for (size_t i = 0; i < sites.size(); ++i) {
        std::string prefix = sites[i].id.empty() ? "s" + std::to_string(i) : sites[i].id;
        pv.sites.push_back(emit_site(model, sites[i], horizon, prefix));
    }
    return pv;
}

inline void emit_peak_caps(Model& model, const PortfolioVars& pv, const FlexRequest& req) {
    double cap = req.max_w_flex();
    for (int t = 0; t < req.horizon(); ++t) {
        std::vector<RowTerm> buys, sells;
        for (const auto& sv : pv.sites) {
            buys.push_back({sv.buy[t], 1.0});
            sells.push_back({sv.sell[t], 1.0});
        }
        model.add_constraint(std::move(buys), RowSense::LE, cap, "peak_buy_" + std::to_string(t));
        model.add_constraint(std::move(sells), RowSense::LE, cap, "peak_sell_" + std::to_string(t));
    }
}

struct CentralOptions {
    MilpOptions milp;
    int quad_segments = 16;
};

struct CentralResult {
    std::vector<SiteSchedule> schedules;
    FlexOffer offer;
    double total_cost = 0.0;
    Solution raw;
};

namespace detail {

inline CentralResult extract_central(const Solution& sol, const std::vector<SiteSpec>& sites,
                                     const PortfolioVars& pv, const FlexRequest& req) {
    CentralResult out;
    out.raw.status = sol.status;
    out.raw.objective = sol.objective;
    out.raw.node_count = sol.node_count;
    out.raw.wall_seconds = sol.wall_seconds;
    for (size_t i = 0; i < sites.size(); ++i) {
        out.schedules.push_back(extract_site_schedule(sol, sites[i], pv.sites[i]));
        out.total_cost += out.schedules.back().total_cost;
    }
    for (int t : req.constrained_periods()) {
        double agg = 0.0;
        for (const auto& s : out.schedules) agg += s.chi_tot[static_cast<size_t>(t)];
        out.offer.offered[t] = req.baseline[static_cast<size_t>(t)] - agg;
        out.offer.shortfall[t] = req.fr_at(t) - out.offer.offered[t];
    }
    out.offer.total_cost = out.total_cost;
    return out;
}

}  // namespace detail

/// ALFO: maximum deliverable flexibility with a quadratic penalty on the
/// unserved part; aggregation constraints keep the activation within the
/// requested direction.
inline CentralResult solve_alfo(const std::vector<SiteSpec>& sites, const FlexRequest& req,
                                const CentralOptions& opt = {}) {
    req.validate();
    int horizon = req.horizon();
    Model model;
    PortfolioVars pv = emit_portfolio(model, sites, horizon);

    double sum_imp = 0.0, sum_exp = 0.0;
    for (const auto& s : sites) {
        sum_imp += s.import_cap;
        sum_exp += s.export_cap;
    }
    for (int t : req.constrained_periods()) {
        std::vector<RowTerm> agg;
        for (const auto& sv : pv.sites) agg.push_back({sv.chi_tot[t], 1.0});
        double wf = req.w_flex(t);
        model.add_constraint(agg, req.fr_at(t) > 0 ? RowSense::GE : RowSense::LE, wf,
                             "agg_" + std::to_string(t));
        // deviation d_t = W_flex - sum chi_tot, penalized quadratically
        VarId d = model.add_variable("dev_" + std::to_string(t), wf - sum_imp, wf + sum_exp, 0.0);
        std::vector<RowTerm> dev{{d, 1.0}};
        for (const auto& sv : pv.sites) dev.push_back({sv.chi_tot[t], 1.0});
        model.add_constraint(std::move(dev), RowSense::EQ, wf, "devdef_" + std::to_string(t));
        add_separable_quadratic(model, d, 0.0, req.penalty, opt.quad_segments);
    }
    if (req.peak_caps) emit_peak_caps(model, pv, req);

    Solution sol = solve_milp(model, opt.milp);
    if (sol.status != SolveStatus::Optimal)
        throw SolveFailure(sol.status,
                           "ALFO solve ended " + std::string(to_string(sol.status)));
    return detail::extract_central(sol, sites, pv, req);
}

/// ALFM: minimum-cost fulfilment of an accepted request (no penalty; the
/// aggregation constraints switch direction so at least the accepted amount
/// is delivered).
inline CentralResult solve_alfm(const std::vector<SiteSpec>& sites, const FlexRequest& req,
                                const CentralOptions& opt = {}) {
    req.validate();
    int horizon = req.horizon();
    Model model;
    PortfolioVars pv = emit_portfolio(model, sites, horizon);
    for (int t : req.constrained_periods()) {
        std::vector<RowTerm> agg;
        for (const auto& sv : pv.sites) agg.push_back({sv.chi_tot[t], 1.0});
        model.add_constraint(std::move(agg), req.fr_at(t) > 0 ? RowSense::LE : RowSense::GE,
                             req.w_flex(t), "agg_" + std::to_string(t));
    }
    if (req.peak_caps) emit_peak_caps(model, pv, req);

    Solution sol = solve_milp(model, opt.milp);
    if (sol.status != SolveStatus::Optimal)
        throw SolveFailure(sol.status,
                           "ALFM solve ended " + std::string(to_string(sol.status)));
    return detail::extract_central(sol, sites, pv, req);
}

struct Acceptance {
    enum class Kind { Decline, Full, Partial };
    Kind kind = Kind::Full;
    double fraction = 1.0;  // for Partial

    static Acceptance decline() { return {Kind::Decline, 0.0}; }
    static Acceptance full() { return {Kind::Full, 1.0}; }
    static Acceptance partial(double f) { return {Kind::Partial, f}; }
};

struct WorkflowOutcome {
    BaselineResult baseline;
    FlexOffer offer;
    std::vector<SiteSchedule> final_schedules;
    double final_cost = 0.0;
    std::string stage;  // "decline" | "full" | "partial"
};

/// The request workflow: baseline, ALFO offer, then depending on the
/// counterparty's answer either keep the baseline, reuse the ALFO schedules,
/// or re-run ALFM on the scaled-down request.
inline WorkflowOutcome run_request_workflow(const std::vector<SiteSpec>& sites, int horizon,
                                            FlexRequest req, Acceptance acc,
                                            int threads = 1, const CentralOptions& opt = {}) {
    WorkflowOutcome out;
    out.baseline = compute_baseline(sites, horizon, threads, opt.milp);
    req.baseline = out.baseline.w_base;
    CentralResult alfo = solve_alfo(sites, req, opt);
    out.offer = alfo.offer;
    switch (acc.kind) {
        case Acceptance::Kind::Decline:
            out.final_schedules = out.baseline.schedules;
            out.final_cost = out.baseline.total_cost;
            out.stage = "decline";
            break;
        case Acceptance::Kind::Full:
            out.final_schedules = std::move(alfo.schedules);
            out.final_cost = alfo.total_cost;
            out.stage = "full";
            break;
        case Acceptance::Kind::Partial: {
            FlexRequest scaled = req;
            scaled.fr.clear();
            for (const auto& [t, v] : req.fr) {
                double f = v * acc.fraction;
                if (f != 0.0) scaled.fr[t] = f;
            }
            CentralResult alfm = solve_alfm(sites, scaled, opt);
            out.final_schedules = std::move(alfm.schedules);
            out.final_cost = alfm.total_cost;
            out.stage = "partial";
            break;
        }
    }
    return out;
}

}  // namespace flexopt

#endif
