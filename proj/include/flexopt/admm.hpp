#ifndef FLEXOPT_ADMM_HPP
#define FLEXOPT_ADMM_HPP

#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "flexopt/flex.hpp"
#include "flexopt/parallel.hpp"
#include "flexopt/site.hpp"

namespace flexopt {

enum class AdmmVariant { Regular, Fast, PJ, FastPJ, TwoStep };

inline const char* to_string(AdmmVariant v) {
    switch (v) {
        case AdmmVariant::Regular: return "regular";
        case AdmmVariant::Fast: return "fast";
        case AdmmVariant::PJ: return "pj";
        case AdmmVariant::FastPJ: return "fast-pj";
        case AdmmVariant::TwoStep: return "two-step";
    }
    return "?";
}

inline AdmmVariant admm_variant_from_string(const std::string& s) {
    if (s == "regular") return AdmmVariant::Regular;
    if (s == "fast") return AdmmVariant::Fast;
    if (s == "pj") return AdmmVariant::PJ;
    if (s == "fast-pj") return AdmmVariant::FastPJ;
    if (s == "two-step") return AdmmVariant::TwoStep;
    throw std::invalid_argument("unknown ADMM variant '" + s + "'");
}

struct AdmmParams {
    double rho0 = 1e-4;      // initial penalty
    double gamma = 1.5;      // damping
    double tau_incr = 1.5;   // penalty acceleration
    double tau_decr = 2.0;
    double mu = 2.0;
    double k_i = 2e-4;       // accumulated-error gain (soft phase)
    double k_d = -5e-7;      // dual-error gain (soft phase)
    double eps_pri = 0.01;   // [kWh]
    double eps_dual = 0.01;  // [kWh]
    double switch_fraction = 0.05;        // of ||FR||_2
    std::optional<double> switch_abs;     // absolute threshold option [kWh]
    int max_iters = 200;
    double max_time_s = kInf;
    int quad_segments = 16;
    AdmmVariant variant = AdmmVariant::TwoStep;
    int threads = 1;
    MilpOptions milp;

    bool pj_enabled() const {
        return variant == AdmmVariant::PJ || variant == AdmmVariant::FastPJ ||
               variant == AdmmVariant::TwoStep;
    }
    bool rho_accelerated() const {
        return variant == AdmmVariant::Fast || variant == AdmmVariant::FastPJ ||
               variant == AdmmVariant::TwoStep;
    }
    bool soft_enabled() const { return variant == AdmmVariant::TwoStep; }

    void validate() const {
        if (!(rho0 > 0)) throw std::invalid_argument("admm: rho0 must be > 0");
        if (!(tau_incr > 1 && tau_decr > 1)) throw std::invalid_argument("admm: tau must be > 1");
        if (!(mu > 1)) throw std::invalid_argument("admm: mu must be > 1");
        if (!(gamma > 0 && gamma < 2)) throw std::invalid_argument("admm: gamma outside (0,2)");
        if (max_iters < 1) throw std::invalid_argument("admm: max_iters < 1");
    }
};

// --- update rules (pure arithmetic) -------------------------------------

inline double admm_residual_primal(double aggregate, double w_flex) {
    return aggregate - w_flex;
}

inline double admm_residual_dual(double r_now, double r_prev) { return r_now - r_prev; }

inline double admm_update_rho(double rho, double r_norm, double s_norm, double tau_incr,
                              double tau_decr, double mu) {
    if (r_norm > mu * s_norm) return rho * tau_incr;
    if (s_norm > mu * r_norm) return rho / tau_decr;
    return rho;
}

inline double admm_dual_fast(double lambda, double gamma, double rho, double r) {
    return lambda + gamma * rho * r;
}

inline double admm_dual_soft(double lambda, double gamma, double rho0, double r, double k_i,
                             double accum_r, double k_d, double s) {
    return lambda + gamma * rho0 * r + k_i * accum_r + k_d * s;
}

// --- engine ---------------------------------------------------------------

enum class AdmmPhase { Fast, Soft };

inline const char* to_string(AdmmPhase p) { return p == AdmmPhase::Fast ? "fast" : "soft"; }

struct TraceRecord {
    int k = 0;
    AdmmPhase phase = AdmmPhase::Fast;
    double rho = 0.0;               // penalty used for this iterate's subproblems
    std::map<int, double> lambda;   // dual used for this iterate's subproblems
    double r_norm = 0.0;
    double s_norm = 0.0;
    double total_cost = 0.0;        // sum of site costs f(x_i) [EUR]
    double wall_s = 0.0;
};

using ConvergenceTrace = std::vector<TraceRecord>;

enum class AdmmTermination { Converged, IterCap, TimeCap };

inline const char* to_string(AdmmTermination t) {
    switch (t) {
        case AdmmTermination::Converged: return "Converged";
        case AdmmTermination::IterCap: return "IterCap";
        case AdmmTermination::TimeCap: return "TimeCap";
    }
    return "?";
}

struct AdmmResult {
    std::vector<SiteSchedule> schedules;
    ConvergenceTrace trace;
    AdmmTermination termination = AdmmTermination::IterCap;
    int iterations = 0;        // k of the last iterate
    int switch_iteration = -1; // k*, -1 if the soft phase never engaged
    double total_cost = 0.0;
};

namespace detail {

/// One site's augmented-Lagrangian subproblem against the frozen portfolio
/// state: site cost + lambda coupling + (rho/2) quadratic centered at the
/// residual-compensating target + proximal term on [chi_tot, zeta].
inline SiteSchedule solve_admm_subproblem(
    const SiteSpec& site, int horizon, const FlexRequest& req,
    const std::vector<int>& periods, const std::map<int, double>& lambda, double rho,
    const std::vector<double>& chi_prev_i, const std::vector<double>& zeta_prev_i,
    const std::vector<double>& agg_prev, const AdmmParams& params) {
    Model model;
    SiteVars sv = emit_site(model, site, horizon, site.id.empty() ? "site" : site.id);
    for (size_t pi = 0; pi < periods.size(); ++pi) {
        int t = periods[pi];
        model.add_obj(sv.chi_tot[t], lambda.at(t));
        double center = req.w_flex(t) - (agg_prev[pi] - chi_prev_i[static_cast<size_t>(t)]);
        add_separable_quadratic(model, sv.chi_tot[t], center, rho / 2.0,
                                params.quad_segments);
    }
    if (params.pj_enabled()) {
        for (int t = 0; t < horizon; ++t) {
            add_separable_quadratic(model, sv.chi_tot[t], chi_prev_i[static_cast<size_t>(t)],
                                    0.5, params.quad_segments);
            add_separable_quadratic(model, sv.zeta[t], zeta_prev_i[static_cast<size_t>(t)],
                                    0.5, params.quad_segments);
        }
    }
    Solution sol = solve_milp(model, params.milp);
    if (sol.status != SolveStatus::Optimal)
        throw SolveFailure(sol.status, "ADMM subproblem for site '" + site.id + "' ended " +
                                           std::string(to_string(sol.status)));
    return extract_site_schedule(sol, site, sv);
}

}  // namespace detail

/// Two-steps Fast-PJ-ADMM (and its ablations, per `params.variant`) for the
/// flexibility exchange problem. `baseline` provides x^(0) (the independent
/// site optima) and the request carries W_base.
inline AdmmResult run_admm(const std::vector<SiteSpec>& sites, const FlexRequest& req,
                           const AdmmParams& params, const BaselineResult& baseline) {
    params.validate();
    req.validate();
    const int horizon = req.horizon();
    const int n_sites = static_cast<int>(sites.size());
    const std::vector<int> periods = req.constrained_periods();
    const double fr_norm = req.fr_norm2();
    const double switch_threshold =
        params.switch_abs ? *params.switch_abs : params.switch_fraction * fr_norm;

    auto t0 = std::chrono::steady_clock::now();
    auto wall = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    AdmmResult res;
    std::vector<SiteSchedule> x = baseline.schedules;

    std::map<int, double> lambda;
    for (int t : periods) lambda[t] = 0.0;
    double rho = params.rho0;
    std::map<int, double> accum;
    for (int t : periods) accum[t] = 0.0;
    AdmmPhase phase = AdmmPhase::Fast;
    int kstar = -1;

    auto aggregate = [&](const std::vector<SiteSchedule>& xs) {
        std::vector<double> agg(periods.size(), 0.0);
        for (size_t pi = 0; pi < periods.size(); ++pi)
            for (const auto& s : xs) agg[pi] += s.chi_tot[static_cast<size_t>(periods[pi])];
        return agg;
    };
    auto total_cost = [&](const std::vector<SiteSchedule>& xs) {
        double c = 0.0;
        for (const auto& s : xs) c += s.total_cost;
        return c;
    };
    auto norm2 = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        return std::sqrt(s);
    };

    std::vector<double> agg = aggregate(x);
    std::vector<double> r(periods.size(), 0.0), r_prev(periods.size(), 0.0),
        s_res(periods.size(), 0.0);
    for (size_t pi = 0; pi < periods.size(); ++pi)
        r[pi] = admm_residual_primal(agg[pi], req.w_flex(periods[pi]));
    double r_norm = norm2(r), s_norm = 0.0;

    auto record = [&](int k, double cost) {
        TraceRecord rec;
        rec.k = k;
        rec.phase = phase;
        rec.rho = rho;
        rec.lambda = lambda;
        rec.r_norm = r_norm;
        rec.s_norm = s_norm;
        rec.total_cost = cost;
        rec.wall_s = wall();
        res.trace.push_back(std::move(rec));
    };

    record(0, baseline.total_cost);
    res.iterations = 0;
    if (r_norm <= params.eps_pri && s_norm <= params.eps_dual) {
        res.termination = AdmmTermination::Converged;
        res.schedules = std::move(x);
        res.total_cost = baseline.total_cost;
        res.switch_iteration = kstar;
        return res;
    }

    for (int k = 1; k <= params.max_iters; ++k) {
        if (wall() > params.max_time_s) {
            res.termination = AdmmTermination::TimeCap;
            break;
        }

        // concurrent x-update against the frozen state
        std::vector<SiteSchedule> x_new(static_cast<size_t>(n_sites));
        std::vector<double> agg_prev = agg;
        parallel_for_indexed(n_sites, params.threads, [&](int i) {
            x_new[static_cast<size_t>(i)] = detail::solve_admm_subproblem(
                sites[static_cast<size_t>(i)], horizon, req, periods, lambda, rho,
                x[static_cast<size_t>(i)].chi_tot, x[static_cast<size_t>(i)].zeta, agg_prev,
                params);
        });
        x = std::move(x_new);

        agg = aggregate(x);
        r_prev = r;
        for (size_t pi = 0; pi < periods.size(); ++pi) {
            r[pi] = admm_residual_primal(agg[pi], req.w_flex(periods[pi]));
            s_res[pi] = admm_residual_dual(r[pi], r_prev[pi]);
        }
        r_norm = norm2(r);
        s_norm = norm2(s_res);

        // one-way phase switch at the first crossing (Eq. (8) accumulates from k*)
        if (params.soft_enabled() && phase == AdmmPhase::Fast && r_norm <= switch_threshold) {
            phase = AdmmPhase::Soft;
            kstar = k;
        }

        double cost = total_cost(x);
        record(k, cost);
        res.iterations = k;

        if (r_norm <= params.eps_pri && s_norm <= params.eps_dual) {
            res.termination = AdmmTermination::Converged;
            res.schedules = std::move(x);
            res.total_cost = cost;
            res.switch_iteration = kstar;
            return res;
        }

        if (phase == AdmmPhase::Fast) {
            if (params.rho_accelerated())
                rho = admm_update_rho(rho, r_norm, s_norm, params.tau_incr, params.tau_decr,
                                      params.mu);
            for (size_t pi = 0; pi < periods.size(); ++pi)
                lambda[periods[pi]] =
                    admm_dual_fast(lambda[periods[pi]], params.gamma, rho, r[pi]);
        } else {
            for (size_t pi = 0; pi < periods.size(); ++pi) {
                accum[periods[pi]] += r[pi];
                lambda[periods[pi]] =
                    admm_dual_soft(lambda[periods[pi]], params.gamma, params.rho0, r[pi],
                                   params.k_i, accum[periods[pi]], params.k_d, s_res[pi]);
            }
        }
        if (k == params.max_iters) res.termination = AdmmTermination::IterCap;
    }

    res.schedules = std::move(x);
    res.total_cost = total_cost(res.schedules);
    res.switch_iteration = kstar;
    return res;
}

}  // namespace flexopt

#endif
