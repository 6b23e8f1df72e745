#ifndef FLEXOPT_SCENARIO_HPP
#define FLEXOPT_SCENARIO_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "flexopt/admm.hpp"
#include "flexopt/flex.hpp"
#include "flexopt/site.hpp"

namespace flexopt {

struct ScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct HorizonSpec {
    int periods = 24;
    double ptu_hours = 1.0;
};

struct RequestSpec {
    std::map<int, double> fr;
    bool peak_caps = false;
    double penalty = 10.0;
};

inline FlexRequest to_flex_request(const RequestSpec& spec, std::vector<double> baseline) {
    FlexRequest req;
    req.fr = spec.fr;
    req.baseline = std::move(baseline);
    req.peak_caps = spec.peak_caps;
    req.penalty = spec.penalty;
    req.validate();
    return req;
}

struct Scenario {
    std::string name;
    uint64_t seed = 0;
    HorizonSpec horizon;
    std::vector<SiteSpec> sites;
    std::optional<RequestSpec> request;

    void validate() const {
        if (horizon.periods <= 0) throw ScenarioError("scenario: horizon must be positive");
        if (sites.empty()) throw ScenarioError("scenario: no sites");
        std::map<std::string, int> seen;
        for (const auto& s : stable_ids()) {
            if (++seen[s] > 1) throw ScenarioError("scenario: duplicate site id '" + s + "'");
        }
        for (const auto& s : sites) {
            try {
                s.validate(horizon.periods);
            } catch (const std::invalid_argument& e) {
                throw ScenarioError(e.what());
            }
        }
        if (request) {
            for (const auto& [t, v] : request->fr) {
                if (t < 0 || t >= horizon.periods)
                    throw ScenarioError("scenario: request period " + std::to_string(t) +
                                        " outside horizon");
                if (v == 0.0)
                    throw ScenarioError("scenario: zero FR entry at period " + std::to_string(t));
            }
        }
    }

    std::vector<std::string> stable_ids() const {
        std::vector<std::string> out;
        for (const auto& s : sites) out.push_back(s.id);
        return out;
    }
};

// --- deterministic value noise (splitmix64 over a tagged key) -------------

namespace detail {
inline uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
inline double unit_noise(uint64_t seed, uint64_t site, uint64_t tag, uint64_t t) {
    uint64_t h = seed;
    h = mix64(h + 0x9e3779b97f4a7c15ULL * (site + 1));
    h = mix64(h + 0x9e3779b97f4a7c15ULL * (tag + 1));
    h = mix64(h + 0x9e3779b97f4a7c15ULL * (t + 1));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}
}  // namespace detail

// --- synthetic generation --------------------------------------------------

struct SynthTemplate {
    int periods = 24;
    double ptu_hours = 1.0;
    int segments = 10;
    int fr_period = 20;        // evening request hour
    double fr_per_site = 0.5;  // [kWh] scaled by fleet size
    double price_peak = 0.16;
    double price_valley = 0.08;
    double price_sell = 0.05;
    double price_curtail = 0.20;
    double battery_capacity = 10.0;
    double battery_power = 3.8;   // [kW]
    double invest_base = 3000.0;  // first site [EUR]
    double invest_step = 0.01;    // +1% per site
    double eff_base = 0.98;
    double eff_step = 0.001;      // -0.1% per site
    double w_bat = 0.2;
    double cal_s0 = 0.3;
    double cal_s_soc = 1.7;
    double lifetime_years = 10.0;
    bool flat_inverter = false;
    bool include_request = true;
    bool peak_caps = false;
    double penalty = 10.0;
    double import_cap = 10.0;
    double export_cap = 10.0;
};

/// Deterministic fleet: midday PV surplus, late-evening load peak, two-level
/// tariff, and the battery cost/efficiency ladder (invest +1% per site,
/// efficiency -0.1% per site).
inline Scenario generate_synthetic(int n_sites, uint64_t seed,
                                   const SynthTemplate& tpl = {}) {
    if (n_sites < 1) throw std::invalid_argument("generate_synthetic: n_sites < 1");
    Scenario sc;
    sc.name = "synthetic-" + std::to_string(n_sites) + "-seed" + std::to_string(seed);
    sc.seed = seed;
    sc.horizon.periods = tpl.periods;
    sc.horizon.ptu_hours = tpl.ptu_hours;

    auto load_shape = [](double h) {
        double v = 0.30 + 0.25 * std::exp(-0.5 * (h - 7.5) * (h - 7.5)) +
                   1.60 * std::exp(-(h - 22.0) * (h - 22.0) / (2.0 * 1.8 * 1.8));
        return v;
    };
    auto pv_shape = [](double h) {
        if (h < 6.0 || h > 20.0) return 0.0;
        return std::exp(-(h - 13.0) * (h - 13.0) / (2.0 * 2.6 * 2.6));
    };

    int width = n_sites >= 1000 ? 4 : 3;
    for (int i = 0; i < n_sites; ++i) {
        SiteSpec site;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "site%0*d", width, i + 1);
        site.id = buf;
        site.import_cap = tpl.import_cap;
        site.export_cap = tpl.export_cap;

        double load_scale = 0.75 + 0.5 * detail::unit_noise(seed, i, 1, 0);
        double pv_scale = 2.0 + 2.0 * detail::unit_noise(seed, i, 2, 0);
        for (int t = 0; t < tpl.periods; ++t) {
            // hour-of-day at the PTU midpoint
            double h = std::fmod((t + 0.5) * tpl.ptu_hours, 24.0);
            bool valley = (h >= 23.0 || h < 13.0);
            site.price_buy.push_back(valley ? tpl.price_valley : tpl.price_peak);
            site.price_sell.push_back(tpl.price_sell);
            site.price_curtail.push_back(tpl.price_curtail);
            double lj = 0.92 + 0.16 * detail::unit_noise(seed, i, 3, t);
            double pj = 0.92 + 0.16 * detail::unit_noise(seed, i, 4, t);
            site.load.push_back(load_shape(h) * load_scale * lj * tpl.ptu_hours);
            site.pv.push_back(pv_shape(h) * pv_scale * pj * tpl.ptu_hours);
        }

        BatterySpec bat;
        bat.capacity = tpl.battery_capacity;
        bat.floor_kwh = 0.0;
        bat.q_charge = bat.q_discharge = tpl.battery_power * tpl.ptu_hours;
        double eff = tpl.eff_base - tpl.eff_step * i;
        bat.eff_charge = bat.eff_discharge = eff;
        bat.invest_cost = tpl.invest_base * std::pow(1.0 + tpl.invest_step, i);
        bat.segment_caps = default_segment_caps(bat.capacity, bat.floor_kwh, tpl.segments);
        bat.segment_costs = default_segment_costs(bat.invest_cost, bat.capacity, tpl.segments);
        bat.lifetime_ptus = tpl.lifetime_years * 8760.0 / tpl.ptu_hours;
        bat.cal_s0 = tpl.cal_s0;
        bat.cal_s_soc = tpl.cal_s_soc;
        bat.cv_tuning = tpl.w_bat;
        if (tpl.flat_inverter) bat.inverter_curve = {{0.0, 1.0}, {1.0, 1.0}};
        bat.initial_soc = bat.floor_kwh;
        site.battery = bat;
        sc.sites.push_back(std::move(site));
    }

    if (tpl.include_request) {
        RequestSpec req;
        req.fr[tpl.fr_period] = tpl.fr_per_site * n_sites;
        req.peak_caps = tpl.peak_caps;
        req.penalty = tpl.penalty;
        sc.request = req;
    }
    sc.validate();
    return sc;
}

// --- JSON serialization ----------------------------------------------------

namespace detail {

using json = nlohmann::ordered_json;

inline json series_to_json(const std::vector<double>& v) { return json(v); }

inline std::vector<double> series_from_json(const json& j, const std::filesystem::path& base,
                                            const std::string& ctx) {
    if (j.is_array()) return j.get<std::vector<double>>();
    if (j.is_object() && j.contains("csv")) {
        std::filesystem::path p = base / j.at("csv").get<std::string>();
        std::string column = j.at("column").get<std::string>();
        std::ifstream in(p);
        if (!in) throw ScenarioError(ctx + ": cannot open CSV reference " + p.string());
        std::string line;
        if (!std::getline(in, line)) throw ScenarioError(ctx + ": empty CSV " + p.string());
        std::vector<std::string> cols;
        std::stringstream hs(line);
        std::string cell;
        while (std::getline(hs, cell, ',')) cols.push_back(cell);
        int idx = -1;
        for (size_t c = 0; c < cols.size(); ++c)
            if (cols[c] == column) idx = static_cast<int>(c);
        if (idx < 0) throw ScenarioError(ctx + ": column '" + column + "' not in " + p.string());
        std::vector<double> out;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::stringstream ls(line);
            int c = 0;
            double val = 0.0;
            while (std::getline(ls, cell, ',')) {
                if (c == idx) val = std::stod(cell);
                ++c;
            }
            out.push_back(val);
        }
        return out;
    }
    throw ScenarioError(ctx + ": series must be an array or a {csv, column} reference");
}

inline json battery_to_json(const BatterySpec& b) {
    json j;
    j["capacity"] = b.capacity;
    j["floor"] = b.floor_kwh;
    j["q_charge"] = b.q_charge;
    j["q_discharge"] = b.q_discharge;
    j["eff_charge"] = b.eff_charge;
    j["eff_discharge"] = b.eff_discharge;
    j["segment_caps"] = b.segment_caps;
    j["segment_costs"] = b.segment_costs;
    j["invest_cost"] = b.invest_cost;
    j["lifetime_ptus"] = b.lifetime_ptus;
    j["cal_s0"] = b.cal_s0;
    j["cal_s_soc"] = b.cal_s_soc;
    j["cv_tuning"] = b.cv_tuning;
    json curve = json::array();
    for (const auto& p : b.inverter_curve) curve.push_back(json::array({p.frac, p.eff}));
    j["inverter_curve"] = curve;
    j["initial_soc"] = b.initial_soc;
    return j;
}

inline BatterySpec battery_from_json(const json& j, double ptu_hours, const std::string& ctx) {
    BatterySpec b;
    try {
        b.capacity = j.value("capacity", 10.0);
        b.floor_kwh = j.value("floor", 0.0);
        b.q_charge = j.value("q_charge", 3.8 * ptu_hours);
        b.q_discharge = j.value("q_discharge", 3.8 * ptu_hours);
        b.eff_charge = j.value("eff_charge", 0.98);
        b.eff_discharge = j.value("eff_discharge", 0.98);
        b.invest_cost = j.value("invest_cost", 3000.0);
        int segments = j.value("segments", 10);
        if (j.contains("segment_caps"))
            b.segment_caps = j.at("segment_caps").get<std::vector<double>>();
        else
            b.segment_caps = default_segment_caps(b.capacity, b.floor_kwh, segments);
        if (j.contains("segment_costs"))
            b.segment_costs = j.at("segment_costs").get<std::vector<double>>();
        else
            b.segment_costs = default_segment_costs(b.invest_cost, b.capacity,
                                                    static_cast<int>(b.segment_caps.size()));
        if (j.contains("lifetime_ptus"))
            b.lifetime_ptus = j.at("lifetime_ptus").get<double>();
        else
            b.lifetime_ptus = j.value("lifetime_years", 10.0) * 8760.0 / ptu_hours;
        b.cal_s0 = j.value("cal_s0", 0.3);
        b.cal_s_soc = j.value("cal_s_soc", 1.7);
        b.cv_tuning = j.value("cv_tuning", 0.2);
        if (j.contains("inverter_curve")) {
            b.inverter_curve.clear();
            for (const auto& p : j.at("inverter_curve"))
                b.inverter_curve.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        }
        b.initial_soc = j.value("initial_soc", b.floor_kwh);
    } catch (const nlohmann::json::exception& e) {
        throw ScenarioError(ctx + ": battery parse error: " + e.what());
    }
    return b;
}

}  // namespace detail

inline void save_scenario(const Scenario& sc, const std::filesystem::path& path) {
    detail::json j;
    j["format_version"] = 1;
    j["name"] = sc.name;
    j["seed"] = sc.seed;
    j["horizon"] = {{"periods", sc.horizon.periods}, {"ptu_hours", sc.horizon.ptu_hours}};
    detail::json sites = detail::json::array();
    for (const auto& s : sc.sites) {
        detail::json js;
        js["id"] = s.id;
        js["import_cap"] = s.import_cap;
        js["export_cap"] = s.export_cap;
        js["price_buy"] = s.price_buy;
        js["price_sell"] = s.price_sell;
        js["price_curtail"] = s.price_curtail;
        js["load"] = s.load;
        js["pv"] = s.pv;
        js["battery"] = detail::battery_to_json(s.battery);
        sites.push_back(std::move(js));
    }
    j["sites"] = std::move(sites);
    if (sc.request) {
        detail::json periods = detail::json::array();
        for (const auto& [t, v] : sc.request->fr)
            periods.push_back({{"t", t}, {"fr", v}});
        j["request"] = {{"periods", std::move(periods)},
                        {"peak_caps", sc.request->peak_caps},
                        {"penalty", sc.request->penalty}};
    }
    std::ofstream out(path);
    if (!out) throw ScenarioError("cannot write scenario file " + path.string());
    out << j.dump(2) << "\n";
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open scenario file " + path.string());
    detail::json j;
    try {
        j = detail::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ScenarioError("scenario parse error in " + path.string() + ": " + e.what());
    }
    Scenario sc;
    try {
        sc.name = j.value("name", "");
        sc.seed = j.value("seed", uint64_t{0});
        sc.horizon.periods = j.at("horizon").at("periods").get<int>();
        sc.horizon.ptu_hours = j.at("horizon").value("ptu_hours", 1.0);
        auto base = path.parent_path();
        for (const auto& js : j.at("sites")) {
            SiteSpec s;
            s.id = js.value("id", "site" + std::to_string(sc.sites.size() + 1));
            std::string ctx = "site '" + s.id + "'";
            s.import_cap = js.value("import_cap", 10.0);
            s.export_cap = js.value("export_cap", 10.0);
            s.price_buy = detail::series_from_json(js.at("price_buy"), base, ctx + ".price_buy");
            s.price_sell =
                detail::series_from_json(js.at("price_sell"), base, ctx + ".price_sell");
            s.price_curtail =
                detail::series_from_json(js.at("price_curtail"), base, ctx + ".price_curtail");
            s.load = detail::series_from_json(js.at("load"), base, ctx + ".load");
            s.pv = detail::series_from_json(js.at("pv"), base, ctx + ".pv");
            s.battery = detail::battery_from_json(js.value("battery", detail::json::object()),
                                                  sc.horizon.ptu_hours, ctx);
            sc.sites.push_back(std::move(s));
        }
        if (j.contains("request")) {
            RequestSpec req;
            for (const auto& p : j.at("request").at("periods")) {
                double v = p.at("fr").get<double>();
                if (v != 0.0) req.fr[p.at("t").get<int>()] = v;
            }
            req.peak_caps = j.at("request").value("peak_caps", false);
            req.penalty = j.at("request").value("penalty", 10.0);
            sc.request = std::move(req);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ScenarioError("scenario field error in " + path.string() + ": " + e.what());
    }
    sc.validate();
    return sc;
}

/// Request file: {"periods":[{"t":20,"fr":50.0}], "peak_caps":false, "penalty":10.0}.
/// Zero FR entries are dropped.
inline RequestSpec load_request(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open request file " + path.string());
    detail::json j;
    try {
        j = detail::json::parse(in);
        RequestSpec req;
        for (const auto& p : j.at("periods")) {
            double v = p.at("fr").get<double>();
            if (v != 0.0) req.fr[p.at("t").get<int>()] = v;
        }
        req.peak_caps = j.value("peak_caps", false);
        req.penalty = j.value("penalty", 10.0);
        return req;
    } catch (const nlohmann::json::exception& e) {
        throw ScenarioError("request parse error in " + path.string() + ": " + e.what());
    }
}

inline void save_request(const RequestSpec& req, const std::filesystem::path& path) {
    detail::json periods = detail::json::array();
    for (const auto& [t, v] : req.fr) periods.push_back({{"t", t}, {"fr", v}});
    detail::json j = {{"periods", std::move(periods)},
                      {"peak_caps", req.peak_caps},
                      {"penalty", req.penalty}};
    std::ofstream out(path);
    if (!out) throw ScenarioError("cannot write request file " + path.string());
    out << j.dump(2) << "\n";
}

// --- result serialization ----------------------------------------------------

namespace detail {
inline void write_num(std::ostream& os, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
}
}  // namespace detail

inline void write_schedules(const std::vector<SiteSchedule>& schedules,
                            const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ScenarioError("cannot write schedule file " + path.string());
    out << "# flexopt-schedules-v1\n";
    out << "site_id,t,chi_buy,chi_sell,psi,sigma_ch,sigma_dis,sigma_soc,zeta_flex,chi_tot\n";
    for (const auto& s : schedules) {
        for (size_t t = 0; t < s.buy.size(); ++t) {
            out << s.site_id << "," << t << ",";
            const double row[] = {s.buy[t],           s.sell[t],          s.psi[t],
                                  s.battery.charge[t], s.battery.discharge[t],
                                  s.battery.soc[t],    s.zeta[t],          s.chi_tot[t]};
            for (size_t c = 0; c < 8; ++c) {
                detail::write_num(out, row[c]);
                out << (c + 1 < 8 ? "," : "");
            }
            out << "\n";
        }
    }
    if (!out) throw ScenarioError("write failed for " + path.string());
}

inline void write_baseline_csv(const std::vector<double>& w_base,
                               const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ScenarioError("cannot write baseline file " + path.string());
    out << "# flexopt-baseline-v1\n";
    out << "t,w_base\n";
    for (size_t t = 0; t < w_base.size(); ++t) {
        out << t << ",";
        detail::write_num(out, w_base[t]);
        out << "\n";
    }
}

/// Minimal reader for the schedule CSV (round-trip checks and plotting aids).
struct ScheduleRow {
    std::string site_id;
    int t;
    double chi_buy, chi_sell, psi, sigma_ch, sigma_dis, sigma_soc, zeta_flex, chi_tot;
};

inline std::vector<ScheduleRow> read_schedules_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open schedule file " + path.string());
    std::vector<ScheduleRow> rows;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        std::stringstream ls(line);
        std::string cell;
        ScheduleRow r;
        std::getline(ls, r.site_id, ',');
        std::getline(ls, cell, ',');
        r.t = std::stoi(cell);
        double* fields[] = {&r.chi_buy,  &r.chi_sell,  &r.psi,       &r.sigma_ch,
                            &r.sigma_dis, &r.sigma_soc, &r.zeta_flex, &r.chi_tot};
        for (double* f : fields) {
            std::getline(ls, cell, ',');
            *f = std::stod(cell);
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

inline void write_trace(const ConvergenceTrace& trace, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ScenarioError("cannot write trace file " + path.string());
    detail::json meta = {{"format", "flexopt.trace"}, {"version", 1}};
    out << meta.dump() << "\n";
    for (const auto& rec : trace) {
        detail::json lam;
        for (const auto& [t, v] : rec.lambda) lam[std::to_string(t)] = v;
        detail::json j = {{"k", rec.k},
                          {"phase", to_string(rec.phase)},
                          {"rho", rec.rho},
                          {"lambda", std::move(lam)},
                          {"r_norm", rec.r_norm},
                          {"s_norm", rec.s_norm},
                          {"total_cost", rec.total_cost},
                          {"wall_s", rec.wall_s}};
        out << j.dump() << "\n";
    }
    if (!out) throw ScenarioError("write failed for " + path.string());
}

inline void write_offer_json(const FlexOffer& offer, const FlexRequest& req,
                             const std::filesystem::path& path) {
    detail::json periods = detail::json::array();
    for (const auto& [t, v] : offer.offered)
        periods.push_back({{"t", t},
                           {"fr", req.fr_at(t)},
                           {"offered", v},
                           {"shortfall", offer.shortfall.at(t)}});
    detail::json j = {{"format_version", 1},
                      {"periods", std::move(periods)},
                      {"total_cost", offer.total_cost}};
    std::ofstream out(path);
    if (!out) throw ScenarioError("cannot write offer file " + path.string());
    out << j.dump(2) << "\n";
}

}  // namespace flexopt

#endif
