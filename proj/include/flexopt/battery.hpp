#ifndef FLEXOPT_BATTERY_HPP
#define FLEXOPT_BATTERY_HPP

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "flexopt/model.hpp"

namespace flexopt {

struct InverterPoint {
    double frac;  // power as fraction of rated [p.u.]
    double eff;   // efficiency [p.u.]
};

/// Four-point curve shaped after a small residential hybrid inverter:
/// poor efficiency near zero power, 98% near rated.
inline std::vector<InverterPoint> default_inverter_curve() {
    return {{0.0, 0.70}, {0.10, 0.90}, {0.35, 0.96}, {1.00, 0.98}};
}

inline std::vector<double> default_segment_caps(double capacity, double floor_kwh,
                                                int n_segments) {
    return std::vector<double>(n_segments, (capacity - floor_kwh) / n_segments);
}

/// Marginal cycle-ageing ladder: C_j = C_bat / (capacity * L(j)) with
/// L(j) = 20000 * (j/J)^-1.1 as a cycles-to-failure proxy; strictly
/// increasing in depth.
inline std::vector<double> default_segment_costs(double invest_cost, double capacity,
                                                 int n_segments) {
    std::vector<double> c(n_segments);
    for (int j = 0; j < n_segments; ++j) {
        double depth = static_cast<double>(j + 1) / n_segments;
        double cycles = 20000.0 * std::pow(depth, -1.1);
        c[j] = invest_cost / (capacity * cycles);
    }
    return c;
}

struct BatterySpec {
    double capacity = 10.0;    // O_max [kWh]
    double floor_kwh = 0.0;    // O_min [kWh]
    double q_charge = 3.8;     // max charge per PTU [kWh]
    double q_discharge = 3.8;  // max discharge per PTU [kWh]
    double eff_charge = 0.98;  // A_bat_ch
    double eff_discharge = 0.98;
    std::vector<double> segment_caps;   // per segment [kWh], sums to capacity-floor
    std::vector<double> segment_costs;  // strictly increasing [EUR/kWh]
    double invest_cost = 3000.0;        // C_bat [EUR]
    double lifetime_ptus = 87600.0;     // S_LT as PTU count
    double cal_s0 = 0.3;
    double cal_s_soc = 1.7;
    double cv_tuning = 0.2;  // W_bat
    std::vector<InverterPoint> inverter_curve = default_inverter_curve();
    double initial_soc = 0.0;  // [kWh]

    int num_segments() const { return static_cast<int>(segment_caps.size()); }

    bool flat_inverter() const {
        for (const auto& p : inverter_curve)
            if (p.eff != inverter_curve.front().eff) return false;
        return true;
    }

    void validate() const {
        auto fail = [](const std::string& what) {
            throw std::invalid_argument("battery: " + what);
        };
        if (!(floor_kwh >= 0.0 && floor_kwh < capacity)) fail("requires 0 <= floor < capacity");
        if (q_charge < 0 || q_discharge < 0) fail("negative power limit");
        if (!(eff_charge > 0 && eff_charge <= 1.0)) fail("charge efficiency outside (0,1]");
        if (!(eff_discharge > 0 && eff_discharge <= 1.0)) fail("discharge efficiency outside (0,1]");
        if (segment_caps.empty()) fail("needs at least one segment");
        if (segment_caps.size() != segment_costs.size()) fail("segment caps/costs length mismatch");
        double sum = 0.0;
        for (double c : segment_caps) {
            if (c <= 0) fail("non-positive segment capacity");
            sum += c;
        }
        if (std::fabs(sum - (capacity - floor_kwh)) > 1e-6)
            fail("segment capacities must sum to capacity - floor");
        for (size_t j = 1; j < segment_costs.size(); ++j)
            if (!(segment_costs[j] > segment_costs[j - 1]))
                fail("segment costs must be strictly increasing");
        if (lifetime_ptus <= 0) fail("lifetime must be positive");
        if (cv_tuning < 0) fail("negative CV tuning factor");
        if (inverter_curve.size() < 2) fail("inverter curve needs at least 2 points");
        if (inverter_curve.front().frac != 0.0 || inverter_curve.back().frac != 1.0)
            fail("inverter curve must span power fractions [0,1]");
        for (size_t b = 0; b < inverter_curve.size(); ++b) {
            if (!(inverter_curve[b].eff > 0 && inverter_curve[b].eff <= 1.0))
                fail("inverter efficiency outside (0,1]");
            if (b > 0 && !(inverter_curve[b].frac > inverter_curve[b - 1].frac))
                fail("inverter curve breakpoints must be strictly increasing");
        }
        if (initial_soc < floor_kwh - 1e-9 || initial_soc > capacity + 1e-9)
            fail("initial SOC outside [floor, capacity]");
    }
};

/// Linear interpolation of the efficiency table at `power` (same function the
/// SOS2 weights realize at the breakpoints).
inline double inverter_efficiency(double power, const std::vector<InverterPoint>& curve,
                                  double rated) {
    if (power < -1e-12) throw std::invalid_argument("inverter_efficiency: negative power");
    if (rated <= 0) {
        if (power > 1e-12) throw std::invalid_argument("inverter_efficiency: power > rated");
        return curve.front().eff;
    }
    double f = power / rated;
    if (f > 1.0 + 1e-12) throw std::invalid_argument("inverter_efficiency: power > rated");
    f = std::min(f, 1.0);
    for (size_t b = 1; b < curve.size(); ++b) {
        if (f <= curve[b].frac + 1e-15) {
            double t = (f - curve[b - 1].frac) / (curve[b].frac - curve[b - 1].frac);
            return curve[b - 1].eff + t * (curve[b].eff - curve[b - 1].eff);
        }
    }
    return curve.back().eff;
}

/// Charge limit near full SOC (constant-voltage region approximation).
inline double cv_charge_cap(const BatterySpec& spec, double soc_prev) {
    return (spec.capacity - soc_prev) / (1.0 + spec.cv_tuning);
}

/// Discharge limit near empty SOC.
inline double cv_discharge_cap(const BatterySpec& spec, double soc_prev) {
    return (soc_prev - spec.floor_kwh) / (1.0 + spec.cv_tuning);
}

/// Calendar ageing cost of one PTU, Eq.-style: (C/S_LT)(S0 + S_SOC/2 *
/// (soc_bar_t + soc_bar_prev)) with SOC normalized by capacity.
inline double calendar_cost_period(const BatterySpec& spec, double soc_prev, double soc_now) {
    if (spec.lifetime_ptus <= 0) throw std::invalid_argument("calendar cost: lifetime is zero");
    double nb = soc_now / spec.capacity;
    double pb = soc_prev / spec.capacity;
    return spec.invest_cost / spec.lifetime_ptus *
           (spec.cal_s0 + 0.5 * spec.cal_s_soc * (nb + pb));
}

/// Variable handles produced by emit_battery_constraints. Segment flows are
/// battery-terminal quantities: the per-segment charge/discharge sums equal
/// the inverter-side flows term_in/term_out, and the segment SOC stack sums
/// to soc - floor each period.
struct BatteryVars {
    std::vector<VarId> charge, discharge, soc;  // AC-side sigma_ch/dis, SOC
    std::vector<VarId> mode;                    // delta_bat
    std::vector<VarId> term_in, term_out;       // inverter output / input
    std::vector<std::vector<VarId>> seg_soc, seg_ch, seg_dis;   // [t][j]
    std::vector<std::vector<VarId>> w_charge, w_discharge;      // SOS2 weights [t][b]
};

inline std::vector<double> initial_segment_fill(const BatterySpec& spec) {
    std::vector<double> fill(spec.num_segments(), 0.0);
    double rem = spec.initial_soc - spec.floor_kwh;
    for (int j = 0; j < spec.num_segments() && rem > 0; ++j) {
        fill[j] = std::min(rem, spec.segment_caps[j]);
        rem -= fill[j];
    }
    return fill;
}

inline BatteryVars emit_battery_constraints(const BatterySpec& spec, int horizon,
                                            Model& model, const std::string& prefix = "bat") {
    if (horizon <= 0) throw std::invalid_argument("emit_battery_constraints: empty horizon");
    spec.validate();

    const int J = spec.num_segments();
    const int B = static_cast<int>(spec.inverter_curve.size());
    const bool flat = spec.flat_inverter();
    const double a_min = [&] {
        double a = 1.0;
        for (const auto& p : spec.inverter_curve) a = std::min(a, p.eff);
        return a;
    }();
    const double tout_ub = spec.q_discharge / a_min;

    BatteryVars bv;
    bv.charge.resize(horizon);
    bv.discharge.resize(horizon);
    bv.soc.resize(horizon);
    bv.mode.resize(horizon);
    bv.term_in.resize(horizon);
    bv.term_out.resize(horizon);
    bv.seg_soc.assign(horizon, std::vector<VarId>(J));
    bv.seg_ch.assign(horizon, std::vector<VarId>(J));
    bv.seg_dis.assign(horizon, std::vector<VarId>(J));
    if (!flat) {
        bv.w_charge.assign(horizon, std::vector<VarId>(B));
        bv.w_discharge.assign(horizon, std::vector<VarId>(B));
    }

    auto nm = [&](const char* tag, int t) { return prefix + "_" + tag + "_" + std::to_string(t); };
    auto nmj = [&](const char* tag, int t, int j) {
        return prefix + "_" + tag + "_" + std::to_string(t) + "_" + std::to_string(j);
    };

    const std::vector<double> fill0 = initial_segment_fill(spec);

    for (int t = 0; t < horizon; ++t) {
        bv.charge[t] = model.add_variable(nm("ch", t), 0.0, spec.q_charge, 0.0);
        bv.discharge[t] = model.add_variable(nm("dis", t), 0.0, spec.q_discharge, 0.0);
        bv.soc[t] = model.add_variable(nm("soc", t), spec.floor_kwh, spec.capacity, 0.0);
        bv.mode[t] = model.add_variable(nm("mode", t), 0.0, 1.0, 0.0, VarKind::Binary);
        bv.term_in[t] = model.add_variable(nm("tin", t), 0.0, spec.q_charge, 0.0);
        bv.term_out[t] = model.add_variable(nm("tout", t), 0.0, tout_ub, 0.0);
        for (int j = 0; j < J; ++j) {
            bv.seg_soc[t][j] = model.add_variable(nmj("ssoc", t, j), 0.0, spec.segment_caps[j], 0.0);
            bv.seg_ch[t][j] = model.add_variable(nmj("sch", t, j), 0.0, spec.q_charge, 0.0);
            bv.seg_dis[t][j] = model.add_variable(nmj("sdis", t, j), 0.0, tout_ub, 0.0);
        }
        if (!flat)
            for (int b = 0; b < B; ++b) {
                bv.w_charge[t][b] = model.add_variable(nmj("wch", t, b), 0.0, 1.0, 0.0);
                bv.w_discharge[t][b] = model.add_variable(nmj("wdis", t, b), 0.0, 1.0, 0.0);
            }
    }

    for (int t = 0; t < horizon; ++t) {
        // charge/discharge mode exclusivity through the rated limits
        model.add_constraint({{bv.charge[t], 1.0}, {bv.mode[t], -spec.q_charge}}, RowSense::LE,
                             0.0, nm("qch", t));
        model.add_constraint({{bv.discharge[t], 1.0}, {bv.mode[t], spec.q_discharge}},
                             RowSense::LE, spec.q_discharge, nm("qdis", t));

        // constant-voltage power limits against previous SOC
        if (t == 0) {
            model.add_constraint({{bv.charge[t], 1.0 + spec.cv_tuning}}, RowSense::LE,
                                 spec.capacity - spec.initial_soc, nm("cvch", t));
            model.add_constraint({{bv.discharge[t], 1.0 + spec.cv_tuning}}, RowSense::LE,
                                 spec.initial_soc - spec.floor_kwh, nm("cvdis", t));
        } else {
            model.add_constraint({{bv.charge[t], 1.0 + spec.cv_tuning}, {bv.soc[t - 1], 1.0}},
                                 RowSense::LE, spec.capacity, nm("cvch", t));
            model.add_constraint({{bv.discharge[t], 1.0 + spec.cv_tuning}, {bv.soc[t - 1], -1.0}},
                                 RowSense::LE, -spec.floor_kwh, nm("cvdis", t));
        }

        // inverter mapping AC <-> battery terminal
        if (flat) {
            double a = spec.inverter_curve.front().eff;
            model.add_constraint({{bv.term_in[t], 1.0}, {bv.charge[t], -a}}, RowSense::EQ, 0.0,
                                 nm("invch", t));
            model.add_constraint({{bv.term_out[t], 1.0}, {bv.discharge[t], -1.0 / a}},
                                 RowSense::EQ, 0.0, nm("invdis", t));
        } else {
            std::vector<RowTerm> conv_c, pow_c, eff_c, conv_d, pow_d, eff_d;
            pow_c.push_back({bv.charge[t], 1.0});
            eff_c.push_back({bv.term_in[t], 1.0});
            pow_d.push_back({bv.discharge[t], 1.0});
            eff_d.push_back({bv.term_out[t], 1.0});
            for (int b = 0; b < B; ++b) {
                double pc = spec.inverter_curve[b].frac * spec.q_charge;
                double pd = spec.inverter_curve[b].frac * spec.q_discharge;
                double a = spec.inverter_curve[b].eff;
                conv_c.push_back({bv.w_charge[t][b], 1.0});
                pow_c.push_back({bv.w_charge[t][b], -pc});
                eff_c.push_back({bv.w_charge[t][b], -pc * a});
                conv_d.push_back({bv.w_discharge[t][b], 1.0});
                pow_d.push_back({bv.w_discharge[t][b], -pd});
                eff_d.push_back({bv.w_discharge[t][b], -pd / a});
            }
            model.add_constraint(std::move(conv_c), RowSense::EQ, 1.0, nm("wchsum", t));
            model.add_constraint(std::move(pow_c), RowSense::EQ, 0.0, nm("wchpow", t));
            model.add_constraint(std::move(eff_c), RowSense::EQ, 0.0, nm("wcheff", t));
            model.add_constraint(std::move(conv_d), RowSense::EQ, 1.0, nm("wdissum", t));
            model.add_constraint(std::move(pow_d), RowSense::EQ, 0.0, nm("wdispow", t));
            model.add_constraint(std::move(eff_d), RowSense::EQ, 0.0, nm("wdiseff", t));
            if (B >= 3) {
                model.add_sos2(bv.w_charge[t]);
                model.add_sos2(bv.w_discharge[t]);
            }
        }

        // segmented SOC recursion with constant battery efficiency
        for (int j = 0; j < J; ++j) {
            std::vector<RowTerm> rec{{bv.seg_soc[t][j], 1.0},
                                     {bv.seg_ch[t][j], -spec.eff_charge},
                                     {bv.seg_dis[t][j], 1.0 / spec.eff_discharge}};
            double rhs = 0.0;
            if (t == 0)
                rhs = fill0[j];
            else
                rec.push_back({bv.seg_soc[t - 1][j], -1.0});
            model.add_constraint(std::move(rec), RowSense::EQ, rhs, nmj("srec", t, j));
        }
        std::vector<RowTerm> chsum{{bv.term_in[t], -1.0}};
        std::vector<RowTerm> dissum{{bv.term_out[t], -1.0}};
        for (int j = 0; j < J; ++j) {
            chsum.push_back({bv.seg_ch[t][j], 1.0});
            dissum.push_back({bv.seg_dis[t][j], 1.0});
        }
        model.add_constraint(std::move(chsum), RowSense::EQ, 0.0, nm("segch", t));
        model.add_constraint(std::move(dissum), RowSense::EQ, 0.0, nm("segdis", t));

        // SOC is the segment stack above the floor
        std::vector<RowTerm> link{{bv.soc[t], 1.0}};
        for (int j = 0; j < J; ++j) link.push_back({bv.seg_soc[t][j], -1.0});
        model.add_constraint(std::move(link), RowSense::EQ, spec.floor_kwh, nm("soclink", t));
    }
    return bv;
}

struct BatterySchedule {
    std::vector<double> charge, discharge, soc;
    std::vector<double> term_in, term_out;
    std::vector<double> mode;
    std::vector<std::vector<double>> seg_soc, seg_ch, seg_dis;
    std::vector<std::vector<double>> w_charge, w_discharge;
};

inline BatterySchedule extract_battery_schedule(const Solution& sol, const BatteryVars& bv) {
    BatterySchedule out;
    auto grab = [&](const std::vector<VarId>& v) {
        std::vector<double> r(v.size());
        for (size_t i = 0; i < v.size(); ++i) r[i] = sol.value(v[i]);
        return r;
    };
    out.charge = grab(bv.charge);
    out.discharge = grab(bv.discharge);
    out.soc = grab(bv.soc);
    out.term_in = grab(bv.term_in);
    out.term_out = grab(bv.term_out);
    out.mode = grab(bv.mode);
    auto grab2 = [&](const std::vector<std::vector<VarId>>& v) {
        std::vector<std::vector<double>> r(v.size());
        for (size_t t = 0; t < v.size(); ++t) r[t] = grab(v[t]);
        return r;
    };
    out.seg_soc = grab2(bv.seg_soc);
    out.seg_ch = grab2(bv.seg_ch);
    out.seg_dis = grab2(bv.seg_dis);
    out.w_charge = grab2(bv.w_charge);
    out.w_discharge = grab2(bv.w_discharge);
    return out;
}

/// Cycle-ageing cost of a schedule: sum over periods and segments of the
/// marginal segment cost times the segment discharge.
inline double cycle_cost(const BatterySchedule& sched, const BatterySpec& spec) {
    double total = 0.0;
    for (const auto& per : sched.seg_dis)
        for (int j = 0; j < spec.num_segments(); ++j) total += spec.segment_costs[j] * per[j];
    return total;
}

/// Calendar ageing cost of a schedule including the initial-SOC boundary.
inline double calendar_cost(const BatterySchedule& sched, const BatterySpec& spec) {
    double total = 0.0;
    double prev = spec.initial_soc;
    for (double soc : sched.soc) {
        total += calendar_cost_period(spec, prev, soc);
        prev = soc;
    }
    return total;
}

}  // namespace flexopt

#endif
