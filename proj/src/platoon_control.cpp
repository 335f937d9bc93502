#include "platoon/platoon_control.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "platoon/errors.hpp"

namespace platoon {

namespace {

// Monotone cubic (Fritsch-Carlson) interpolation on strictly increasing x.
// Falls back to linear when fewer than three points are available.
double pchip_eval(const std::vector<double>& x, const std::vector<double>& y, double q) {
    const std::size_t n = x.size();
    if (n == 1) return y[0];
    auto hi = std::upper_bound(x.begin(), x.end(), q);
    std::size_t k = (hi == x.begin()) ? 0 : static_cast<std::size_t>(hi - x.begin()) - 1;
    if (k >= n - 1) k = n - 2;

    double hk = x[k + 1] - x[k];
    double dk = (y[k + 1] - y[k]) / hk;
    if (n == 2) return y[k] + dk * (q - x[k]);

    auto slope = [&](std::size_t i) { return (y[i + 1] - y[i]) / (x[i + 1] - x[i]); };
    auto node_deriv = [&](std::size_t i) -> double {
        if (i == 0) return slope(0);
        if (i == n - 1) return slope(n - 2);
        double d0 = slope(i - 1), d1 = slope(i);
        if (d0 * d1 <= 0.0) return 0.0;
        double h0 = x[i] - x[i - 1], h1 = x[i + 1] - x[i];
        double w0 = 2.0 * h1 + h0, w1 = h1 + 2.0 * h0;
        return (w0 + w1) / (w0 / d0 + w1 / d1);
    };

    double m0 = node_deriv(k);
    double m1 = node_deriv(k + 1);
    double u = (q - x[k]) / hk;
    double u2 = u * u, u3 = u2 * u;
    double h00 = 2 * u3 - 3 * u2 + 1;
    double h10 = u3 - 2 * u2 + u;
    double h01 = -2 * u3 + 3 * u2;
    double h11 = u3 - u2;
    return h00 * y[k] + h10 * hk * m0 + h01 * y[k + 1] + h11 * hk * m1;
}

double lerp_on(const std::vector<double>& x, const std::vector<double>& y, double q) {
    if (x.empty()) throw RangeError("empty record");
    if (q <= x.front()) return y.front();
    if (q >= x.back()) return y.back();
    auto hi = std::upper_bound(x.begin(), x.end(), q);
    std::size_t k = static_cast<std::size_t>(hi - x.begin()) - 1;
    double f = (q - x[k]) / (x[k + 1] - x[k]);
    return y[k] + f * (y[k + 1] - y[k]);
}

}  // namespace

void PassageLog::append(double s, double t, double v) {
    if (!s_.empty() && (s <= s_.back() || t <= t_.back()))
        throw RangeError("passage log samples must be strictly increasing");
    s_.push_back(s);
    t_.push_back(t);
    v_.push_back(v);
}

bool PassageLog::covers(double s) const {
    return !s_.empty() && s >= s_.front() && s <= s_.back();
}

double PassageLog::front_s() const {
    if (s_.empty()) throw InsufficientHistoryError("empty passage log");
    return s_.front();
}

double PassageLog::back_s() const {
    if (s_.empty()) throw InsufficientHistoryError("empty passage log");
    return s_.back();
}

void PassageLog::check_covers(double s) const {
    if (!covers(s))
        throw InsufficientHistoryError("passage log does not cover s = " + std::to_string(s));
}

double PassageLog::t_at(double s) const {
    check_covers(s);
    return pchip_eval(s_, t_, s);
}

double PassageLog::v_at(double s) const {
    check_covers(s);
    return pchip_eval(s_, v_, s);
}

void PassageLog::prune_below(double s_keep) {
    auto it = std::lower_bound(s_.begin(), s_.end(), s_keep);
    if (it == s_.begin()) return;
    std::size_t drop = static_cast<std::size_t>(it - s_.begin());
    // Keep a stencil margin so interpolation near s_keep stays well posed.
    drop = (drop > 4) ? drop - 4 : 0;
    if (drop == 0) return;
    s_.erase(s_.begin(), s_.begin() + drop);
    t_.erase(t_.begin(), t_.begin() + drop);
    v_.erase(v_.begin(), v_.begin() + drop);
}

PlatoonConfigurationState initialize_on_policy(const Route& route, const Environment& env,
                                               const std::vector<VehicleParameters>& params,
                                               const VelocityProfile& v_ref,
                                               const SpacingConfig& cfg, double s_lead,
                                               double v0, double t0) {
    if (params.empty()) throw RangeError("platoon needs at least one vehicle");
    if (v0 <= 0) throw RangeError("on-policy initialization needs v0 > 0");
    PlatoonConfigurationState st;
    st.route = route;
    st.env = env;
    st.params = params;
    st.v_ref = v_ref;
    st.t = t0;
    const std::size_t n = params.size();
    const double gap_m = cfg.tau_ref * v0;
    const double margin = (n + 1) * gap_m + 500.0;
    for (std::size_t i = 0; i < n; ++i) {
        double si = s_lead - static_cast<double>(i) * gap_m;
        st.states.push_back({si, v0});
        PassageLog log;
        double s_hist0 = s_lead - static_cast<double>(n - 1) * gap_m - margin;
        // Constant-speed history ending exactly at the current state.
        int steps = static_cast<int>(std::ceil((si - s_hist0) / (v0 * kDefaultDt)));
        for (int k = steps; k >= 1; --k) {
            double s = si - k * v0 * kDefaultDt;
            log.append(s, t0 - k * kDefaultDt, v0);
        }
        log.append(si, t0, v0);
        st.logs.push_back(std::move(log));
    }
    return st;
}

ErrorSignals compute_errors(const PlatoonConfigurationState& state, const SpacingConfig& cfg,
                            std::size_t i, double s) {
    if (i == 0 || i >= state.size()) throw RangeError("compute_errors needs a follower index");
    const PassageLog& own = state.logs[i];
    const PassageLog& pred = state.logs[i - 1];
    const PassageLog& lead = state.logs[0];
    ErrorSignals err;
    double ti = own.t_at(s);
    err.Delta = ti - pred.t_at(s) - cfg.tau_ref;
    err.Delta0 = ti - lead.t_at(s) - static_cast<double>(i) * cfg.tau_ref;
    // Reference minus actual: a positive e means "too slow", matching the
    // sign of a positive Delta ("too late"), so one weighted signal can
    // correct both. With the opposite convention no single PD sign stabilizes
    // both channels (the spacing subsystem becomes a saddle).
    err.e = state.v_ref.v_at(s) - own.v_at(s);
    err.delta = (1.0 - cfg.h0) * err.Delta + cfg.h0 * err.Delta0 + cfg.h * err.e;
    return err;
}

ControlInput platoon_control_law(const PlatoonConfigurationState& state,
                                 const SpacingConfig& cfg, std::size_t i,
                                 const ControlGains& gains) {
    const VehicleParameters& p = state.params[i];
    const VehicleState& x = state.states[i];
    const double s = x.s;
    const double v = x.v;
    const double vref = state.v_ref.v_at(s);
    const double vref_slope = state.v_ref.slope_at(s);
    const double a_ref = vref_slope * vref;

    // delta and the part of its time derivative that does not contain the
    // own acceleration; d(delta)/dt = ddelta_partial - h * a, so the h*a term
    // is solved for implicitly below.
    double delta;
    double ddelta_partial;
    std::optional<double> tau;  // actual time gap to predecessor, for drag
    if (i == 0) {
        delta = cfg.h * (vref - v);
        ddelta_partial = cfg.h * vref_slope * v;
    } else {
        ErrorSignals err = compute_errors(state, cfg, i, s);
        delta = err.delta;
        double v_pred = std::max(state.logs[i - 1].v_at(s), 0.1);
        double v_lead = std::max(state.logs[0].v_at(s), 0.1);
        ddelta_partial = (1.0 - cfg.h0) * (1.0 - v / v_pred) +
                         cfg.h0 * (1.0 - v / v_lead) + cfg.h * vref_slope * v;
        tau = state.t - state.logs[i - 1].t_at(s);
        if (*tau < 0.0) tau = 0.0;
    }

    // PD response raising acceleration when behind schedule or too slow
    // (delta > 0). Lag-free per-vehicle transfer keeps its gain at or below
    // one for all frequencies when k_p * h^2 * v exceeds 2, which holds for
    // the defaults at highway speeds.
    double a_cmd = (a_ref + gains.k_p * delta + gains.k_d * ddelta_partial) /
                   (1.0 + gains.k_d * cfg.h);

    // Invert the longitudinal dynamics: exact cancellation of resistive terms.
    double alpha = state.route.grade_at(std::clamp(s, 0.0, state.route.total_length()));
    double force = p.m * a_cmd + rolling_force(p, state.env, alpha) +
                   gravity_force(p, state.env, alpha) + drag_force(p, state.env, v, tau);

    ControlInput u;
    const double v_eff = std::max(v, 0.5);
    const double f_max = p.P_max / v_eff;
    const double f_min = p.P_min / v_eff;  // engine braking floor (negative)
    if (force > f_max) {
        u.F_e = f_max;
    } else if (force >= f_min) {
        u.F_e = force;
    } else {
        u.F_e = f_min;
        u.F_b = f_min - force;
    }
    return u;
}

namespace {

// Actual time gap behind the predecessor, used both for the controller's drag
// cancellation and for the plant model.
std::optional<double> actual_time_gap(const PlatoonConfigurationState& state, std::size_t i) {
    if (i == 0) return std::nullopt;
    double tau = state.t - state.logs[i - 1].t_at(state.states[i].s);
    return std::max(tau, 0.0);
}

}  // namespace

std::vector<TrajectoryRecord> simulate_platoon(PlatoonConfigurationState& state,
                                               const SpacingConfig& cfg,
                                               const ControlGains& gains,
                                               const StopCondition& stop,
                                               double dt) {
    if (!stop.duration_s && !stop.all_past_m)
        throw RangeError("simulate_platoon needs a stop condition");
    const std::size_t n = state.size();
    std::vector<TrajectoryRecord> rec(n);
    std::vector<double> fuel_cum(n, 0.0);
    const double t0 = state.t;

    auto done = [&]() {
        if (stop.duration_s && state.t - t0 >= *stop.duration_s - 1e-9) return true;
        if (stop.all_past_m && state.states.back().s >= *stop.all_past_m) return true;
        return false;
    };

    std::vector<ControlInput> u(n);
    long step = 0;
    while (!done()) {
        if (++step > 40000000)
            throw Error("simulation exceeded the step budget without meeting its stop condition");

        std::vector<std::optional<double>> taus(n);
        for (std::size_t i = 0; i < n; ++i) {
            taus[i] = actual_time_gap(state, i);
            u[i] = platoon_control_law(state, cfg, i, gains);
        }

        for (std::size_t i = 0; i < n; ++i) {
            rec[i].t.push_back(state.t);
            rec[i].s.push_back(state.states[i].s);
            rec[i].v.push_back(state.states[i].v);
            rec[i].F_e.push_back(u[i].F_e);
            rec[i].F_b.push_back(u[i].F_b);
            rec[i].fuel.push_back(fuel_cum[i]);
        }

        for (std::size_t i = 0; i < n; ++i) {
            StepResult r = step_time(state.params[i], state.env, state.route, state.states[i],
                                     taus[i], u[i], dt);
            fuel_cum[i] += r.fuel_kg;
            rec[i].brake_energy_J += r.work_brake_J;
            state.states[i] = r.state;
        }
        state.t += dt;

        for (std::size_t i = 0; i < n; ++i) {
            if (i > 0 && state.states[i].s >= state.states[i - 1].s)
                throw SafetyViolationError(
                    "vehicle " + std::to_string(i) + " collided with its predecessor at t = " +
                    std::to_string(state.t) + " s, s = " + std::to_string(state.states[i].s));
            if (state.logs[i].size() == 0 || state.states[i].s > state.logs[i].back_s() + 1e-9)
                state.logs[i].append(state.states[i].s, state.t, state.states[i].v);
        }

        if ((step & 0xfff) == 0) {
            double keep = state.states.back().s - 3000.0;
            for (auto& log : state.logs) log.prune_below(keep);
        }
    }

    // Final sample so records close at the stop state.
    for (std::size_t i = 0; i < n; ++i) {
        rec[i].t.push_back(state.t);
        rec[i].s.push_back(state.states[i].s);
        rec[i].v.push_back(state.states[i].v);
        rec[i].F_e.push_back(u[i].F_e);
        rec[i].F_b.push_back(u[i].F_b);
        rec[i].fuel.push_back(fuel_cum[i]);
    }
    return rec;
}

double TrajectoryRecord::time_at_s(double query_s) const { return lerp_on(s, t, query_s); }
double TrajectoryRecord::v_at_s(double query_s) const { return lerp_on(s, v, query_s); }
double TrajectoryRecord::fuel_at_s(double query_s) const { return lerp_on(s, fuel, query_s); }

double TrajectoryRecord::fuel_between(double s_a, double s_b) const {
    return fuel_at_s(s_b) - fuel_at_s(s_a);
}

void TrajectoryRecord::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open output file: " + path);
    out << "t_s,s_m,v_mps,F_e_N,F_b_N,fuel_kg\n";
    char line[160];
    for (std::size_t k = 0; k < t.size(); ++k) {
        std::snprintf(line, sizeof(line), "%.3f,%.3f,%.6f,%.3f,%.3f,%.9f\n", t[k], s[k], v[k],
                      F_e[k], F_b[k], fuel[k]);
        out << line;
    }
}

std::vector<double> string_stability_metric(const std::vector<TrajectoryRecord>& records,
                                            const VelocityProfile& v_ref) {
    if (records.empty()) throw WindowError("no records");
    double lo = records[0].s.front(), hi = records[0].s.back();
    for (const auto& r : records) {
        if (r.s.empty()) throw WindowError("empty record");
        lo = std::max(lo, r.s.front());
        hi = std::min(hi, r.s.back());
    }
    if (hi <= lo) throw WindowError("records share no common distance window");

    const double ds = 1.0;
    std::vector<double> norms(records.size(), 0.0);
    for (std::size_t i = 0; i < records.size(); ++i) {
        double prev_sq = 0.0;
        bool first = true;
        for (double sigma = lo; sigma <= hi + 1e-9; sigma += ds) {
            double q = std::min(sigma, hi);
            double err = records[i].v_at_s(q) - v_ref.v_at(q);
            double sq = err * err;
            if (!first) norms[i] += 0.5 * (prev_sq + sq) * ds;
            prev_sq = sq;
            first = false;
        }
    }
    return norms;
}

}  // namespace platoon
