#include "platoon/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "platoon/errors.hpp"

namespace platoon {

void VehicleParameters::validate() const {
    if (m <= 0 || A <= 0 || cd0 <= 0 || p1 <= 0) throw ParseError("m, A, cd0, p1 must be positive");
    if (p0 < 0) throw ParseError("p0 must be non-negative");
    if (!(P_min < 0 && 0 < P_max)) throw ParseError("need P_min < 0 < P_max");
    if (!(alpha1 >= 0 && alpha1 < 1)) throw ParseError("alpha1 must be in [0,1)");
    if (alpha2 <= 0) throw ParseError("alpha2 must be positive");
    if (c_r < 0) throw ParseError("c_r must be non-negative");
}

VehicleParameters VehicleParameters::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("vehicle JSON parse failure: ") + e.what());
    }
    VehicleParameters p;
    auto get = [&](const char* key, double& field) {
        if (j.contains(key)) field = j.at(key).get<double>();
    };
    get("m", p.m);
    get("A", p.A);
    get("cd0", p.cd0);
    get("alpha1", p.alpha1);
    get("alpha2", p.alpha2);
    get("p0", p.p0);
    get("p1", p.p1);
    get("P_min", p.P_min);
    get("P_max", p.P_max);
    get("c_r", p.c_r);
    p.validate();
    return p;
}

VehicleParameters VehicleParameters::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open vehicle parameter file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

double drag_coefficient(const VehicleParameters& p, std::optional<double> tau) {
    if (!tau) return p.cd0;
    if (*tau < 0) throw RangeError("time gap must be non-negative");
    return p.cd0 * (1.0 - p.alpha1 / (1.0 + p.alpha2 * *tau));
}

double rolling_force(const VehicleParameters& p, const Environment& env, double alpha) {
    return p.c_r * p.m * env.g * std::cos(alpha);
}

double gravity_force(const VehicleParameters& p, const Environment& env, double alpha) {
    return p.m * env.g * std::sin(alpha);
}

double drag_force(const VehicleParameters& p, const Environment& env, double v,
                  std::optional<double> tau) {
    return 0.5 * drag_coefficient(p, tau) * env.rho * p.A * v * v;
}

double net_force(const VehicleParameters& p, const Environment& env,
                 const VehicleState& state, double alpha, std::optional<double> tau,
                 const ControlInput& u) {
    return -rolling_force(p, env, alpha) - gravity_force(p, env, alpha) -
           drag_force(p, env, state.v, tau) + u.F_e - u.F_b;
}

double fuel_flow_unchecked(const VehicleParameters& p, double F_e, double v) {
    double power = F_e * v;
    if (power <= 0.0) return p.p0;
    return p.p1 * power + p.p0;
}

double fuel_flow(const VehicleParameters& p, double F_e, double v) {
    double power = F_e * v;
    if (power < p.P_min - 1e-9 || power > p.P_max + 1e-9)
        throw ConstraintError("engine power " + std::to_string(power) + " W outside [" +
                              std::to_string(p.P_min) + ", " + std::to_string(p.P_max) + "]");
    return fuel_flow_unchecked(p, F_e, v);
}

namespace {

// Augmented state: position, velocity, fuel, and work integrals.
struct Aug {
    double s, v, fuel, we, wb, wr, wd;
};

Aug operator+(const Aug& a, const Aug& b) {
    return {a.s + b.s, a.v + b.v, a.fuel + b.fuel, a.we + b.we,
            a.wb + b.wb, a.wr + b.wr, a.wd + b.wd};
}

Aug operator*(double c, const Aug& a) {
    return {c * a.s, c * a.v, c * a.fuel, c * a.we, c * a.wb, c * a.wr, c * a.wd};
}

}  // namespace

StepResult step_time(const VehicleParameters& p, const Environment& env,
                     const Route& route, const VehicleState& state,
                     std::optional<double> tau, const ControlInput& u, double dt) {
    if (dt <= 0) throw RangeError("dt must be positive");
    const double L = route.total_length();

    auto deriv = [&](const Aug& x) -> Aug {
        double v = std::max(x.v, 0.0);
        double s = std::clamp(x.s, 0.0, L);
        double alpha = route.grade_at(s);
        double fr = rolling_force(p, env, alpha);
        double fg = gravity_force(p, env, alpha);
        double fd = drag_force(p, env, v, tau);
        double a = (-fr - fg - fd + u.F_e - u.F_b) / p.m;
        Aug d;
        d.s = v;
        d.v = a;
        d.fuel = fuel_flow_unchecked(p, u.F_e, v);
        d.we = u.F_e * v;
        d.wb = u.F_b * v;
        d.wr = fr * v;
        d.wd = fd * v;
        return d;
    };

    Aug x0{state.s, state.v, 0, 0, 0, 0, 0};
    Aug k1 = deriv(x0);
    Aug k2 = deriv(x0 + (dt / 2) * k1);
    Aug k3 = deriv(x0 + (dt / 2) * k2);
    Aug k4 = deriv(x0 + dt * k3);
    Aug x1 = x0 + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4);

    StepResult r;
    r.state.s = x1.s;
    r.state.v = std::max(x1.v, 0.0);
    r.fuel_kg = x1.fuel;
    r.work_engine_J = x1.we;
    r.work_brake_J = x1.wb;
    r.work_roll_J = x1.wr;
    r.work_drag_J = x1.wd;
    return r;
}

double nominal_consumption(const FuelLog& log) {
    if (log.distance_m <= 0) throw RangeError("consumption undefined for zero distance");
    return log.fuel_kg / log.distance_m;
}

}  // namespace platoon
