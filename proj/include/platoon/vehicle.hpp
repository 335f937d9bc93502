#pragma once

#include <optional>
#include <string>

#include "platoon/road_network.hpp"

namespace platoon {

// Longitudinal powertrain model. Defaults are the reference heavy-duty
// tractor-trailer configuration used throughout the test suite.
struct VehicleParameters {
    double m = 40000.0;       // kg
    double A = 10.0;          // frontal area, m^2
    double cd0 = 0.6;         // drag coefficient, no predecessor
    double alpha1 = 0.53;     // max relative drag reduction
    double alpha2 = 0.81;     // 1/s, drag recovery rate over time gap
    double p0 = 5.36e-4;      // kg/s idle fuel flow
    double p1 = 5.15e-8;      // kg/(s*W) fuel flow per unit power
    double P_min = -9000.0;   // W, engine braking floor
    double P_max = 300000.0;  // W, rated power
    double c_r = 0.005;       // rolling resistance coefficient

    void validate() const;
    static VehicleParameters from_json_text(const std::string& text);
    static VehicleParameters load(const std::string& path);
};

struct Environment {
    double g = 9.81;   // m/s^2
    double rho = 1.29; // kg/m^3
};

struct VehicleState {
    double s = 0.0;  // m
    double v = 0.0;  // m/s, >= 0
};

// F_e is tractive force at the wheels; negative values down to P_min/v model
// engine/auxiliary braking without the service brake. F_b >= 0 is the service
// brake. The two are never commanded simultaneously.
struct ControlInput {
    double F_e = 0.0;  // N
    double F_b = 0.0;  // N
};

struct FuelLog {
    double fuel_kg = 0.0;
    double distance_m = 0.0;
    double time_s = 0.0;
};

// Drag coefficient at time gap tau behind a predecessor; nullopt = no
// predecessor.
double drag_coefficient(const VehicleParameters& p, std::optional<double> tau);

double rolling_force(const VehicleParameters& p, const Environment& env, double alpha);
double gravity_force(const VehicleParameters& p, const Environment& env, double alpha);
double drag_force(const VehicleParameters& p, const Environment& env, double v,
                  std::optional<double> tau);

// Net longitudinal force -F_r - F_g - F_d + F_e - F_b.
double net_force(const VehicleParameters& p, const Environment& env,
                 const VehicleState& state, double alpha, std::optional<double> tau,
                 const ControlInput& u);

// Injected fuel flow for engine power F_e*v; requires the power within
// [P_min, P_max], floors at idle flow p0 for non-positive power.
double fuel_flow(const VehicleParameters& p, double F_e, double v);

// Same flow without the power-bound check; used inside integrators where v
// drifts within a step.
double fuel_flow_unchecked(const VehicleParameters& p, double F_e, double v);

struct StepResult {
    VehicleState state;
    double fuel_kg = 0.0;
    // Work integrals over the step, for energy audits.
    double work_engine_J = 0.0;
    double work_brake_J = 0.0;
    double work_roll_J = 0.0;
    double work_drag_J = 0.0;
};

// One fixed-step 4th-order integration step of the longitudinal dynamics with
// the control input held constant. Grade is looked up from the route at each
// stage position (clamped to the route domain). Velocity is floored at zero.
StepResult step_time(const VehicleParameters& p, const Environment& env,
                     const Route& route, const VehicleState& state,
                     std::optional<double> tau, const ControlInput& u, double dt);

// Fuel per meter over the logged window.
double nominal_consumption(const FuelLog& log);

constexpr double kDefaultDt = 0.1;  // s

}  // namespace platoon
