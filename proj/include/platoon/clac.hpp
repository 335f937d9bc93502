#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "platoon/road_network.hpp"
#include "platoon/vehicle.hpp"
#include "platoon/velocity_profile.hpp"

namespace platoon {

struct ClacGrid {
    double ds = 50.0;       // m, stage length
    double dv = 0.5 / 3.6;  // m/s, velocity grid step (0.5 km/h)
};

// Fuel-optimal common velocity profile problem for an N-vehicle platoon over
// the route window [s0, s0 + H], subject to a requested average speed v_bar
// and speed bounds. The grid is anchored so v_bar is exactly on it.
struct ClacProblem {
    std::size_t N = 1;
    std::vector<VehicleParameters> params;  // one per vehicle
    Environment env;
    Route route;
    double s0 = 0.0;
    double H = 2500.0;      // m, look-ahead horizon
    double tau_ref = 1.0;   // s, platoon time gap (drag + grade offset model)
    double v_bar = 0.0;     // m/s, average-speed request
    double v_min = 0.0;     // m/s
    double v_max = 0.0;     // m/s
    std::optional<double> v_entry;  // entry speed (grid level); default v_bar
    ClacGrid grid;
    // Followers evaluate grade i*tau_ref*v behind the profile position; turn
    // off to put the whole platoon on the lead vehicle's grade.
    bool grade_offset_followers = true;
    // With service braking allowed (default), decelerations beyond engine
    // braking are priced at idle fuel. Turned off, such transitions become
    // infeasible for every vehicle in the platoon, which forces profiles that
    // drag-reduced followers can track without touching their brakes.
    bool allow_service_brake = true;

    void validate() const;
};

struct ClacSolution {
    VelocityProfile profile;        // knots at every stage boundary
    double J_clac = 0.0;            // kg per vehicle-meter (fuel/(N*H))
    std::vector<std::vector<double>> force_plan;  // [vehicle][stage] engine force, N
    double achieved_average_speed = 0.0;  // m/s, H / total time
    double lambda = 0.0;            // kg/s shadow price on travel time
    double total_fuel_kg = 0.0;
    double total_time_s = 0.0;
    // Value of the optimal path for fuel + lambda * time, accumulated in the
    // DP's own summation order; lets tests compare against enumeration
    // bit for bit.
    double dual_objective = 0.0;
};

// Number of DP stages (uniform cells of length H / count).
std::size_t clac_stage_count(const ClacProblem& pb);
double clac_cell_length(const ClacProblem& pb);

// Platoon fuel (kg) to traverse the cell starting at s_k from entry speed v_k
// to exit speed v_k1. Transitions needing more than P_max on any vehicle cost
// +infinity; decelerations beyond engine braking engage service brakes and
// burn idle fuel only.
double stage_cost(const ClacProblem& pb, double s_k, double v_k, double v_k1);

// One backward sweep at a fixed time price. Deterministic tie-break toward
// the higher exit velocity. Exposed for the enumeration oracle in tests.
ClacSolution solve_clac_at_lambda(const ClacProblem& pb, double lambda);

// Full solve: bisects lambda until the achieved mean slowness matches
// 1 / v_bar within 1e-4 s/m. Throws InfeasibleError (with the bracket) when
// the constraint cannot be met on the grid.
ClacSolution solve_clac(const ClacProblem& pb,
                        std::optional<double> lambda_hint = std::nullopt);

// Receding-horizon step from s_now: solves on the shifted window and returns
// the first commit_m meters of the profile (knots on stage boundaries).
VelocityProfile receding_horizon_step(const ClacProblem& pb, double s_now,
                                      std::optional<double> v_now, double commit_m,
                                      std::optional<double> lambda_hint = std::nullopt);

// Drives receding_horizon_step from s_begin to s_end and stitches the
// committed segments into one profile.
VelocityProfile plan_route_profile(const ClacProblem& pb, double s_begin,
                                   double s_end, double commit_m = 500.0);

}  // namespace platoon
