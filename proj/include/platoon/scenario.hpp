#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "platoon/fleet.hpp"
#include "platoon/platoon_control.hpp"
#include "platoon/road_network.hpp"
#include "platoon/units.hpp"
#include "platoon/vehicle.hpp"
#include "platoon/velocity_profile.hpp"

namespace platoon {

// A fully-loaded run configuration: network, transports, vehicle defaults,
// and the knobs that shape planning and simulation. Loaded from a JSON file
// whose relative path references resolve against the file's directory.
struct Scenario {
    RoadNetwork network;
    std::vector<TransportAssignment> assignments;
    VehicleParameters params;
    Environment env;
    double tau_ref = 1.0;
    std::uint64_t seed = 1;
    // Operational platoon-length limit, counting the leader. Zero disables
    // the cap; when set (>= 2) coordination assigns each leader at most
    // max_platoon_size - 1 followers and promotes extra leaders instead of
    // growing arbitrarily long trains.
    int max_platoon_size = 0;
    PairPlanConfig pair_cfg;
    SpacingConfig spacing;
    ControlGains gains;
};

Scenario scenario_from_json_text(const std::string& text, const std::string& base_dir);
Scenario load_scenario(const std::string& path);

enum class RunMode { plan_only, plan_and_simulate };

struct RunReport {
    std::string mode;  // "plan-only" | "plan+simulate"
    std::uint64_t seed = 0;
    double tau_ref = 1.0;

    CoordinationPlan plan;

    // Idealized every-co-routed-vehicle-drafts bound.
    double bound_fuel_kg = 0.0;
    double bound_percent = 0.0;

    int vehicle_count = 0;
    int leader_count = 0;  // leaders with at least one follower
    int follower_count = 0;
    int non_platooning = 0;
    int max_followers_per_leader = 0;
    int median_followers_per_leader = 0;  // upper median of the count multiset

    // Dynamics-grade accounting (plan+simulate only; zero otherwise).
    double sim_fuel_plan_kg = 0.0;
    double sim_fuel_independent_kg = 0.0;
    double sim_saving_kg = 0.0;
    double sim_saving_percent = 0.0;
    // Simulated baseline minus kinematic baseline: the fuel the constant-speed
    // abstraction does not see (rolling, grade, transients). Non-negative on
    // physical inputs.
    double fidelity_gap_kg = 0.0;

    // Wall-clock timings; in-memory only, never serialized (reports must be
    // byte-identical across runs).
    double wall_ms_planning = 0.0;
    double wall_ms_simulation = 0.0;
};

RunReport run_scenario(const Scenario& sc, RunMode mode);

// Deterministic serializations; neither includes timings.
std::string report_to_json_text(const RunReport& r);
std::string report_to_text(const RunReport& r);

// --- Hill demonstration -----------------------------------------------------

struct HillArm {
    std::string name;
    double fuel_kg = 0.0;                  // summed over the measurement window
    double brake_energy_J = 0.0;           // whole run, all vehicles
    double follower_brake_energy_J = 0.0;  // whole run, vehicles 1..N-1
    std::vector<TrajectoryRecord> records;
};

struct HillDemoReport {
    Route route;
    double window_begin = 0.0;
    double window_end = 0.0;
    std::size_t n_vehicles = 0;

    HillArm solo;         // each vehicle alone, own look-ahead profile
    HillArm gap_keeping;  // platoon tracking a flat reference, no look-ahead
    HillArm cooperative;  // platoon tracking one common look-ahead profile

    VelocityProfile solo_profile;
    VelocityProfile cooperative_profile;

    double coop_vs_solo_percent = 0.0;  // 100 * (1 - coop/solo)
    double coop_vs_gap_percent = 0.0;
    double min_coop_speed_mps = 0.0;  // profile minimum over the hill window
};

// The bundled demonstration crest: a flat lead-in, a climb and descent of
// 24 m relief over ~4 km, and a flat run-out.
Route default_hill_route();

struct HillDemoConfig {
    std::size_t n_vehicles = 3;
    double v_bar = kmh_to_mps(80.0);
    double v_min = kmh_to_mps(60.0);
    double v_max = kmh_to_mps(90.0);
    double tau_ref = 0.8;  // ~18 m spacing at highway speed
};

HillDemoReport run_hill_demo(const Route& route, const VehicleParameters& p,
                             const Environment& env, const HillDemoConfig& cfg = {});

// --- Plot-ready columnar exports ---------------------------------------------

// Drag coefficient vs time gap over [0, tau_max], fixed step.
std::string drag_curve_text(const VehicleParameters& p, double tau_max = 3.0,
                            double step = 0.05);

// One line per gap-curve knot of every coordinated follower in the plan.
std::string gap_curves_text(const CoordinationPlan& plan);

// Altitude, velocity, inter-vehicle spacing, and total generated power for
// one demo arm, columnar against time.
std::string hill_panels_text(const Route& route, const std::vector<TrajectoryRecord>& records);

// --- Bundled case-study inputs ----------------------------------------------

// Deterministic 200-vehicle transport demand for the bundled corridor
// network: three showcase vehicles with pinned routes and start times, the
// rest drawn from origin/destination demand with a two-hour start window.
std::vector<TransportAssignment> gen_case_study_assignments(const RoadNetwork& net,
                                                            std::uint64_t seed);

}  // namespace platoon
