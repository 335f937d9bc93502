#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "platoon/road_network.hpp"
#include "platoon/vehicle.hpp"

namespace platoon {

// One vehicle's transport task: a route through the network with timing and
// speed envelope. The fleet layer plans on these with constant-speed
// kinematics; topography is delegated to the look-ahead planner downstream.
struct TransportAssignment {
    int vehicle_id = 0;
    std::vector<int> route_nodes;
    Route route;  // resolved against the network
    double start_time_s = 0.0;
    double deadline_s = 0.0;
    double v_nom = 0.0;  // m/s, nominal average speed when driving alone
    double v_cap = 0.0;  // m/s, road/legal maximum average speed

    void validate() const;  // individually feasible, v_nom <= v_cap
};

// JSON array of {vehicle_id, route_nodes, start_time_s, deadline_s,
// v_nom_mps, v_cap_mps}; routes are resolved against the network.
std::vector<TransportAssignment> load_assignments(const std::string& path,
                                                  const RoadNetwork& net);
std::vector<TransportAssignment> assignments_from_json_text(const std::string& text,
                                                            const RoadNetwork& net);
std::string assignments_to_json_text(const std::vector<TransportAssignment>& assignments);

// Constant-speed fuel-flow abstraction: drag and idle terms only; rolling
// resistance and grade cancel between the plan and its baseline.
struct AverageFuelFlows {
    double phi_1 = 0.0;       // kg/s, first vehicle alone
    double phi_2 = 0.0;       // kg/s, second vehicle alone
    double phi_platoon = 0.0; // kg/s, the two-vehicle platoon in total
};
AverageFuelFlows average_fuel_flows(const VehicleParameters& p, const Environment& env,
                                    double tau_ref, double v1, double v2, double v_platoon);

// Meeting point of two constant-speed vehicles with positions s1_0, s2_0 at a
// common reference time. Throws NoMergeError when speeds are equal or the
// trajectories diverge (meeting point behind either vehicle).
double catchup_merge_point(double s1_0, double s2_0, double v1, double v2);

struct SpeedSegment {
    double s_begin = 0.0;  // own-route coordinates
    double s_end = 0.0;
    double v = 0.0;
};

// Outcome of the pairwise analysis for one (leader, follower) ordering.
struct PairwisePlan {
    int leader_id = 0;
    int follower_id = 0;
    std::vector<SpeedSegment> follower_segments;  // catch-up / platoon / tail
    double merge_s = 0.0;   // follower route coordinate
    double split_s = 0.0;   // follower route coordinate
    double leader_merge_s = 0.0;
    double leader_split_s = 0.0;
    double align_offset = 0.0;  // follower coord - leader coord on shared road
    double plan_fuel_kg = 0.0;         // both vehicles, full routes
    double independent_fuel_kg = 0.0;  // both vehicles at nominal speeds
    double saving_kg = 0.0;            // independent - plan, > 0 for kept plans
};

struct PairPlanConfig {
    double v_floor = 60.0 / 3.6;      // m/s, slowest catch-up/tail speed
    double speed_step = 0.1 / 3.6;    // m/s, catch-up speed grid
};

// Pairwise analysis: the leader's plan is fixed at v_nom; the follower picks
// a catch-up speed, platoons at the leader's speed until the routes split,
// then finishes so its deadline still holds. Returns the best plan when it
// beats independent driving, nullopt otherwise.
std::optional<PairwisePlan> opportunistic_pair_plan(const TransportAssignment& leader,
                                                    const TransportAssignment& follower,
                                                    const VehicleParameters& p,
                                                    const Environment& env, double tau_ref,
                                                    const PairPlanConfig& cfg = {});

// Directed graph: an edge stored as a PairwisePlan means "follower saves
// saving_kg when leader_id is made a coordination leader". Positive savings
// only; no self-edges.
struct SavingsGraph {
    std::vector<int> vehicles;
    std::vector<PairwisePlan> edges;
};

SavingsGraph build_savings_graph(const std::vector<TransportAssignment>& assignments,
                                 const VehicleParameters& p, const Environment& env,
                                 double tau_ref, const PairPlanConfig& cfg = {});

enum class GreedyInit { empty_set, all_leaders };

struct SegmentStats {
    int from = 0;
    int to = 0;
    int vehicle_count = 0;
    double avg_platoon_size = 0.0;  // vehicles / travel groups on the segment
};

struct VehiclePlan {
    int vehicle_id = 0;
    std::optional<int> leader_id;                 // set for followers
    std::vector<SpeedSegment> segments;           // own-route coordinates
    double fuel_plan_kg = 0.0;
    double fuel_independent_kg = 0.0;
    std::vector<std::pair<double, double>> gap_curve;  // (s, time gap to leader)
};

struct CoordinationPlan {
    std::vector<int> leaders;                      // ascending vehicle id
    std::unordered_map<int, int> follower_of;      // follower -> leader
    double graph_saving_kg = 0.0;                  // skeleton objective value
    std::vector<double> greedy_saving_trace;       // objective after each flip

    // Filled by assemble_plan:
    std::vector<VehiclePlan> vehicles;             // ascending vehicle id
    double fuel_plan_kg = 0.0;
    double fuel_independent_kg = 0.0;
    double saving_kg = 0.0;
    double saving_percent = 0.0;
    double saving_liters = 0.0;
    double co2_saving_kg = 0.0;
    std::vector<SegmentStats> segment_stats;
};

// Greedy leader selection: repeatedly flip the single vehicle (into or out of
// the leader set) that most increases total saving; every non-leader follows
// its best-saving leader or stays independent. Deterministic: ties break
// toward the smaller vehicle id. Both initializations are exposed; empty-set
// is the default used by the fleet pipeline.
CoordinationPlan select_leaders_greedy(const SavingsGraph& graph,
                                       GreedyInit init = GreedyInit::empty_set);

// Objective value of an explicit leader set under the same rules the greedy
// uses; exposed for oracle comparisons.
double leader_set_saving(const SavingsGraph& graph, const std::vector<int>& leaders);

// Materializes executable per-vehicle speed plans, gap curves, per-segment
// platoon statistics, and aggregate fuel/volume/CO2 savings. Followers whose
// stored plan fails re-validation revert to independent driving.
CoordinationPlan assemble_plan(CoordinationPlan skeleton,
                               const std::vector<TransportAssignment>& assignments,
                               const SavingsGraph& graph, const VehicleParameters& p,
                               const Environment& env);

// Fuel for the whole fleet when every vehicle drives alone at v_nom.
double independent_fleet_fuel(const std::vector<TransportAssignment>& assignments,
                              const VehicleParameters& p, const Environment& env);

// Upper bound used for context in reports: every vehicle except one per
// maximal co-routed group drafts for its entire trip at its nominal speed.
double all_platooned_fuel_bound(const std::vector<TransportAssignment>& assignments,
                                const VehicleParameters& p, const Environment& env,
                                double tau_ref);

}  // namespace platoon
