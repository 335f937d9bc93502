#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "platoon/road_network.hpp"
#include "platoon/vehicle.hpp"
#include "platoon/velocity_profile.hpp"

namespace platoon {

// Discretization for merge planning. Legs span tens of kilometers, so cells
// are coarser than the look-ahead planner's. lambda_* control the time-price
// sweep that builds each leg's fuel-vs-time frontier; negative prices cover
// legs that must be driven slower than their free optimum.
struct MergeGrid {
    double ds = 100.0;         // m
    double dv = 1.0 / 3.6;     // m/s
    int lambda_count = 24;     // per sign; frontier sweeps 2*count + 1 prices
    double lambda_min = 1e-5;  // kg/s
    double lambda_max = 1.0;   // kg/s
};

// Fuel-vs-travel-time Pareto frontier of one leg with pinned boundary speeds.
// Stored as the lower convex hull of the swept optima; a query time between
// vertices is served by linear interpolation, i.e. time-sharing the two
// neighbouring driving plans.
struct LegFrontier {
    struct Point {
        double time_s = 0.0;
        double fuel_kg = 0.0;
        double lambda = 0.0;  // price that produced the vertex
    };
    std::vector<Point> pts;  // ascending time

    bool empty() const { return pts.empty(); }
    double min_time() const;
    double max_time() const;
    double fuel_at(double T) const;        // +infinity outside the span
    const Point* nearest(double T) const;  // nullptr when empty
};

// One leg with pinned boundary speeds and an exact required duration.
// params.size() > 1 prices the leg as a platoon in file order (lead drag
// unreduced, followers at the platoon gap).
struct SegmentSpec {
    std::vector<VehicleParameters> params;
    Environment env;
    Route route;  // leg-local coordinates [0, length]
    double v_in = 0.0;
    double v_out = 0.0;
    double duration_s = 0.0;
    double tau_ref = 1.0;
    double v_anchor = 80.0 / 3.6;  // grid anchor; v_in/v_out snap to this grid
    double v_min = 60.0 / 3.6;
    double v_max = 90.0 / 3.6;
    MergeGrid grid;
};

struct SegmentPlan {
    VelocityProfile profile;  // representative frontier plan nearest in time
    double fuel_kg = 0.0;     // frontier value at the exact duration
    double time_s = 0.0;      // profile's own duration
};

// Minimum-fuel traversal of one leg with fixed boundary speeds and duration.
// Throws InfeasibleError when no grid trajectory spans the leg in time.
SegmentPlan segment_fuel_optimal(const SegmentSpec& spec);

// Two or more vehicles approach a junction on separate legs, then share one
// leg to a common final state. Coordinates are leg-local; the junction sits
// at each pre-leg's end and the post leg's start.
struct MergingProblem {
    std::vector<VehicleParameters> params;  // one per vehicle, size >= 2
    Environment env;
    std::vector<Route> pre_legs;  // per vehicle; zero length = already there
    Route post_leg;
    std::vector<double> v_start;  // m/s, per vehicle
    std::vector<double> t_start;  // s, per vehicle
    double v_final = 0.0;         // m/s, at the post leg's end
    double t_final = 0.0;         // s, common arrival deadline
    double tau_ref = 1.0;
    double v_anchor = 80.0 / 3.6;
    double v_min = 60.0 / 3.6;
    double v_max = 90.0 / 3.6;
    MergeGrid grid;

    std::size_t size() const { return params.size(); }
    void validate() const;
};

struct MergingSolution {
    bool merged = false;           // merging beat independent driving
    double t_merge = 0.0;          // s
    double v_merge = 0.0;          // m/s, common speed at the junction
    double merge_fuel_kg = 0.0;    // best plan that merges
    double no_merge_fuel_kg = 0.0; // every vehicle drives its route alone
    double total_fuel_kg = 0.0;    // min of the two above
    std::vector<VelocityProfile> pre_profiles;  // leg-local s
    VelocityProfile post_profile;
    std::vector<std::pair<double, double>> cost_curve;  // (t_merge, fuel) scan
};

// Precomputed leg frontiers for one problem; lets a scan over candidate merge
// times run in microseconds per probe. The junction speed is minimized out at
// every probe (inner decision on the velocity grid).
class MergeEvaluator {
  public:
    explicit MergeEvaluator(const MergingProblem& pb);
    ~MergeEvaluator();
    MergeEvaluator(MergeEvaluator&&) noexcept;
    MergeEvaluator& operator=(MergeEvaluator&&) noexcept;

    // Total fuel when everyone meets the junction at t_merge; +infinity when
    // some leg cannot make that time.
    double cost(double t_merge) const;

    // Conservative feasible span for t_merge; empty (second < first) when the
    // legs cannot be synchronized at all.
    std::pair<double, double> merge_window() const;

    // Sum of independently optimized full-route traversals.
    double no_merge_cost() const;

    // Full trajectory extraction for a fixed merge time.
    MergingSolution solution_at(double t_merge) const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Convenience wrapper; prefer MergeEvaluator for repeated probes.
double total_merge_cost(const MergingProblem& pb, double t_merge);

// Two-step solve: leg trajectories by dual dynamic programming inside, then a
// scalar search over the merge time (coarse scan + golden section). Reports
// the no-merge alternative and takes the cheaper of the two.
MergingSolution solve_merge(const MergingProblem& pb);

// End-to-end route formed by driving `a`, then `b`. Grades are preserved
// exactly; per-segment speed limits carry over.
Route concat_routes(const Route& a, const Route& b);

}  // namespace platoon
