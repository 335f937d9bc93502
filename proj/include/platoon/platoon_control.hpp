#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "platoon/road_network.hpp"
#include "platoon/vehicle.hpp"
#include "platoon/velocity_profile.hpp"

namespace platoon {

struct SpacingConfig {
    double tau_ref = 1.0;  // s, reference time gap
    double h0 = 0.2;       // lead-vehicle information weight, in [0,1)
    double h = 1.0;        // velocity-error weight, > 0
};

struct ControlGains {
    double k_p = 0.2;  // 1/s^2
    double k_d = 0.7;  // 1/s
};

// Monotone record of a vehicle's passages: position, passage time, and speed
// at passage. Interpolation is monotone cubic with a linear fallback when too
// few samples bracket the query.
class PassageLog {
  public:
    void append(double s, double t, double v);
    bool covers(double s) const;
    double front_s() const;
    double back_s() const;
    std::size_t size() const { return s_.size(); }

    double t_at(double s) const;
    double v_at(double s) const;

    // Drops samples strictly below s_keep, always retaining a few for the
    // interpolation stencil.
    void prune_below(double s_keep);

  private:
    std::vector<double> s_, t_, v_;
    void check_covers(double s) const;
};

struct ErrorSignals {
    double Delta = 0.0;   // s, gap error vs predecessor
    double Delta0 = 0.0;  // s, gap error vs lead
    double e = 0.0;       // m/s, velocity tracking error (reference - actual)
    double delta = 0.0;   // weighted error signal
};

// Platoon snapshot: index 0 is the lead vehicle. Positions are coordinates on
// the shared route; followers sit strictly behind their predecessors.
struct PlatoonConfigurationState {
    Route route;
    Environment env;
    std::vector<VehicleParameters> params;  // one per vehicle
    std::vector<VehicleState> states;
    std::vector<PassageLog> logs;
    VelocityProfile v_ref;
    double t = 0.0;

    std::size_t size() const { return states.size(); }
};

// Builds an on-policy platoon: vehicle i starts i*tau_ref behind the lead in
// time at speed v0, with synthetic constant-speed history seeded far enough
// back for every log query.
PlatoonConfigurationState initialize_on_policy(const Route& route, const Environment& env,
                                               const std::vector<VehicleParameters>& params,
                                               const VelocityProfile& v_ref,
                                               const SpacingConfig& cfg, double s_lead,
                                               double v0, double t0);

// Weighted spacing errors of follower i at position s.
ErrorSignals compute_errors(const PlatoonConfigurationState& state, const SpacingConfig& cfg,
                            std::size_t i, double s);

// Feedback-linearizing spacing controller. For i = 0 it tracks v_ref alone.
ControlInput platoon_control_law(const PlatoonConfigurationState& state,
                                 const SpacingConfig& cfg, std::size_t i,
                                 const ControlGains& gains);

struct TrajectoryRecord {
    std::vector<double> t, s, v, F_e, F_b, fuel;  // fuel is cumulative
    double brake_energy_J = 0.0;

    double time_at_s(double query_s) const;
    double v_at_s(double query_s) const;
    double fuel_at_s(double query_s) const;
    double fuel_between(double s_a, double s_b) const;
    void write_csv(const std::string& path) const;
};

struct StopCondition {
    std::optional<double> duration_s;      // stop when t - t0 reaches this
    std::optional<double> all_past_m;      // stop when every vehicle passed this s
};

// Synchronous fixed-step closed-loop simulation. Mutates `state` in place and
// returns one record per vehicle. Aborts with a safety violation when any
// spacing collapses to zero.
std::vector<TrajectoryRecord> simulate_platoon(PlatoonConfigurationState& state,
                                               const SpacingConfig& cfg,
                                               const ControlGains& gains,
                                               const StopCondition& stop,
                                               double dt = kDefaultDt);

// Integral of |v_i(s) - v_ref(s)|^2 over the common distance window of all
// records, per vehicle, by trapezoidal quadrature.
std::vector<double> string_stability_metric(const std::vector<TrajectoryRecord>& records,
                                            const VelocityProfile& v_ref);

}  // namespace platoon
