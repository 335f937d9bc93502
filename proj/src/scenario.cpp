#include "platoon/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "platoon/clac.hpp"
#include "platoon/errors.hpp"

namespace platoon {

namespace {

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string resolve_ref(const std::string& base_dir, const std::string& rel) {
    std::filesystem::path p(rel);
    if (p.is_absolute() || base_dir.empty()) return rel;
    return (std::filesystem::path(base_dir) / p).string();
}

double get_number(const nlohmann::json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw ParseError(std::string("scenario: '") + key + "' must be a number");
    return j.at(key).get<double>();
}

// Fixed-format float for columnar exports; %g-style output varies in ways
// that make diffing runs unpleasant.
std::string fmt(const char* spec, double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, x);
    return buf;
}

}  // namespace

Scenario scenario_from_json_text(const std::string& text, const std::string& base_dir) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("scenario: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("scenario: expected a JSON object");
    if (!j.contains("network") || !j.contains("assignments"))
        throw ParseError("scenario: needs 'network' and 'assignments' file references");

    Scenario sc;
    sc.network = RoadNetwork::load(resolve_ref(base_dir, j.at("network").get<std::string>()));
    sc.assignments =
        load_assignments(resolve_ref(base_dir, j.at("assignments").get<std::string>()), sc.network);
    if (j.contains("vehicle"))
        sc.params = VehicleParameters::load(resolve_ref(base_dir, j.at("vehicle").get<std::string>()));

    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned())
            throw ParseError("scenario: 'seed' must be a non-negative integer");
        sc.seed = j.at("seed").get<std::uint64_t>();
    }
    sc.tau_ref = get_number(j, "tau_ref", sc.tau_ref);
    if (sc.tau_ref < 0.0) throw RangeError("scenario: tau_ref must be non-negative");

    if (j.contains("max_platoon_size")) {
        if (!j.at("max_platoon_size").is_number_integer())
            throw ParseError("scenario: 'max_platoon_size' must be an integer");
        sc.max_platoon_size = j.at("max_platoon_size").get<int>();
        if (sc.max_platoon_size != 0 && sc.max_platoon_size < 2)
            throw RangeError("scenario: max_platoon_size must be 0 (no limit) or at least 2");
    }

    if (j.contains("env")) {
        const auto& e = j.at("env");
        sc.env.g = get_number(e, "g", sc.env.g);
        sc.env.rho = get_number(e, "rho", sc.env.rho);
    }
    if (j.contains("pair_plan")) {
        const auto& p = j.at("pair_plan");
        sc.pair_cfg.v_floor = kmh_to_mps(get_number(p, "v_floor_kmh", mps_to_kmh(sc.pair_cfg.v_floor)));
        sc.pair_cfg.speed_step =
            kmh_to_mps(get_number(p, "speed_step_kmh", mps_to_kmh(sc.pair_cfg.speed_step)));
        if (sc.pair_cfg.v_floor <= 0.0 || sc.pair_cfg.speed_step <= 0.0)
            throw RangeError("scenario: pair_plan speeds must be positive");
    }
    if (j.contains("spacing")) {
        const auto& s = j.at("spacing");
        sc.spacing.tau_ref = get_number(s, "tau_ref", sc.spacing.tau_ref);
        sc.spacing.h0 = get_number(s, "h0", sc.spacing.h0);
        sc.spacing.h = get_number(s, "h", sc.spacing.h);
    }
    if (j.contains("gains")) {
        const auto& g = j.at("gains");
        sc.gains.k_p = get_number(g, "k_p", sc.gains.k_p);
        sc.gains.k_d = get_number(g, "k_d", sc.gains.k_d);
    }
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::string dir = std::filesystem::path(path).parent_path().string();
    try {
        return scenario_from_json_text(read_text_file(path), dir);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    } catch (const RangeError& e) {
        throw RangeError(path + ": " + e.what());
    }
}

namespace {

// Closed-loop traversal of one vehicle's speed plan, leg by leg: each leg is
// tracked by the spacing controller as a single-vehicle "platoon" against a
// constant reference, entering at the previous leg's exit speed. Legs inside
// draft_window run with the drag coefficient a steady follower at tau_ref
// would see; the leader it trails is abstracted away.
double simulate_speed_plan(const Route& route, const std::vector<SpeedSegment>& legs,
                           const VehicleParameters& p, const Environment& env,
                           const SpacingConfig& spacing, const ControlGains& gains,
                           double tau_ref, const std::pair<double, double>* draft_window) {
    double fuel = 0.0;
    double v = legs.front().v;
    double t = 0.0;
    for (const auto& leg : legs) {
        if (leg.s_end - leg.s_begin < 1e-6) continue;
        VehicleParameters pl = p;
        if (draft_window && leg.s_begin >= draft_window->first - 1e-6 &&
            leg.s_end <= draft_window->second + 1e-6)
            pl.cd0 = drag_coefficient(p, tau_ref);
        VelocityProfile prof =
            VelocityProfile::constant(leg.v, leg.s_begin - 2000.0, leg.s_end + 2000.0);
        auto st = initialize_on_policy(route, env, {pl}, prof, spacing, leg.s_begin, v, t);
        StopCondition stop;
        stop.all_past_m = leg.s_end;
        auto rec = simulate_platoon(st, spacing, gains, stop);
        fuel += rec[0].fuel_between(leg.s_begin, leg.s_end);
        v = rec[0].v_at_s(leg.s_end);
        t = rec[0].time_at_s(leg.s_end);
    }
    return fuel;
}

// Leader selection under a platoon-length limit. Rounds of a set-cover style
// greedy: the candidate leader whose best cap-many still-unassigned followers
// save the most becomes a leader and takes exactly those followers; everyone
// assigned drops out of later rounds, so surplus followers promote new
// leaders instead of extending one train. Ties break toward the smaller
// vehicle id, then the smaller follower id, keeping the result deterministic.
CoordinationPlan capped_skeleton(const SavingsGraph& graph, int max_platoon_size) {
    const int cap = max_platoon_size - 1;
    std::map<int, std::vector<const PairwisePlan*>> candidates;
    for (const auto& e : graph.edges)
        if (e.saving_kg > 0.0) candidates[e.leader_id].push_back(&e);
    for (auto& [id, edges] : candidates)
        std::sort(edges.begin(), edges.end(), [](const PairwisePlan* a, const PairwisePlan* b) {
            if (a->saving_kg != b->saving_kg) return a->saving_kg > b->saving_kg;
            return a->follower_id < b->follower_id;
        });

    CoordinationPlan sk;
    std::set<int> assigned;
    for (;;) {
        int best_leader = 0;
        double best_sum = 0.0;
        std::vector<const PairwisePlan*> best_take;
        for (const auto& [leader, edges] : candidates) {
            if (assigned.count(leader)) continue;
            double sum = 0.0;
            std::vector<const PairwisePlan*> take;
            for (const PairwisePlan* e : edges) {
                if (static_cast<int>(take.size()) == cap) break;
                if (assigned.count(e->follower_id)) continue;
                take.push_back(e);
                sum += e->saving_kg;
            }
            if (sum > best_sum) {  // strict: first (smallest id) wins ties
                best_leader = leader;
                best_sum = sum;
                best_take = std::move(take);
            }
        }
        if (best_take.empty()) break;
        sk.leaders.push_back(best_leader);
        assigned.insert(best_leader);
        for (const PairwisePlan* e : best_take) {
            sk.follower_of[e->follower_id] = best_leader;
            assigned.insert(e->follower_id);
        }
        sk.graph_saving_kg += best_sum;
        sk.greedy_saving_trace.push_back(sk.graph_saving_kg);
    }
    std::sort(sk.leaders.begin(), sk.leaders.end());
    return sk;
}

}  // namespace

RunReport run_scenario(const Scenario& sc, RunMode mode) {
    using clock = std::chrono::steady_clock;
    RunReport r;
    r.mode = mode == RunMode::plan_only ? "plan-only" : "plan+simulate";
    r.seed = sc.seed;
    r.tau_ref = sc.tau_ref;
    r.vehicle_count = static_cast<int>(sc.assignments.size());
    if (sc.assignments.empty()) return r;

    auto t0 = clock::now();
    SavingsGraph graph =
        build_savings_graph(sc.assignments, sc.params, sc.env, sc.tau_ref, sc.pair_cfg);
    CoordinationPlan skeleton = sc.max_platoon_size >= 2
                                    ? capped_skeleton(graph, sc.max_platoon_size)
                                    : select_leaders_greedy(graph);
    r.plan = assemble_plan(std::move(skeleton), sc.assignments, graph, sc.params, sc.env);
    r.wall_ms_planning =
        std::chrono::duration<double, std::milli>(clock::now() - t0).count();

    r.bound_fuel_kg = all_platooned_fuel_bound(sc.assignments, sc.params, sc.env, sc.tau_ref);
    r.bound_percent = r.plan.fuel_independent_kg > 0.0
                          ? 100.0 * (1.0 - r.bound_fuel_kg / r.plan.fuel_independent_kg)
                          : 0.0;

    // Role census. Leaders are counted from who is actually followed; the
    // greedy's leader set may contain vehicles whose candidates were all
    // reverted at assembly.
    std::map<int, int> followers_per_leader;
    for (const auto& [f, l] : r.plan.follower_of) {
        (void)f;
        ++followers_per_leader[l];
    }
    r.follower_count = static_cast<int>(r.plan.follower_of.size());
    r.leader_count = static_cast<int>(followers_per_leader.size());
    r.non_platooning = r.vehicle_count - r.follower_count - r.leader_count;
    std::vector<int> counts;
    counts.reserve(followers_per_leader.size());
    for (const auto& [l, c] : followers_per_leader) {
        (void)l;
        counts.push_back(c);
    }
    std::sort(counts.begin(), counts.end());
    if (!counts.empty()) {
        r.max_followers_per_leader = counts.back();
        r.median_followers_per_leader = counts[counts.size() / 2];  // upper median
    }

    if (mode == RunMode::plan_and_simulate) {
        auto t1 = clock::now();
        std::map<std::pair<int, int>, std::pair<double, double>> draft_windows;
        for (const auto& e : graph.edges)
            draft_windows[{e.leader_id, e.follower_id}] = {e.merge_s, e.split_s};

        std::map<int, const TransportAssignment*> by_id;
        for (const auto& a : sc.assignments) by_id[a.vehicle_id] = &a;

        for (const auto& vp : r.plan.vehicles) {
            const TransportAssignment& a = *by_id.at(vp.vehicle_id);
            const std::pair<double, double>* window = nullptr;
            if (vp.leader_id) {
                auto it = draft_windows.find({*vp.leader_id, vp.vehicle_id});
                if (it != draft_windows.end()) window = &it->second;
            }
            r.sim_fuel_plan_kg += simulate_speed_plan(a.route, vp.segments, sc.params, sc.env,
                                                      sc.spacing, sc.gains, sc.tau_ref, window);
            std::vector<SpeedSegment> baseline{{0.0, a.route.total_length(), a.v_nom}};
            r.sim_fuel_independent_kg += simulate_speed_plan(
                a.route, baseline, sc.params, sc.env, sc.spacing, sc.gains, sc.tau_ref, nullptr);
        }
        r.sim_saving_kg = r.sim_fuel_independent_kg - r.sim_fuel_plan_kg;
        r.sim_saving_percent = r.sim_fuel_independent_kg > 0.0
                                   ? 100.0 * (1.0 - r.sim_fuel_plan_kg / r.sim_fuel_independent_kg)
                                   : 0.0;
        r.fidelity_gap_kg = r.sim_fuel_independent_kg - r.plan.fuel_independent_kg;
        // Dynamics always adds rolling and grade losses on top of the
        // drag-and-idle abstraction; a negative gap means the models diverged.
        if (r.fidelity_gap_kg < -1e-9 * std::max(1.0, r.plan.fuel_independent_kg))
            throw ConstraintError("simulated baseline undercuts the kinematic baseline");
        r.wall_ms_simulation =
            std::chrono::duration<double, std::milli>(clock::now() - t1).count();
    }
    return r;
}

namespace {

const char* role_of(const RunReport& r, int id, const std::map<int, int>& fpl) {
    if (r.plan.follower_of.count(id)) return "follower";
    if (fpl.count(id)) return "leader";
    return "independent";
}

std::map<int, int> followers_per_leader_map(const RunReport& r) {
    std::map<int, int> fpl;
    for (const auto& [f, l] : r.plan.follower_of) {
        (void)f;
        ++fpl[l];
    }
    return fpl;
}

}  // namespace

std::string report_to_json_text(const RunReport& r) {
    nlohmann::json j;
    j["mode"] = r.mode;
    j["seed"] = r.seed;
    j["tau_ref_s"] = r.tau_ref;

    auto fpl = followers_per_leader_map(r);
    nlohmann::json totals;
    totals["vehicles"] = r.vehicle_count;
    totals["leaders"] = r.leader_count;
    totals["followers"] = r.follower_count;
    totals["non_platooning"] = r.non_platooning;
    totals["max_followers_per_leader"] = r.max_followers_per_leader;
    totals["median_followers_per_leader"] = r.median_followers_per_leader;
    totals["fuel_plan_kg"] = r.plan.fuel_plan_kg;
    totals["fuel_plan_l"] = fuel_kg_to_liters(r.plan.fuel_plan_kg);
    totals["fuel_independent_kg"] = r.plan.fuel_independent_kg;
    totals["fuel_independent_l"] = fuel_kg_to_liters(r.plan.fuel_independent_kg);
    totals["saving_kg"] = r.plan.saving_kg;
    totals["saving_percent"] = r.plan.saving_percent;
    totals["saving_l"] = r.plan.saving_liters;
    totals["co2_saving_kg"] = r.plan.co2_saving_kg;
    totals["bound_fuel_kg"] = r.bound_fuel_kg;
    totals["bound_percent"] = r.bound_percent;
    j["totals"] = std::move(totals);

    nlohmann::json vehicles = nlohmann::json::array();
    for (const auto& vp : r.plan.vehicles) {
        nlohmann::json v;
        v["id"] = vp.vehicle_id;
        v["role"] = role_of(r, vp.vehicle_id, fpl);
        if (vp.leader_id) v["leader_id"] = *vp.leader_id;
        v["fuel_plan_kg"] = vp.fuel_plan_kg;
        v["fuel_plan_l"] = fuel_kg_to_liters(vp.fuel_plan_kg);
        v["fuel_independent_kg"] = vp.fuel_independent_kg;
        v["fuel_independent_l"] = fuel_kg_to_liters(vp.fuel_independent_kg);
        nlohmann::json segs = nlohmann::json::array();
        for (const auto& s : vp.segments)
            segs.push_back({{"s_begin_m", s.s_begin}, {"s_end_m", s.s_end}, {"v_mps", s.v}});
        v["speed_plan"] = std::move(segs);
        vehicles.push_back(std::move(v));
    }
    j["vehicles"] = std::move(vehicles);

    nlohmann::json segments = nlohmann::json::array();
    for (const auto& s : r.plan.segment_stats)
        segments.push_back({{"from", s.from},
                            {"to", s.to},
                            {"vehicle_count", s.vehicle_count},
                            {"avg_platoon_size", s.avg_platoon_size}});
    j["segments"] = std::move(segments);

    if (r.mode == "plan+simulate") {
        nlohmann::json sim;
        sim["fuel_plan_kg"] = r.sim_fuel_plan_kg;
        sim["fuel_independent_kg"] = r.sim_fuel_independent_kg;
        sim["saving_kg"] = r.sim_saving_kg;
        sim["saving_percent"] = r.sim_saving_percent;
        sim["fidelity_gap_kg"] = r.fidelity_gap_kg;
        j["simulation"] = std::move(sim);
    }
    return j.dump(2) + "\n";
}

std::string report_to_text(const RunReport& r) {
    std::ostringstream os;
    os << "coordination report (" << r.mode << ")\n";
    os << "seed " << r.seed << ", tau_ref " << fmt("%.2f", r.tau_ref) << " s\n";
    os << "vehicles " << r.vehicle_count << ": leaders " << r.leader_count << ", followers "
       << r.follower_count << ", independent " << r.non_platooning << "\n";
    os << "followers per leader: max " << r.max_followers_per_leader << ", median "
       << r.median_followers_per_leader << "\n";
    os << "fuel: plan " << fmt("%.3f", r.plan.fuel_plan_kg) << " kg ("
       << fmt("%.3f", fuel_kg_to_liters(r.plan.fuel_plan_kg)) << " L), baseline "
       << fmt("%.3f", r.plan.fuel_independent_kg) << " kg ("
       << fmt("%.3f", fuel_kg_to_liters(r.plan.fuel_independent_kg)) << " L)\n";
    os << "saving: " << fmt("%.3f", r.plan.saving_kg) << " kg = "
       << fmt("%.3f", r.plan.saving_percent) << " %, " << fmt("%.3f", r.plan.saving_liters)
       << " L, " << fmt("%.3f", r.plan.co2_saving_kg) << " kg CO2\n";
    os << "all-platooned bound: " << fmt("%.3f", r.bound_fuel_kg) << " kg = "
       << fmt("%.3f", r.bound_percent) << " % below baseline\n";
    if (r.mode == "plan+simulate") {
        os << "simulated: plan " << fmt("%.3f", r.sim_fuel_plan_kg) << " kg, baseline "
           << fmt("%.3f", r.sim_fuel_independent_kg) << " kg, saving "
           << fmt("%.3f", r.sim_saving_percent) << " %\n";
        os << "fidelity gap (simulated - kinematic baseline): " << fmt("%.3f", r.fidelity_gap_kg)
           << " kg\n";
    }
    if (!r.plan.segment_stats.empty()) {
        os << "segments (from->to: vehicles, avg platoon size):\n";
        for (const auto& s : r.plan.segment_stats)
            os << "  " << s.from << "->" << s.to << ": " << s.vehicle_count << ", "
               << fmt("%.2f", s.avg_platoon_size) << "\n";
    }
    return os.str();
}

// --- Hill demonstration -----------------------------------------------------

Route default_hill_route() {
    // 6 km: flat lead-in, a climb and descent of 24 m over 3.8 km, flat
    // run-out. The ~1.3 % grades are sized so the fuel-optimal profile dips
    // to the high 60s km/h at the crest and the descent returns that speed
    // for free without touching the 90 km/h limit.
    std::vector<AltitudeSample> alt = {
        {0.0, 20.0}, {1000.0, 20.0}, {2900.0, 44.0}, {4800.0, 20.0}, {6000.0, 20.0}};
    return make_route(6000.0, std::move(alt), kmh_to_mps(90.0));
}

namespace {

HillArm run_hill_arm(const std::string& name, const Route& route, const VehicleParameters& p,
                     const Environment& env, const VelocityProfile& prof, std::size_t n,
                     bool vehicles_drive_alone, const SpacingConfig& spacing,
                     const ControlGains& gains, double w0, double w1) {
    HillArm arm;
    arm.name = name;
    StopCondition stop;
    stop.all_past_m = route.total_length() - 100.0;

    if (vehicles_drive_alone) {
        // Identical vehicles tracking the same profile alone produce the same
        // trajectory; simulate once and account for n of them.
        std::vector<VehicleParameters> params{p};
        auto st = initialize_on_policy(route, env, params, prof, spacing, 0.0, prof.v_at(0.0), 0.0);
        auto rec = simulate_platoon(st, spacing, gains, stop);
        arm.fuel_kg = static_cast<double>(n) * rec[0].fuel_between(w0, w1);
        arm.brake_energy_J = static_cast<double>(n) * rec[0].brake_energy_J;
        arm.follower_brake_energy_J = 0.0;
        for (std::size_t i = 0; i < n; ++i) arm.records.push_back(rec[0]);
        return arm;
    }

    std::vector<VehicleParameters> params(n, p);
    auto st = initialize_on_policy(route, env, params, prof, spacing, 0.0, prof.v_at(0.0), 0.0);
    arm.records = simulate_platoon(st, spacing, gains, stop);
    for (std::size_t i = 0; i < arm.records.size(); ++i) {
        arm.fuel_kg += arm.records[i].fuel_between(w0, w1);
        arm.brake_energy_J += arm.records[i].brake_energy_J;
        if (i > 0) arm.follower_brake_energy_J += arm.records[i].brake_energy_J;
    }
    return arm;
}

}  // namespace

HillDemoReport run_hill_demo(const Route& route, const VehicleParameters& p,
                             const Environment& env, const HillDemoConfig& cfg) {
    if (cfg.n_vehicles == 0) throw RangeError("hill demo: need at least one vehicle");
    if (!(cfg.v_min < cfg.v_bar && cfg.v_bar < cfg.v_max))
        throw RangeError("hill demo: need v_min < v_bar < v_max");
    double L = route.total_length();
    if (L < 2000.0) throw RangeError("hill demo: route shorter than 2 km");

    HillDemoReport rep;
    rep.route = route;
    rep.n_vehicles = cfg.n_vehicles;
    rep.window_begin = 300.0;
    rep.window_end = L - 300.0;

    SpacingConfig spacing;
    spacing.tau_ref = cfg.tau_ref;
    ControlGains gains;

    ClacProblem pb;
    pb.N = 1;
    pb.params = {p};
    pb.env = env;
    pb.route = route;
    pb.s0 = 0.0;
    pb.H = L;
    pb.tau_ref = cfg.tau_ref;
    pb.v_bar = cfg.v_bar;
    pb.v_min = cfg.v_min;
    pb.v_max = cfg.v_max;
    // Planned profiles never schedule the service brake; it stays a tracking
    // reserve. Otherwise the platoon solution rides the lead vehicle's coast
    // envelope downhill and quietly puts the drag-reduced followers on their
    // brakes.
    pb.allow_service_brake = false;
    rep.solo_profile = solve_clac(pb).profile;

    ClacProblem pbn = pb;
    pbn.N = cfg.n_vehicles;
    pbn.params.assign(cfg.n_vehicles, p);
    rep.cooperative_profile = solve_clac(pbn).profile;

    VelocityProfile flat_ref = VelocityProfile::constant(cfg.v_bar, -10000.0, L + 10000.0);

    rep.solo = run_hill_arm("solo look-ahead", route, p, env, rep.solo_profile, cfg.n_vehicles,
                            true, spacing, gains, rep.window_begin, rep.window_end);
    rep.gap_keeping = run_hill_arm("gap keeping", route, p, env, flat_ref, cfg.n_vehicles, false,
                                   spacing, gains, rep.window_begin, rep.window_end);
    rep.cooperative =
        run_hill_arm("cooperative look-ahead", route, p, env, rep.cooperative_profile,
                     cfg.n_vehicles, false, spacing, gains, rep.window_begin, rep.window_end);

    rep.coop_vs_solo_percent = 100.0 * (1.0 - rep.cooperative.fuel_kg / rep.solo.fuel_kg);
    rep.coop_vs_gap_percent = 100.0 * (1.0 - rep.cooperative.fuel_kg / rep.gap_keeping.fuel_kg);

    const auto& lead = rep.cooperative.records.front();
    double v_min_seen = cfg.v_max;
    for (std::size_t k = 0; k < lead.s.size(); ++k)
        if (lead.s[k] >= rep.window_begin && lead.s[k] <= rep.window_end)
            v_min_seen = std::min(v_min_seen, lead.v[k]);
    rep.min_coop_speed_mps = v_min_seen;
    return rep;
}

// --- Plot-ready columnar exports ---------------------------------------------

std::string drag_curve_text(const VehicleParameters& p, double tau_max, double step) {
    if (tau_max < 0.0 || step <= 0.0) throw RangeError("drag curve: need tau_max >= 0, step > 0");
    std::ostringstream os;
    os << "# tau_s cd\n";
    int n = static_cast<int>(std::floor(tau_max / step + 1e-9));
    for (int k = 0; k <= n; ++k) {
        double tau = static_cast<double>(k) * step;
        os << fmt("%.3f", tau) << " " << fmt("%.9f", drag_coefficient(p, tau)) << "\n";
    }
    return os.str();
}

std::string gap_curves_text(const CoordinationPlan& plan) {
    std::ostringstream os;
    os << "# vehicle_id leader_id s_m gap_s\n";
    for (const auto& vp : plan.vehicles) {
        if (!vp.leader_id) continue;
        for (const auto& [s, gap] : vp.gap_curve)
            os << vp.vehicle_id << " " << *vp.leader_id << " " << fmt("%.1f", s) << " "
               << fmt("%.3f", gap) << "\n";
    }
    return os.str();
}

std::string hill_panels_text(const Route& route, const std::vector<TrajectoryRecord>& records) {
    std::ostringstream os;
    os << "# t_s altitude_m";
    for (std::size_t i = 0; i < records.size(); ++i) os << " v" << i << "_mps";
    for (std::size_t i = 1; i < records.size(); ++i) os << " gap" << i << "_m";
    for (std::size_t i = 0; i < records.size(); ++i) os << " P" << i << "_W";
    os << "\n";
    if (records.empty() || records.front().t.empty()) return os.str();

    // All records come from one synchronous simulation and share the time
    // base; altitude is sampled at the lead vehicle's position.
    const auto& lead = records.front();
    for (std::size_t k = 0; k < lead.t.size(); ++k) {
        os << fmt("%.1f", lead.t[k]) << " "
           << fmt("%.2f", route.altitude_at(std::clamp(lead.s[k], 0.0, route.total_length())));
        for (const auto& r : records) os << " " << fmt("%.3f", r.v[k]);
        for (std::size_t i = 1; i < records.size(); ++i)
            os << " " << fmt("%.2f", records[i - 1].s[k] - records[i].s[k]);
        for (const auto& r : records) os << " " << fmt("%.0f", r.F_e[k] * r.v[k]);
        os << "\n";
    }
    return os.str();
}

// --- Bundled case-study inputs ----------------------------------------------

std::vector<TransportAssignment> gen_case_study_assignments(const RoadNetwork& net,
                                                            std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto uni = [&](double a, double b) {
        return a + (b - a) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    };

    const double v_nom = kmh_to_mps(80.0);
    const double v_cap = kmh_to_mps(90.0);
    const double slack_s = 300.0;  // tight line-haul schedules: 5 min late is late

    std::vector<TransportAssignment> out;
    int next_id = 1;
    auto add = [&](const std::vector<int>& nodes, double start) {
        TransportAssignment a;
        a.vehicle_id = next_id++;
        a.route_nodes = nodes;
        a.route = net.resolve_route(nodes);
        a.start_time_s = start;
        a.v_nom = v_nom;
        a.v_cap = v_cap;
        a.deadline_s = start + a.route.total_length() / v_nom + slack_s;
        a.validate();
        out.push_back(std::move(a));
    };

    // Three showcase transports: a long-haul convoy leader, a same-direction
    // vehicle that catches it on the trunk, and a third joining from a
    // different origin.
    add({2, 6, 3, 5, 7, 8, 10, 17, 12, 13, 15}, 0.0);
    add({3, 5, 7, 8, 10}, 4500.0);
    add({1, 5, 7, 8, 10}, 3100.0);

    // Weighted origin/destination demand over shortest routes. The corridor
    // bias is mild on purpose: no single relation is busy enough to line up
    // whole same-route convoys inside the catch-up horizon, so most pairings
    // happen between routes that join at the trunk.
    struct Demand {
        int weight;
        std::vector<int> nodes;
    };
    static const std::vector<Demand> kDemand = {
        // to 10
        {6, {3, 5, 7, 8, 10}},
        {5, {6, 3, 5, 7, 8, 10}},
        {4, {2, 6, 3, 5, 7, 8, 10}},
        {4, {1, 5, 7, 8, 10}},
        {3, {4, 3, 5, 7, 8, 10}},
        {2, {16, 2, 6, 3, 5, 7, 8, 10}},
        // to 15
        {5, {3, 5, 7, 8, 10, 17, 12, 13, 15}},
        {4, {6, 3, 5, 7, 8, 10, 17, 12, 13, 15}},
        {4, {2, 6, 3, 5, 7, 8, 10, 17, 12, 13, 15}},
        {3, {1, 5, 7, 8, 10, 17, 12, 13, 15}},
        {3, {4, 3, 5, 7, 8, 10, 17, 12, 13, 15}},
        {2, {16, 2, 6, 3, 5, 7, 8, 10, 17, 12, 13, 15}},
        // to 9
        {4, {3, 5, 7, 8, 10, 17, 12, 13, 9}},
        {4, {6, 3, 5, 7, 8, 10, 17, 12, 13, 9}},
        {3, {2, 6, 3, 5, 7, 8, 10, 17, 12, 13, 9}},
        {3, {1, 5, 7, 8, 10, 17, 12, 13, 9}},
        {2, {4, 3, 5, 7, 8, 10, 17, 12, 13, 9}},
        {2, {16, 2, 6, 3, 5, 7, 8, 10, 17, 12, 13, 9}},
        // to 11
        {4, {3, 5, 7, 8, 10, 17, 12, 13, 9, 11}},
        {3, {6, 3, 5, 7, 8, 10, 17, 12, 13, 9, 11}},
        {3, {2, 6, 3, 5, 7, 8, 10, 17, 12, 13, 9, 11}},
        {2, {1, 5, 7, 8, 10, 17, 12, 13, 9, 11}},
        {2, {4, 3, 5, 7, 8, 10, 17, 12, 13, 9, 11}},
        {2, {16, 2, 6, 3, 5, 7, 8, 10, 17, 12, 13, 9, 11}},
        // to 14
        {3, {3, 5, 7, 8, 10, 17, 12, 13, 15, 14}},
        {3, {6, 3, 5, 7, 8, 10, 17, 12, 13, 15, 14}},
        {2, {2, 6, 3, 5, 7, 8, 10, 17, 12, 13, 15, 14}},
        {2, {1, 5, 7, 8, 10, 17, 12, 13, 15, 14}},
        {1, {4, 3, 5, 7, 8, 10, 17, 12, 13, 15, 14}},
        {1, {16, 2, 6, 3, 5, 7, 8, 10, 17, 12, 13, 15, 14}},
    };
    int total_w = 0;
    for (const auto& d : kDemand) total_w += d.weight;

    while (next_id <= 200) {
        int pick = static_cast<int>(rng() % static_cast<std::uint64_t>(total_w));
        const Demand* chosen = nullptr;
        for (const auto& d : kDemand) {
            pick -= d.weight;
            if (pick < 0) {
                chosen = &d;
                break;
            }
        }
        add(chosen->nodes, std::floor(uni(0.0, 7200.0)));
    }
    return out;
}

}  // namespace platoon
