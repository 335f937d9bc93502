#include "platoon/fleet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "platoon/errors.hpp"
#include "platoon/units.hpp"

namespace platoon {

namespace {

// Solo fuel flow at constant speed under the fleet-layer abstraction: drag
// work plus idle burn; rolling and grade cancel against the baseline.
double phi_solo(const VehicleParameters& p, const Environment& env, double v) {
    return 0.5 * p.p1 * p.cd0 * env.rho * p.A * v * v * v + p.p0;
}

// A coordination follower's share of the platoon flow: reduced-drag work
// plus its own idle burn.
double phi_follower(const VehicleParameters& p, const Environment& env, double tau_ref,
                    double v) {
    return 0.5 * p.p1 * drag_coefficient(p, tau_ref) * env.rho * p.A * v * v * v + p.p0;
}

double solo_route_fuel(const VehicleParameters& p, const Environment& env,
                       const TransportAssignment& a) {
    return phi_solo(p, env, a.v_nom) * a.route.total_length() / a.v_nom;
}

struct FollowerLegs {
    double merge_s = 0.0;
    double split_s = 0.0;
    double v_catch = 0.0;
    double v_tail = 0.0;  // 0 when there is no tail leg
    double fuel_kg = 0.0; // follower only, full route
};

double follower_plan_fuel(const VehicleParameters& p, const Environment& env, double tau_ref,
                          const TransportAssignment& f, const FollowerLegs& legs,
                          double v_leader) {
    double fuel = phi_solo(p, env, legs.v_catch) * legs.merge_s / legs.v_catch;
    fuel += phi_follower(p, env, tau_ref, v_leader) * (legs.split_s - legs.merge_s) / v_leader;
    double tail = f.route.total_length() - legs.split_s;
    if (tail > 1e-9) fuel += phi_solo(p, env, legs.v_tail) * tail / legs.v_tail;
    return fuel;
}

}  // namespace

void TransportAssignment::validate() const {
    if (!(v_nom > 0) || !(v_cap > 0)) throw RangeError("speeds must be positive");
    if (v_nom > v_cap + 1e-9)
        throw RangeError("vehicle " + std::to_string(vehicle_id) + ": v_nom exceeds v_cap");
    if (route.total_length() <= 0)
        throw RangeError("vehicle " + std::to_string(vehicle_id) + ": empty route");
    if (start_time_s + route.total_length() / v_cap > deadline_s + 1e-6)
        throw RangeError("vehicle " + std::to_string(vehicle_id) +
                         ": deadline unreachable even at v_cap");
}

std::vector<TransportAssignment> assignments_from_json_text(const std::string& text,
                                                            const RoadNetwork& net) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("assignments JSON: ") + e.what());
    }
    if (!doc.is_array()) throw ParseError("assignments file must be a JSON array");
    std::vector<TransportAssignment> out;
    std::set<int> seen;
    for (const auto& item : doc) {
        TransportAssignment a;
        try {
            a.vehicle_id = item.at("vehicle_id").get<int>();
            a.route_nodes = item.at("route_nodes").get<std::vector<int>>();
            a.start_time_s = item.at("start_time_s").get<double>();
            a.deadline_s = item.at("deadline_s").get<double>();
            a.v_nom = item.at("v_nom_mps").get<double>();
            a.v_cap = item.at("v_cap_mps").get<double>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("assignment entry: ") + e.what());
        }
        if (!seen.insert(a.vehicle_id).second)
            throw ParseError("duplicate vehicle_id " + std::to_string(a.vehicle_id));
        a.route = net.resolve_route(a.route_nodes);
        a.validate();
        out.push_back(std::move(a));
    }
    return out;
}

std::vector<TransportAssignment> load_assignments(const std::string& path,
                                                  const RoadNetwork& net) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open assignments file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return assignments_from_json_text(ss.str(), net);
}

std::string assignments_to_json_text(const std::vector<TransportAssignment>& assignments) {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& a : assignments) {
        doc.push_back({{"vehicle_id", a.vehicle_id},
                       {"route_nodes", a.route_nodes},
                       {"start_time_s", a.start_time_s},
                       {"deadline_s", a.deadline_s},
                       {"v_nom_mps", a.v_nom},
                       {"v_cap_mps", a.v_cap}});
    }
    return doc.dump(2) + "\n";
}

AverageFuelFlows average_fuel_flows(const VehicleParameters& p, const Environment& env,
                                    double tau_ref, double v1, double v2, double v_platoon) {
    if (!(v1 > 0 && v2 > 0 && v_platoon > 0)) throw RangeError("speeds must be positive");
    AverageFuelFlows f;
    f.phi_1 = phi_solo(p, env, v1);
    f.phi_2 = phi_solo(p, env, v2);
    f.phi_platoon = 0.5 * p.p1 * (p.cd0 + drag_coefficient(p, tau_ref)) * env.rho * p.A *
                        v_platoon * v_platoon * v_platoon +
                    2.0 * p.p0;
    return f;
}

double catchup_merge_point(double s1_0, double s2_0, double v1, double v2) {
    if (std::abs(v2 - v1) < 1e-12)
        throw NoMergeError("equal speeds never meet");
    double t_meet = (s1_0 - s2_0) / (v2 - v1);
    if (t_meet < 0)
        throw NoMergeError("trajectories diverge: the faster vehicle is ahead");
    return (v2 * s1_0 - v1 * s2_0) / (v2 - v1);
}

std::optional<PairwisePlan> opportunistic_pair_plan(const TransportAssignment& leader,
                                                    const TransportAssignment& follower,
                                                    const VehicleParameters& p,
                                                    const Environment& env, double tau_ref,
                                                    const PairPlanConfig& cfg) {
    if (leader.vehicle_id == follower.vehicle_id) return std::nullopt;
    auto overlap = common_suffix_overlap(leader.route, follower.route);
    if (!overlap) return std::nullopt;

    const double v_l = leader.v_nom;  // the coordination leader never adapts
    const double delta = overlap->b_merge_offset - overlap->a_merge_offset;
    const double split_f = overlap->b_merge_offset + overlap->length;
    const double len_f = follower.route.total_length();
    // Virtual leader position in follower coordinates at the follower's start.
    const double s_l0 = delta + (follower.start_time_s - leader.start_time_s) * v_l;

    const double indep = solo_route_fuel(p, env, leader) + solo_route_fuel(p, env, follower);

    std::optional<FollowerLegs> best;
    auto consider = [&](double v_c) {
        if (v_c < cfg.v_floor - 1e-9 || v_c > follower.v_cap + 1e-9) return;
        if (std::abs(v_c - v_l) < 1e-9) return;
        double s_m;
        try {
            s_m = catchup_merge_point(s_l0, 0.0, v_l, v_c);
        } catch (const NoMergeError&) {
            return;
        }
        if (s_m < overlap->b_merge_offset - 1e-6 || s_m > split_f + 1e-6) return;
        s_m = std::clamp(s_m, overlap->b_merge_offset, split_f);
        double t_split = follower.start_time_s + s_m / v_c + (split_f - s_m) / v_l;
        FollowerLegs legs;
        legs.merge_s = s_m;
        legs.split_s = split_f;
        legs.v_catch = v_c;
        double tail = len_f - split_f;
        if (tail > 1e-9) {
            double slack = follower.deadline_s - t_split;
            if (slack <= 0) return;
            double needed = tail / slack;
            legs.v_tail = std::max(needed, follower.v_nom);
            if (legs.v_tail > follower.v_cap + 1e-9) return;
        } else if (t_split > follower.deadline_s + 1e-6) {
            return;
        }
        legs.fuel_kg = follower_plan_fuel(p, env, tau_ref, follower, legs, v_l);
        if (!best || legs.fuel_kg < best->fuel_kg) best = legs;
    };

    for (double v_c = cfg.v_floor; v_c < follower.v_cap + cfg.speed_step / 2;
         v_c += cfg.speed_step)
        consider(std::min(v_c, follower.v_cap));
    consider(follower.v_cap);
    consider(follower.v_nom);
    if (!best) return std::nullopt;

    double plan_fuel = solo_route_fuel(p, env, leader) + best->fuel_kg;
    if (!(plan_fuel < indep)) return std::nullopt;

    PairwisePlan plan;
    plan.leader_id = leader.vehicle_id;
    plan.follower_id = follower.vehicle_id;
    plan.merge_s = best->merge_s;
    plan.split_s = best->split_s;
    plan.align_offset = delta;
    plan.leader_merge_s = best->merge_s - delta;
    plan.leader_split_s = best->split_s - delta;
    plan.plan_fuel_kg = plan_fuel;
    plan.independent_fuel_kg = indep;
    plan.saving_kg = indep - plan_fuel;
    if (best->merge_s > 1e-9)
        plan.follower_segments.push_back({0.0, best->merge_s, best->v_catch});
    plan.follower_segments.push_back({best->merge_s, best->split_s, v_l});
    if (len_f - best->split_s > 1e-9)
        plan.follower_segments.push_back({best->split_s, len_f, best->v_tail});
    return plan;
}

SavingsGraph build_savings_graph(const std::vector<TransportAssignment>& assignments,
                                 const VehicleParameters& p, const Environment& env,
                                 double tau_ref, const PairPlanConfig& cfg) {
    SavingsGraph g;
    for (const auto& a : assignments) g.vehicles.push_back(a.vehicle_id);
    std::sort(g.vehicles.begin(), g.vehicles.end());
    for (const auto& lead : assignments) {
        for (const auto& fol : assignments) {
            if (lead.vehicle_id == fol.vehicle_id) continue;
            auto plan = opportunistic_pair_plan(lead, fol, p, env, tau_ref, cfg);
            if (plan && plan->saving_kg > 0) g.edges.push_back(std::move(*plan));
        }
    }
    return g;
}

namespace {

struct GreedyIndex {
    std::vector<int> ids;                       // ascending
    std::map<int, std::size_t> pos;             // id -> index
    // edges[f_idx] = (leader_idx, saving), sorted by leader for determinism
    std::vector<std::vector<std::pair<std::size_t, double>>> edges;

    explicit GreedyIndex(const SavingsGraph& g) : ids(g.vehicles) {
        std::sort(ids.begin(), ids.end());
        for (std::size_t i = 0; i < ids.size(); ++i) pos[ids[i]] = i;
        edges.resize(ids.size());
        for (const auto& e : g.edges)
            edges[pos.at(e.follower_id)].push_back({pos.at(e.leader_id), e.saving_kg});
        for (auto& v : edges) std::sort(v.begin(), v.end());
    }

    double total(const std::vector<char>& is_leader) const {
        double sum = 0.0;
        for (std::size_t f = 0; f < ids.size(); ++f) {
            if (is_leader[f]) continue;
            double best = 0.0;
            for (const auto& [l, w] : edges[f])
                if (is_leader[l] && w > best) best = w;
            sum += best;
        }
        return sum;
    }
};

}  // namespace

double leader_set_saving(const SavingsGraph& graph, const std::vector<int>& leaders) {
    GreedyIndex ix(graph);
    std::vector<char> is_leader(ix.ids.size(), 0);
    for (int id : leaders) {
        auto it = ix.pos.find(id);
        if (it == ix.pos.end()) throw RangeError("unknown vehicle id in leader set");
        is_leader[it->second] = 1;
    }
    return ix.total(is_leader);
}

CoordinationPlan select_leaders_greedy(const SavingsGraph& graph, GreedyInit init) {
    GreedyIndex ix(graph);
    const std::size_t n = ix.ids.size();
    std::vector<char> is_leader(n, init == GreedyInit::all_leaders ? 1 : 0);
    double total = ix.total(is_leader);

    // One steepest strictly-improving move: a single role flip, or an
    // exchange of one leader for one non-leader. Ties keep the earliest
    // candidate, so the search is deterministic. Returns false when stuck.
    auto strict_move = [&]() {
        double best_gain = 1e-12;
        std::size_t flip_v = n, out_v = n, in_v = n;
        for (std::size_t v = 0; v < n; ++v) {
            is_leader[v] ^= 1;
            double gain = ix.total(is_leader) - total;
            is_leader[v] ^= 1;
            if (gain > best_gain) {
                best_gain = gain;
                flip_v = v;
            }
        }
        for (std::size_t out = 0; out < n; ++out) {
            if (!is_leader[out]) continue;
            for (std::size_t in = 0; in < n; ++in) {
                if (is_leader[in]) continue;
                is_leader[out] = 0;
                is_leader[in] = 1;
                double gain = ix.total(is_leader) - total;
                is_leader[out] = 1;
                is_leader[in] = 0;
                if (gain > best_gain) {
                    best_gain = gain;
                    flip_v = n;
                    out_v = out;
                    in_v = in;
                }
            }
        }
        if (flip_v != n) {
            is_leader[flip_v] ^= 1;
        } else if (out_v != n) {
            is_leader[out_v] = 0;
            is_leader[in_v] = 1;
        } else {
            return false;
        }
        total += best_gain;
        return true;
    };

    CoordinationPlan plan;
    for (;;) {
        if (strict_move()) {
            plan.greedy_saving_trace.push_back(total);
            continue;
        }
        // Stuck. A common trap re-roles the current hub as a follower of a
        // fresh leader, which no single move reaches. Probe each zero-gain
        // leader addition; keep it only if strict moves then make progress.
        bool rescued = false;
        for (std::size_t v = 0; v < n && !rescued; ++v) {
            if (is_leader[v]) continue;
            is_leader[v] = 1;
            if (ix.total(is_leader) < total - 1e-12) {
                is_leader[v] = 0;
                continue;
            }
            std::vector<char> snapshot = is_leader;
            double before = total;
            std::vector<double> probe_trace;
            while (strict_move()) probe_trace.push_back(total);
            if (total > before + 1e-9) {
                plan.greedy_saving_trace.insert(plan.greedy_saving_trace.end(),
                                                probe_trace.begin(), probe_trace.end());
                rescued = true;
            } else {
                snapshot[v] = 0;
                is_leader = snapshot;
                total = before;
            }
        }
        if (!rescued) break;
    }

    for (std::size_t v = 0; v < n; ++v)
        if (is_leader[v]) plan.leaders.push_back(ix.ids[v]);
    for (std::size_t f = 0; f < n; ++f) {
        if (is_leader[f]) continue;
        double best = 0.0;
        std::size_t best_l = n;
        for (const auto& [l, w] : ix.edges[f])
            if (is_leader[l] && w > best) {
                best = w;
                best_l = l;
            }
        if (best_l != n) plan.follower_of[ix.ids[f]] = ix.ids[best_l];
    }
    plan.graph_saving_kg = total;
    return plan;
}

double independent_fleet_fuel(const std::vector<TransportAssignment>& assignments,
                              const VehicleParameters& p, const Environment& env) {
    double sum = 0.0;
    for (const auto& a : assignments) sum += solo_route_fuel(p, env, a);
    return sum;
}

double all_platooned_fuel_bound(const std::vector<TransportAssignment>& assignments,
                                const VehicleParameters& p, const Environment& env,
                                double tau_ref) {
    // Grouping: identical node sequences travel as one full-route platoon;
    // the earliest starter leads, everyone else drafts the whole way.
    std::map<std::vector<int>, std::vector<const TransportAssignment*>> groups;
    for (const auto& a : assignments) groups[a.route_nodes].push_back(&a);
    double sum = 0.0;
    for (auto& [nodes, members] : groups) {
        std::sort(members.begin(), members.end(), [](const auto* a, const auto* b) {
            return a->start_time_s != b->start_time_s ? a->start_time_s < b->start_time_s
                                                      : a->vehicle_id < b->vehicle_id;
        });
        for (std::size_t i = 0; i < members.size(); ++i) {
            const TransportAssignment& a = *members[i];
            double rate = (i == 0) ? phi_solo(p, env, a.v_nom)
                                   : phi_follower(p, env, tau_ref, a.v_nom);
            sum += rate * a.route.total_length() / a.v_nom;
        }
    }
    return sum;
}

CoordinationPlan assemble_plan(CoordinationPlan skeleton,
                               const std::vector<TransportAssignment>& assignments,
                               const SavingsGraph& graph, const VehicleParameters& p,
                               const Environment& env) {
    std::map<int, const TransportAssignment*> by_id;
    for (const auto& a : assignments) by_id[a.vehicle_id] = &a;
    std::map<std::pair<int, int>, const PairwisePlan*> edge_of;  // (follower, leader)
    for (const auto& e : graph.edges) edge_of[{e.follower_id, e.leader_id}] = &e;

    CoordinationPlan plan = std::move(skeleton);
    plan.vehicles.clear();
    plan.fuel_plan_kg = 0.0;
    plan.fuel_independent_kg = 0.0;

    // Re-validate follower plans; drop any that no longer hold together.
    std::vector<int> reverted;
    for (const auto& [fid, lid] : plan.follower_of) {
        auto e = edge_of.find({fid, lid});
        const TransportAssignment& f = *by_id.at(fid);
        bool ok = e != edge_of.end();
        if (ok) {
            double t = f.start_time_s;
            for (const auto& seg : e->second->follower_segments) {
                if (seg.v > f.v_cap + 1e-6) ok = false;
                t += (seg.s_end - seg.s_begin) / seg.v;
            }
            if (t > f.deadline_s + 1e-6) ok = false;
        }
        if (!ok) reverted.push_back(fid);
    }
    for (int fid : reverted) plan.follower_of.erase(fid);

    for (const auto& a : assignments) {
        VehiclePlan vp;
        vp.vehicle_id = a.vehicle_id;
        vp.fuel_independent_kg = solo_route_fuel(p, env, a);
        auto fit = plan.follower_of.find(a.vehicle_id);
        if (fit == plan.follower_of.end()) {
            vp.segments.push_back({0.0, a.route.total_length(), a.v_nom});
            vp.fuel_plan_kg = vp.fuel_independent_kg;
        } else {
            const PairwisePlan& e = *edge_of.at({a.vehicle_id, fit->second});
            const TransportAssignment& lead = *by_id.at(fit->second);
            vp.leader_id = fit->second;
            vp.segments = e.follower_segments;
            vp.fuel_plan_kg = e.plan_fuel_kg - solo_route_fuel(p, env, lead);
            // Time gap to the leader along the follower's own route.
            double t = a.start_time_s;
            auto leader_time = [&](double s) {
                return lead.start_time_s + (s - e.align_offset) / lead.v_nom;
            };
            vp.gap_curve.emplace_back(0.0, t - leader_time(0.0));
            double s = 0.0;
            for (const auto& seg : e.follower_segments) {
                t += (seg.s_end - seg.s_begin) / seg.v;
                s = seg.s_end;
                vp.gap_curve.emplace_back(s, t - leader_time(s));
            }
        }
        plan.fuel_plan_kg += vp.fuel_plan_kg;
        plan.fuel_independent_kg += vp.fuel_independent_kg;
        plan.vehicles.push_back(std::move(vp));
    }
    std::sort(plan.vehicles.begin(), plan.vehicles.end(),
              [](const VehiclePlan& a, const VehiclePlan& b) {
                  return a.vehicle_id < b.vehicle_id;
              });

    plan.saving_kg = plan.fuel_independent_kg - plan.fuel_plan_kg;
    plan.saving_percent =
        plan.fuel_independent_kg > 0 ? 100.0 * plan.saving_kg / plan.fuel_independent_kg : 0.0;
    plan.saving_liters = fuel_kg_to_liters(plan.saving_kg);
    plan.co2_saving_kg = fuel_liters_to_co2_kg(plan.saving_liters);

    // Per-segment traffic and platoon-size statistics. A follower counts as
    // platooned on a segment when the segment midpoint lies in its platoon
    // leg; groups absorb followers into their leader's unit.
    std::map<std::pair<int, int>, int> count;
    std::map<std::pair<int, int>, int> absorbed;
    for (const auto& a : assignments) {
        auto fit = plan.follower_of.find(a.vehicle_id);
        const PairwisePlan* e =
            fit == plan.follower_of.end() ? nullptr : edge_of.at({a.vehicle_id, fit->second});
        for (std::size_t k = 0; k + 1 < a.route.nodes().size(); ++k) {
            std::pair<int, int> key{a.route.nodes()[k], a.route.nodes()[k + 1]};
            ++count[key];
            if (e) {
                double mid = 0.5 * (a.route.node_offset(k) + a.route.node_offset(k + 1));
                if (mid >= e->merge_s - 1e-9 && mid <= e->split_s + 1e-9) ++absorbed[key];
            }
        }
    }
    for (const auto& [key, n] : count) {
        SegmentStats st;
        st.from = key.first;
        st.to = key.second;
        st.vehicle_count = n;
        int units = n - (absorbed.count(key) ? absorbed.at(key) : 0);
        st.avg_platoon_size = units > 0 ? static_cast<double>(n) / units : 0.0;
        plan.segment_stats.push_back(st);
    }
    return plan;
}

}  // namespace platoon
