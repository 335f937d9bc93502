#include "platoon/merge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "platoon/clac.hpp"
#include "platoon/errors.hpp"

namespace platoon {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kNone = static_cast<std::size_t>(-1);

std::vector<double> make_levels(double v_anchor, double v_min, double v_max, double dv) {
    std::vector<double> levels;
    int down = static_cast<int>(std::floor((v_anchor - v_min) / dv + 1e-9));
    int up = static_cast<int>(std::floor((v_max - v_anchor) / dv + 1e-9));
    for (int k = -down; k <= up; ++k) levels.push_back(v_anchor + k * dv);
    return levels;
}

std::size_t nearest_level(const std::vector<double>& levels, double v) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < levels.size(); ++j)
        if (std::abs(levels[j] - v) < std::abs(levels[best] - v)) best = j;
    return best;
}

// Time prices swept to trace each leg's frontier: zero plus log-spaced values
// of both signs. Negative prices reward slowness, covering legs that must be
// driven slower than their free fuel optimum.
std::vector<double> lambda_grid(const MergeGrid& g) {
    std::vector<double> out{0.0};
    int n = std::max(1, g.lambda_count);
    for (int i = 0; i < n; ++i) {
        double f = (n == 1) ? 1.0 : static_cast<double>(i) / (n - 1);
        double lam = g.lambda_min * std::pow(g.lambda_max / g.lambda_min, f);
        out.push_back(lam);
        out.push_back(-lam);
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Per-leg cell costs, evaluated once; the price sweeps are then arithmetic
// only. fuel is +infinity where the transition breaks the power limit or a
// boundary speed cap.
struct CellTable {
    std::size_t K = 0;  // stages; 0 for a zero-length leg
    double ds = 0.0;
    std::vector<double> levels;
    std::vector<double> fuel;  // K*L*L
    std::vector<double> dt;    // L*L

    double cell_fuel(std::size_t k, std::size_t j, std::size_t jn) const {
        return fuel[(k * levels.size() + j) * levels.size() + jn];
    }
    double cell_dt(std::size_t j, std::size_t jn) const {
        return dt[j * levels.size() + jn];
    }
};

ClacProblem leg_view(const std::vector<VehicleParameters>& params, const Environment& env,
                     const Route& route, double tau_ref, double v_anchor, double v_min,
                     double v_max, const MergeGrid& grid) {
    ClacProblem pb;
    pb.N = params.size();
    pb.params = params;
    pb.env = env;
    pb.route = route;
    pb.s0 = 0.0;
    pb.H = route.total_length();
    pb.tau_ref = tau_ref;
    pb.v_bar = v_anchor;
    pb.v_min = v_min;
    pb.v_max = v_max;
    pb.grid.ds = grid.ds;
    pb.grid.dv = grid.dv;
    return pb;
}

CellTable build_table(const std::vector<VehicleParameters>& params, const Environment& env,
                      const Route& route, double tau_ref, double v_anchor, double v_min,
                      double v_max, const MergeGrid& grid) {
    CellTable t;
    t.levels = make_levels(v_anchor, v_min, v_max, grid.dv);
    const std::size_t L = t.levels.size();
    const double length = route.total_length();
    if (length < 1e-6) return t;  // zero-length leg

    ClacProblem pb = leg_view(params, env, route, tau_ref, v_anchor, v_min, v_max, grid);
    t.K = clac_stage_count(pb);
    t.ds = clac_cell_length(pb);

    std::vector<char> ok((t.K + 1) * L, 0);
    for (std::size_t k = 0; k <= t.K; ++k) {
        double s = std::min(static_cast<double>(k) * t.ds, length);
        double cap = std::min(v_max, route.speed_limit_at(s)) + 1e-9;
        for (std::size_t j = 0; j < L; ++j) ok[k * L + j] = t.levels[j] <= cap;
    }

    t.dt.resize(L * L);
    for (std::size_t j = 0; j < L; ++j)
        for (std::size_t jn = 0; jn < L; ++jn)
            t.dt[j * L + jn] = t.ds / (0.5 * (t.levels[j] + t.levels[jn]));

    t.fuel.assign(t.K * L * L, kInf);
    for (std::size_t k = 0; k < t.K; ++k) {
        double s_k = static_cast<double>(k) * t.ds;
        for (std::size_t j = 0; j < L; ++j) {
            if (!ok[k * L + j]) continue;
            for (std::size_t jn = 0; jn < L; ++jn) {
                if (!ok[(k + 1) * L + jn]) continue;
                t.fuel[(k * L + j) * L + jn] = stage_cost(pb, s_k, t.levels[j], t.levels[jn]);
            }
        }
    }
    return t;
}

struct SweepOut {
    std::vector<double> value;  // fuel + lambda*time per free-boundary level
    std::vector<double> fuel;
    std::vector<double> time;
};

// Entry level pinned; values at the exit boundary for every level. prev, when
// given, receives K*L links: prev[k*L + jn] = source level at boundary k that
// optimally reaches jn at boundary k+1.
SweepOut sweep_forward(const CellTable& t, double lambda, std::size_t j_in,
                       std::vector<std::size_t>* prev) {
    const std::size_t L = t.levels.size();
    SweepOut out;
    out.value.assign(L, kInf);
    out.fuel.assign(L, 0.0);
    out.time.assign(L, 0.0);
    out.value[j_in] = 0.0;
    if (prev) prev->assign(t.K * L, kNone);
    std::vector<double> nval(L), nfu(L), nti(L);
    for (std::size_t k = 0; k < t.K; ++k) {
        std::fill(nval.begin(), nval.end(), kInf);
        for (std::size_t jn = 0; jn < L; ++jn) {
            for (std::size_t j = L; j-- > 0;) {  // ties keep the faster source
                if (out.value[j] == kInf) continue;
                double c = t.cell_fuel(k, j, jn);
                if (c == kInf) continue;
                double dt = t.cell_dt(j, jn);
                double cand = out.value[j] + (c + lambda * dt);
                if (cand < nval[jn]) {
                    nval[jn] = cand;
                    nfu[jn] = out.fuel[j] + c;
                    nti[jn] = out.time[j] + dt;
                    if (prev) (*prev)[k * L + jn] = j;
                }
            }
        }
        out.value.swap(nval);
        out.fuel.swap(nfu);
        out.time.swap(nti);
    }
    return out;
}

// Exit level pinned; values at the entry boundary for every level. next, when
// given, receives K*L links: next[k*L + j] = best exit level at boundary k+1.
SweepOut sweep_backward(const CellTable& t, double lambda, std::size_t j_out,
                        std::vector<std::size_t>* next) {
    const std::size_t L = t.levels.size();
    SweepOut out;
    out.value.assign(L, kInf);
    out.fuel.assign(L, 0.0);
    out.time.assign(L, 0.0);
    out.value[j_out] = 0.0;
    if (next) next->assign(t.K * L, kNone);
    std::vector<double> nval(L), nfu(L), nti(L);
    for (std::size_t k = t.K; k-- > 0;) {
        std::fill(nval.begin(), nval.end(), kInf);
        for (std::size_t j = 0; j < L; ++j) {
            for (std::size_t jn = L; jn-- > 0;) {  // ties keep the faster exit
                if (out.value[jn] == kInf) continue;
                double c = t.cell_fuel(k, j, jn);
                if (c == kInf) continue;
                double dt = t.cell_dt(j, jn);
                double cand = (c + lambda * dt) + out.value[jn];
                if (cand < nval[j]) {
                    nval[j] = cand;
                    nfu[j] = c + out.fuel[jn];
                    nti[j] = dt + out.time[jn];
                    if (next) (*next)[k * L + j] = jn;
                }
            }
        }
        out.value.swap(nval);
        out.fuel.swap(nfu);
        out.time.swap(nti);
    }
    return out;
}

VelocityProfile profile_from_path(const CellTable& t, const std::vector<std::size_t>& path) {
    VelocityProfile prof;
    for (std::size_t k = 0; k < path.size(); ++k)
        prof.push_knot(static_cast<double>(k) * t.ds, t.levels[path[k]]);
    return prof;
}

VelocityProfile extract_forward(const CellTable& t, double lambda, std::size_t j_in,
                                std::size_t j_target) {
    if (t.K == 0) {
        VelocityProfile prof;
        prof.push_knot(0.0, t.levels[j_target]);
        return prof;
    }
    const std::size_t L = t.levels.size();
    std::vector<std::size_t> prev;
    sweep_forward(t, lambda, j_in, &prev);
    std::vector<std::size_t> path(t.K + 1);
    path[t.K] = j_target;
    for (std::size_t k = t.K; k-- > 0;) path[k] = prev[k * L + path[k + 1]];
    return profile_from_path(t, path);
}

VelocityProfile extract_backward(const CellTable& t, double lambda, std::size_t j_out,
                                 std::size_t j_start) {
    const std::size_t L = t.levels.size();
    std::vector<std::size_t> next;
    sweep_backward(t, lambda, j_out, &next);
    std::vector<std::size_t> path(t.K + 1);
    path[0] = j_start;
    for (std::size_t k = 0; k < t.K; ++k) path[k + 1] = next[k * L + path[k]];
    return profile_from_path(t, path);
}

double cross(const LegFrontier::Point& o, const LegFrontier::Point& a,
             const LegFrontier::Point& b) {
    return (a.time_s - o.time_s) * (b.fuel_kg - o.fuel_kg) -
           (a.fuel_kg - o.fuel_kg) * (b.time_s - o.time_s);
}

LegFrontier finalize_frontier(std::vector<LegFrontier::Point> raw) {
    LegFrontier f;
    if (raw.empty()) return f;
    std::sort(raw.begin(), raw.end(), [](const auto& a, const auto& b) {
        return a.time_s != b.time_s ? a.time_s < b.time_s : a.fuel_kg < b.fuel_kg;
    });
    // Lower convex hull: any time between vertices is achievable by
    // time-sharing the two neighbouring plans, so interpolation is sound.
    for (const auto& p : raw) {
        if (!f.pts.empty() && p.time_s - f.pts.back().time_s < 1e-9) continue;
        while (f.pts.size() >= 2 &&
               cross(f.pts[f.pts.size() - 2], f.pts.back(), p) <= 0.0)
            f.pts.pop_back();
        f.pts.push_back(p);
    }
    return f;
}

}  // namespace

double LegFrontier::min_time() const { return pts.empty() ? kInf : pts.front().time_s; }
double LegFrontier::max_time() const { return pts.empty() ? -kInf : pts.back().time_s; }

double LegFrontier::fuel_at(double T) const {
    if (pts.empty()) return kInf;
    if (T < pts.front().time_s - 1e-9 || T > pts.back().time_s + 1e-9) return kInf;
    if (pts.size() == 1) return pts.front().fuel_kg;
    T = std::clamp(T, pts.front().time_s, pts.back().time_s);
    auto it = std::upper_bound(pts.begin(), pts.end(), T, [](double t, const Point& p) {
        return t < p.time_s;
    });
    if (it == pts.begin()) return pts.front().fuel_kg;
    if (it == pts.end()) return pts.back().fuel_kg;
    const Point& a = *(it - 1);
    const Point& b = *it;
    double w = (T - a.time_s) / (b.time_s - a.time_s);
    return a.fuel_kg + w * (b.fuel_kg - a.fuel_kg);
}

const LegFrontier::Point* LegFrontier::nearest(double T) const {
    if (pts.empty()) return nullptr;
    const Point* best = &pts.front();
    for (const auto& p : pts)
        if (std::abs(p.time_s - T) < std::abs(best->time_s - T)) best = &p;
    return best;
}

Route concat_routes(const Route& a, const Route& b) {
    if (a.segments().empty()) return b;
    if (b.segments().empty()) return a;
    std::vector<int> nodes = a.nodes();
    std::vector<RoadSegment> segs = a.segments();
    const std::vector<int>& bn = b.nodes();
    for (std::size_t i = 1; i < bn.size(); ++i) nodes.push_back(bn[i]);
    for (const RoadSegment& s : b.segments()) segs.push_back(s);
    return Route(std::move(nodes), std::move(segs));
}

void MergingProblem::validate() const {
    if (params.size() < 2) throw RangeError("merging needs at least two vehicles");
    if (pre_legs.size() != params.size() || v_start.size() != params.size() ||
        t_start.size() != params.size())
        throw RangeError("pre_legs, v_start, t_start must have one entry per vehicle");
    if (!(post_leg.total_length() > 0)) throw RangeError("post leg must have positive length");
    if (!(v_min > 0 && v_min < v_anchor && v_anchor < v_max))
        throw RangeError("need 0 < v_min < v_anchor < v_max");
    if (!(grid.ds > 0 && grid.dv > 0 && grid.lambda_count >= 1 && grid.lambda_min > 0 &&
          grid.lambda_min <= grid.lambda_max))
        throw RangeError("merge grid parameters out of range");
    for (double v : v_start)
        if (v < v_min - 1e-9 || v > v_max + 1e-9)
            throw RangeError("start speed outside [v_min, v_max]");
    if (v_final < v_min - 1e-9 || v_final > v_max + 1e-9)
        throw RangeError("final speed outside [v_min, v_max]");
    if (t_final <= *std::max_element(t_start.begin(), t_start.end()))
        throw RangeError("deadline precedes a start time");
    if (tau_ref < 0) throw RangeError("tau_ref must be non-negative");
}

struct MergeEvaluator::Impl {
    MergingProblem pb;
    std::vector<double> levels;
    std::vector<std::size_t> j_start;
    std::size_t j_final = 0;
    std::vector<CellTable> pre_tables;
    CellTable post_table;
    std::vector<std::vector<LegFrontier>> pre_front;  // [vehicle][junction level]
    std::vector<LegFrontier> post_front;              // [junction level]
    std::vector<LegFrontier> solo_front;              // [vehicle]
    double window_lo = kInf;
    double window_hi = -kInf;
    double no_merge = kInf;

    explicit Impl(const MergingProblem& problem) : pb(problem) {
        pb.validate();
        levels = make_levels(pb.v_anchor, pb.v_min, pb.v_max, pb.grid.dv);
        const std::size_t L = levels.size();
        const std::size_t n = pb.size();
        j_final = nearest_level(levels, pb.v_final);
        std::vector<double> lambdas = lambda_grid(pb.grid);

        std::vector<VehicleParameters> solo_platoon = pb.params;  // shared post leg
        post_table = build_table(solo_platoon, pb.env, pb.post_leg, pb.tau_ref, pb.v_anchor,
                                 pb.v_min, pb.v_max, pb.grid);
        std::vector<std::vector<LegFrontier::Point>> post_raw(L);
        for (double lam : lambdas) {
            SweepOut sw = sweep_backward(post_table, lam, j_final, nullptr);
            for (std::size_t j = 0; j < L; ++j)
                if (sw.value[j] != kInf) post_raw[j].push_back({sw.time[j], sw.fuel[j], lam});
        }
        post_front.resize(L);
        for (std::size_t j = 0; j < L; ++j) post_front[j] = finalize_frontier(post_raw[j]);

        pre_tables.resize(n);
        pre_front.assign(n, std::vector<LegFrontier>(L));
        solo_front.resize(n);
        j_start.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            j_start[i] = nearest_level(levels, pb.v_start[i]);
            std::vector<VehicleParameters> solo{pb.params[i]};
            pre_tables[i] = build_table(solo, pb.env, pb.pre_legs[i], pb.tau_ref, pb.v_anchor,
                                        pb.v_min, pb.v_max, pb.grid);
            std::vector<std::vector<LegFrontier::Point>> raw(L);
            if (pre_tables[i].K == 0) {
                raw[j_start[i]].push_back({0.0, 0.0, 0.0});
            } else {
                for (double lam : lambdas) {
                    SweepOut sw = sweep_forward(pre_tables[i], lam, j_start[i], nullptr);
                    for (std::size_t j = 0; j < L; ++j)
                        if (sw.value[j] != kInf)
                            raw[j].push_back({sw.time[j], sw.fuel[j], lam});
                }
            }
            for (std::size_t j = 0; j < L; ++j) pre_front[i][j] = finalize_frontier(raw[j]);

            CellTable full = build_table(solo, pb.env,
                                         concat_routes(pb.pre_legs[i], pb.post_leg), pb.tau_ref,
                                         pb.v_anchor, pb.v_min, pb.v_max, pb.grid);
            std::vector<LegFrontier::Point> full_raw;
            for (double lam : lambdas) {
                SweepOut sw = sweep_forward(full, lam, j_start[i], nullptr);
                if (sw.value[j_final] != kInf)
                    full_raw.push_back({sw.time[j_final], sw.fuel[j_final], lam});
            }
            solo_front[i] = finalize_frontier(full_raw);
        }

        // Feasible merge-time window from the per-leg time spans.
        double lo = -kInf, hi = kInf;
        for (std::size_t i = 0; i < n; ++i) {
            double tmin = kInf, tmax = -kInf;
            for (std::size_t j = 0; j < L; ++j) {
                if (pre_front[i][j].empty()) continue;
                tmin = std::min(tmin, pre_front[i][j].min_time());
                tmax = std::max(tmax, pre_front[i][j].max_time());
            }
            lo = std::max(lo, pb.t_start[i] + tmin);
            hi = std::min(hi, pb.t_start[i] + tmax);
        }
        double pmin = kInf, pmax = -kInf;
        for (std::size_t j = 0; j < L; ++j) {
            if (post_front[j].empty()) continue;
            pmin = std::min(pmin, post_front[j].min_time());
            pmax = std::max(pmax, post_front[j].max_time());
        }
        lo = std::max(lo, pb.t_final - pmax);
        hi = std::min(hi, pb.t_final - pmin);
        window_lo = lo;
        window_hi = hi;

        no_merge = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            no_merge += solo_front[i].fuel_at(pb.t_final - pb.t_start[i]);
            if (no_merge == kInf) break;
        }
    }

    double cost_at(double t_m, std::size_t* arg_level) const {
        double best = kInf;
        const std::size_t L = levels.size();
        for (std::size_t j = 0; j < L; ++j) {
            double c = post_front[j].fuel_at(pb.t_final - t_m);
            if (c == kInf) continue;
            for (std::size_t i = 0; i < pb.size() && c != kInf; ++i)
                c += pre_front[i][j].fuel_at(t_m - pb.t_start[i]);
            if (c < best) {
                best = c;
                if (arg_level) *arg_level = j;
            }
        }
        return best;
    }
};

MergeEvaluator::MergeEvaluator(const MergingProblem& pb) : impl_(new Impl(pb)) {}
MergeEvaluator::~MergeEvaluator() = default;
MergeEvaluator::MergeEvaluator(MergeEvaluator&&) noexcept = default;
MergeEvaluator& MergeEvaluator::operator=(MergeEvaluator&&) noexcept = default;

double MergeEvaluator::cost(double t_merge) const { return impl_->cost_at(t_merge, nullptr); }

std::pair<double, double> MergeEvaluator::merge_window() const {
    return {impl_->window_lo, impl_->window_hi};
}

double MergeEvaluator::no_merge_cost() const { return impl_->no_merge; }

MergingSolution MergeEvaluator::solution_at(double t_merge) const {
    const Impl& im = *impl_;
    std::size_t j_m = kNone;
    double c = im.cost_at(t_merge, &j_m);
    if (c == kInf)
        throw InfeasibleError("merge time " + std::to_string(t_merge) +
                              " s is outside every leg's reachable span");

    MergingSolution sol;
    sol.t_merge = t_merge;
    sol.v_merge = im.levels[j_m];
    sol.merge_fuel_kg = c;
    sol.no_merge_fuel_kg = im.no_merge;
    sol.merged = !(im.no_merge < c);
    sol.total_fuel_kg = std::min(c, im.no_merge);

    for (std::size_t i = 0; i < im.pb.size(); ++i) {
        const LegFrontier& f = im.pre_front[i][j_m];
        const LegFrontier::Point* p = f.nearest(t_merge - im.pb.t_start[i]);
        sol.pre_profiles.push_back(
            extract_forward(im.pre_tables[i], p ? p->lambda : 0.0, im.j_start[i], j_m));
    }
    const LegFrontier::Point* pp = im.post_front[j_m].nearest(im.pb.t_final - t_merge);
    sol.post_profile = extract_backward(im.post_table, pp ? pp->lambda : 0.0, im.j_final, j_m);
    return sol;
}

double total_merge_cost(const MergingProblem& pb, double t_merge) {
    return MergeEvaluator(pb).cost(t_merge);
}

SegmentPlan segment_fuel_optimal(const SegmentSpec& spec) {
    if (spec.params.empty()) throw RangeError("segment needs at least one vehicle");
    if (!(spec.v_min > 0 && spec.v_min < spec.v_anchor && spec.v_anchor < spec.v_max))
        throw RangeError("need 0 < v_min < v_anchor < v_max");
    if (!(spec.duration_s > 0)) throw RangeError("duration must be positive");
    if (spec.route.total_length() < 1e-6) throw RangeError("leg must have positive length");

    CellTable table = build_table(spec.params, spec.env, spec.route, spec.tau_ref,
                                  spec.v_anchor, spec.v_min, spec.v_max, spec.grid);
    std::size_t j_in = nearest_level(table.levels, spec.v_in);
    std::size_t j_out = nearest_level(table.levels, spec.v_out);

    std::vector<LegFrontier::Point> raw;
    for (double lam : lambda_grid(spec.grid)) {
        SweepOut sw = sweep_forward(table, lam, j_in, nullptr);
        if (sw.value[j_out] != kInf) raw.push_back({sw.time[j_out], sw.fuel[j_out], lam});
    }
    LegFrontier front = finalize_frontier(std::move(raw));
    double fuel = front.fuel_at(spec.duration_s);
    if (fuel == kInf) {
        std::string span = front.empty()
                               ? "no grid trajectory connects the boundary speeds"
                               : "reachable span [" + std::to_string(front.min_time()) + ", " +
                                     std::to_string(front.max_time()) + "] s";
        throw InfeasibleError("duration " + std::to_string(spec.duration_s) +
                              " s infeasible for the leg: " + span);
    }

    const LegFrontier::Point* p = front.nearest(spec.duration_s);
    SegmentPlan plan;
    plan.profile = extract_forward(table, p->lambda, j_in, j_out);
    plan.fuel_kg = fuel;
    plan.time_s = p->time_s;
    return plan;
}

MergingSolution solve_merge(const MergingProblem& pb) {
    MergeEvaluator ev(pb);
    auto [lo, hi] = ev.merge_window();
    if (!(lo <= hi)) throw InfeasibleError("no merge time can synchronize the legs");

    const int n_scan = 64;
    std::vector<std::pair<double, double>> curve;
    curve.reserve(n_scan);
    int best_i = -1;
    double best_t = lo, best_c = kInf;
    for (int i = 0; i < n_scan; ++i) {
        double t = (n_scan == 1) ? lo
                                 : lo + (hi - lo) * static_cast<double>(i) / (n_scan - 1);
        double c = ev.cost(t);
        curve.emplace_back(t, c);
        if (c < best_c) {
            best_c = c;
            best_t = t;
            best_i = i;
        }
    }
    if (!std::isfinite(best_c))
        throw InfeasibleError("every candidate merge time in [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + "] s is infeasible");

    // Golden-section refinement on the bracket around the best coarse sample.
    double a = curve[static_cast<std::size_t>(std::max(0, best_i - 1))].first;
    double b = curve[static_cast<std::size_t>(std::min(n_scan - 1, best_i + 1))].first;
    constexpr double invphi = 0.6180339887498949;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = ev.cost(x1);
    double f2 = ev.cost(x2);
    while (b - a > 1e-3) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = ev.cost(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = ev.cost(x2);
        }
        double x = (f1 <= f2) ? x1 : x2;
        double fx = std::min(f1, f2);
        if (fx < best_c) {
            best_c = fx;
            best_t = x;
        }
    }

    MergingSolution sol = ev.solution_at(best_t);
    sol.cost_curve = std::move(curve);
    return sol;
}

}  // namespace platoon
