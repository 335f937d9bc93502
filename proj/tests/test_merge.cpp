#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "platoon/clac.hpp"
#include "platoon/errors.hpp"
#include "platoon/merge.hpp"
#include "platoon/units.hpp"

using namespace platoon;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Steady-state fuel flow at 80 km/h on flat ground, frozen from an
// independent evaluation of the force balance and the affine fuel map.
constexpr double kPhiSteady80 = 0.0049685604938271601;  // kg/s

Route flat(double length, double limit = 25.0) {
    return make_route(length, {{0.0, 0.0}, {length, 0.0}}, limit);
}

Route rolling(double length, double amp, double wavelength_m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> step(-amp, amp);
    std::vector<AltitudeSample> alt;
    double a = 100.0;
    for (double s = 0.0; s < length + wavelength_m / 2; s += wavelength_m) {
        alt.push_back({std::min(s, length), a});
        a += step(rng);
        if (alt.back().offset_m >= length) break;
    }
    if (alt.back().offset_m < length) alt.push_back({length, a});
    return make_route(length, alt, 26.0);
}

MergingProblem two_vehicle_problem(Route pre1, Route pre2, Route post) {
    MergingProblem pb;
    pb.params.assign(2, VehicleParameters{});
    pb.pre_legs = {std::move(pre1), std::move(pre2)};
    pb.post_leg = std::move(post);
    pb.v_start = {kmh_to_mps(80.0), kmh_to_mps(80.0)};
    pb.t_start = {0.0, 0.0};
    pb.v_final = kmh_to_mps(80.0);
    return pb;
}

}  // namespace

TEST_CASE("segment traversal at the natural constant speed") {
    // Tiny grid so every path can be enumerated: 5 cells, 3 speed levels.
    SegmentSpec spec;
    spec.params = {VehicleParameters{}};
    spec.route = flat(1000.0);
    spec.v_in = spec.v_out = spec.v_anchor = kmh_to_mps(80.0);
    spec.v_min = kmh_to_mps(79.0);
    spec.v_max = kmh_to_mps(81.0);
    spec.grid.ds = 200.0;
    double T = 1000.0 / spec.v_anchor;
    spec.duration_s = T;

    SegmentPlan plan = segment_fuel_optimal(spec);
    double expect = kPhiSteady80 * T;
    CHECK(plan.fuel_kg == doctest::Approx(expect).epsilon(5e-3));
    for (const auto& k : plan.profile.knots())
        CHECK(std::abs(k.v - spec.v_anchor) <= spec.grid.dv + 1e-9);

    // Exhaustive path oracle: no admissible path at most as slow as the
    // constant one burns less fuel.
    ClacProblem view;
    view.N = 1;
    view.params = spec.params;
    view.route = spec.route;
    view.H = 1000.0;
    view.v_bar = spec.v_anchor;
    view.v_min = spec.v_min;
    view.v_max = spec.v_max;
    view.grid.ds = 200.0;
    std::vector<double> levels = {kmh_to_mps(79.0), kmh_to_mps(80.0), kmh_to_mps(81.0)};
    double fuel_const = 5.0 * stage_cost(view, 0.0, levels[1], levels[1]);
    std::size_t beaten = 0;
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < 3; ++b)
            for (std::size_t c = 0; c < 3; ++c)
                for (std::size_t d = 0; d < 3; ++d) {
                    std::size_t path[6] = {1, a, b, c, d, 1};
                    double fuel = 0.0, time = 0.0;
                    for (int k = 0; k < 5; ++k) {
                        double f = stage_cost(view, 200.0 * k, levels[path[k]],
                                              levels[path[k + 1]]);
                        if (f == kInf) { fuel = kInf; break; }
                        fuel += f;
                        time += 200.0 / (0.5 * (levels[path[k]] + levels[path[k + 1]]));
                    }
                    if (fuel != kInf && time <= T + 1e-9 && fuel < fuel_const - 1e-15)
                        ++beaten;
                }
    CHECK(beaten == 0);

    SUBCASE("platoon pricing burns less than two solos") {
        SegmentSpec duo = spec;
        duo.params.assign(2, VehicleParameters{});
        SegmentPlan two = segment_fuel_optimal(duo);
        CHECK(two.fuel_kg < 2.0 * plan.fuel_kg);
        CHECK(two.fuel_kg > plan.fuel_kg);
    }

    SUBCASE("impossible durations are rejected") {
        SegmentSpec fast = spec;
        fast.duration_s = 1000.0 / kmh_to_mps(120.0);
        CHECK_THROWS_AS(segment_fuel_optimal(fast), InfeasibleError);
        SegmentSpec slow = spec;
        slow.duration_s = 1000.0 / kmh_to_mps(30.0);
        CHECK_THROWS_AS(segment_fuel_optimal(slow), InfeasibleError);
    }
}

TEST_CASE("merge cost curve is continuous and the solver lands on its floor") {
    std::mt19937_64 rng(7321);
    auto uni = [&](double a, double b) {
        return a + (b - a) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    };
    auto level_kmh = [&](double lo, double hi) {
        return std::round(uni(lo, hi));  // whole km/h, on the merge grid
    };

    int tested = 0, attempts = 0;
    while (tested < 20 && attempts < 100) {
        ++attempts;
        double len1 = 100.0 * std::round(uni(20.0, 50.0));
        double len2 = std::clamp(len1 + 100.0 * std::round(uni(-15.0, 15.0)), 2000.0, 5000.0);
        double lenp = 100.0 * std::round(uni(30.0, 60.0));
        MergingProblem pb = two_vehicle_problem(rolling(len1, 8.0, 500.0, rng()),
                                                rolling(len2, 8.0, 500.0, rng()),
                                                rolling(lenp, 8.0, 500.0, rng()));
        pb.v_start = {kmh_to_mps(level_kmh(65, 85)), kmh_to_mps(level_kmh(65, 85))};
        pb.v_final = kmh_to_mps(level_kmh(70, 85));
        pb.t_start = {0.0, uni(-40.0, 40.0)};
        double full1 = len1 + lenp, full2 = len2 + lenp;
        pb.t_final = std::max(full1 / kmh_to_mps(77.0),
                              pb.t_start[1] + full2 / kmh_to_mps(77.0));
        double mean1 = full1 / pb.t_final;
        double mean2 = full2 / (pb.t_final - pb.t_start[1]);
        if (mean1 < kmh_to_mps(63.0) || mean1 > kmh_to_mps(87.0)) continue;
        if (mean2 < kmh_to_mps(63.0) || mean2 > kmh_to_mps(87.0)) continue;

        MergingSolution sol;
        try {
            sol = solve_merge(pb);
        } catch (const InfeasibleError&) {
            continue;
        }
        ++tested;

        MergeEvaluator ev(pb);
        auto [lo, hi] = ev.merge_window();
        REQUIRE(lo <= hi);

        // Dense reference scan over the merge time.
        double dense = kInf;
        for (int i = 0; i < 200; ++i) {
            double t = lo + (hi - lo) * static_cast<double>(i) / 199.0;
            dense = std::min(dense, ev.cost(t));
        }
        REQUIRE(std::isfinite(dense));
        CHECK(std::abs(sol.merge_fuel_kg - dense) <= 5e-3 * dense);

        // Reported totals and trajectory continuity at the junction.
        CHECK(sol.total_fuel_kg == std::min(sol.merge_fuel_kg, sol.no_merge_fuel_kg));
        CHECK(sol.total_fuel_kg <= sol.no_merge_fuel_kg + 1e-12);
        CHECK(sol.t_merge >= lo - 1e-9);
        CHECK(sol.t_merge <= hi + 1e-9);
        for (const auto& pre : sol.pre_profiles)
            CHECK(pre.knots().back().v == sol.v_merge);
        CHECK(sol.post_profile.knots().front().v == sol.v_merge);

        // Local continuity probes of the cost curve.
        for (int i = 0; i < 8; ++i) {
            double t = lo + (hi - lo) * uni(0.05, 0.95);
            double c0 = ev.cost(t);
            if (!std::isfinite(c0)) continue;
            double c1 = ev.cost(t + 1e-4);
            if (!std::isfinite(c1)) continue;
            CHECK(std::abs(c1 - c0) <= 1e-3);
        }
    }
    CHECK(tested == 20);
}

TEST_CASE("identical vehicles with no drag coupling gain nothing by merging") {
    Route pre = flat(4000.0);
    MergingProblem pb = two_vehicle_problem(pre, pre, flat(5000.0));
    pb.t_final = 9000.0 / kmh_to_mps(78.0);
    for (auto& p : pb.params) p.alpha1 = 0.0;

    MergingSolution sol = solve_merge(pb);
    CHECK(std::abs(sol.merge_fuel_kg - sol.no_merge_fuel_kg) <= 0.01 * sol.no_merge_fuel_kg);
    CHECK(sol.total_fuel_kg == std::min(sol.merge_fuel_kg, sol.no_merge_fuel_kg));

    // Symmetric problem: both pre-merge trajectories identical.
    REQUIRE(sol.pre_profiles[0].knots().size() == sol.pre_profiles[1].knots().size());
    for (std::size_t i = 0; i < sol.pre_profiles[0].knots().size(); ++i) {
        CHECK(sol.pre_profiles[0].knots()[i].s == sol.pre_profiles[1].knots()[i].s);
        CHECK(sol.pre_profiles[0].knots()[i].v == sol.pre_profiles[1].knots()[i].v);
    }

    SUBCASE("with drag coupling restored the same problem favors merging") {
        MergingProblem pb2 = two_vehicle_problem(pre, pre, flat(5000.0));
        pb2.t_final = pb.t_final;
        MergingSolution sol2 = solve_merge(pb2);
        CHECK(sol2.merged);
        CHECK(sol2.merge_fuel_kg < sol2.no_merge_fuel_kg);
    }
}

TEST_CASE("catch-up from ten kilometers behind still pays off") {
    MergingProblem pb = two_vehicle_problem(flat(30000.0), flat(40000.0), flat(60000.0));
    pb.grid.ds = 250.0;
    pb.t_final = 90000.0 / kmh_to_mps(78.0);

    MergingSolution sol = solve_merge(pb);
    CHECK(sol.merged);
    CHECK(sol.merge_fuel_kg < sol.no_merge_fuel_kg);
    CHECK(sol.v_merge >= pb.v_min);
    CHECK(sol.v_merge <= pb.v_max);
    // The broad coarse scan is exported for plotting.
    CHECK(sol.cost_curve.size() == 64);
}

TEST_CASE("vehicles already sitting at the junction merge immediately") {
    MergingProblem pb = two_vehicle_problem(Route{}, Route{}, flat(5000.0));
    pb.t_final = 5000.0 / kmh_to_mps(80.0);

    MergingSolution sol = solve_merge(pb);
    CHECK(sol.t_merge == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(sol.v_merge == doctest::Approx(kmh_to_mps(80.0)));
    CHECK(sol.merged);
    for (const auto& pre : sol.pre_profiles) CHECK(pre.knots().size() == 1);
}

TEST_CASE("joint three-vehicle merge beats merging only a pair") {
    std::vector<Route> pres = {flat(4000.0), flat(4800.0), flat(5600.0)};
    Route post = flat(15000.0);
    double t_final = 20600.0 / kmh_to_mps(77.0);

    MergingProblem joint;
    joint.params.assign(3, VehicleParameters{});
    joint.pre_legs = pres;
    joint.post_leg = post;
    joint.v_start.assign(3, kmh_to_mps(80.0));
    joint.t_start.assign(3, 0.0);
    joint.v_final = kmh_to_mps(80.0);
    joint.t_final = t_final;
    MergingSolution sol3 = solve_merge(joint);

    MergingProblem pair = two_vehicle_problem(pres[0], pres[1], post);
    pair.t_final = t_final;
    MergingSolution sol2 = solve_merge(pair);

    SegmentSpec solo;
    solo.params = {VehicleParameters{}};
    solo.route = concat_routes(pres[2], post);
    solo.v_in = kmh_to_mps(80.0);
    solo.v_out = kmh_to_mps(80.0);
    solo.duration_s = t_final;
    SegmentPlan third = segment_fuel_optimal(solo);

    CHECK(sol3.merge_fuel_kg <= (sol2.total_fuel_kg + third.fuel_kg) * 1.001);
}

TEST_CASE("route concatenation preserves geometry") {
    Route a = make_route(2000.0, {{0.0, 10.0}, {2000.0, 30.0}}, 25.0);
    Route b = make_route(3000.0, {{0.0, 50.0}, {3000.0, 20.0}}, 23.0);
    Route ab = concat_routes(a, b);
    CHECK(ab.total_length() == doctest::Approx(5000.0));
    CHECK(ab.grade_at(1000.0) == doctest::Approx(a.grade_at(1000.0)));
    CHECK(ab.grade_at(3500.0) == doctest::Approx(b.grade_at(1500.0)));
    CHECK(ab.speed_limit_at(1000.0) == 25.0);
    CHECK(ab.speed_limit_at(3500.0) == 23.0);
    CHECK(concat_routes(Route{}, b).total_length() == doctest::Approx(3000.0));

    SUBCASE("merging problems validate their inputs") {
        MergingProblem pb = two_vehicle_problem(flat(2000.0), flat(2000.0), flat(3000.0));
        pb.t_final = 5000.0 / kmh_to_mps(78.0);
        pb.v_start[0] = kmh_to_mps(40.0);  // below v_min
        CHECK_THROWS_AS(solve_merge(pb), RangeError);
        pb.v_start[0] = kmh_to_mps(80.0);
        pb.t_final = -1.0;
        CHECK_THROWS_AS(solve_merge(pb), RangeError);
    }
}
