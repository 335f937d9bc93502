#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "platoon/errors.hpp"
#include "platoon/units.hpp"
#include "platoon/vehicle.hpp"

using namespace platoon;

namespace {
const VehicleParameters kP;
const Environment kEnv;
}  // namespace

TEST_CASE("drag coefficient matches hand-evaluated values") {
    CHECK(drag_coefficient(kP, std::nullopt) == 0.6);
    CHECK(std::abs(drag_coefficient(kP, 0.0) - 0.282) < 1e-9);
    CHECK(std::abs(drag_coefficient(kP, 1.0) - 0.42430939226519332) < 1e-9);
    CHECK(std::abs(drag_coefficient(kP, 3.0) - 0.50728862973760935) < 1e-9);
    CHECK_THROWS_AS(drag_coefficient(kP, -0.1), RangeError);
}

TEST_CASE("drag coefficient is monotone in the time gap and bounded") {
    double lo = kP.cd0 * (1.0 - kP.alpha1);
    double prev = -1.0;
    for (int i = 0; i <= 400; ++i) {
        double tau = i * 0.05;
        double cd = drag_coefficient(kP, tau);
        CHECK(cd > prev);
        CHECK(cd >= lo);
        CHECK(cd < kP.cd0);
        prev = cd;
    }
    // Far gaps approach the solo coefficient.
    CHECK(drag_coefficient(kP, 1e6) == doctest::Approx(kP.cd0).epsilon(1e-6));
}

TEST_CASE("follower drag force is below solo drag force at equal speed") {
    for (double v : {10.0, 20.0, 25.0}) {
        for (double tau : {0.5, 1.0, 2.0, 3.0}) {
            CHECK(drag_force(kP, kEnv, v, tau) < drag_force(kP, kEnv, v, std::nullopt));
        }
    }
    VehicleParameters nocoupling = kP;
    nocoupling.alpha1 = 0.0;
    CHECK(drag_force(nocoupling, kEnv, 25.0, 1.0) ==
          drag_force(nocoupling, kEnv, 25.0, std::nullopt));
}

TEST_CASE("net force hand values") {
    SUBCASE("at rest on flat road only rolling resistance acts") {
        double f = net_force(kP, kEnv, {0.0, 0.0}, 0.0, std::nullopt, {});
        CHECK(f == doctest::Approx(-1962.0).epsilon(1e-12));
    }
    SUBCASE("pure aerodynamic drag at 25 m/s") {
        VehicleParameters p = kP;
        p.c_r = 0.0;
        double f = net_force(p, kEnv, {0.0, 25.0}, 0.0, std::nullopt, {});
        CHECK(std::abs(f - (-2418.75)) < 1e-9);
    }
    SUBCASE("force balance gives zero") {
        double alpha = 0.012;
        VehicleState st{0.0, 22.0};
        ControlInput u;
        u.F_e = rolling_force(kP, kEnv, alpha) + gravity_force(kP, kEnv, alpha) +
                drag_force(kP, kEnv, st.v, 1.0);
        CHECK(net_force(kP, kEnv, st, alpha, 1.0, u) == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("fuel flow hand values and power bounds") {
    CHECK(std::abs(fuel_flow(kP, 12000.0, 25.0) - 0.015986) < 1e-9);  // 300 kW
    CHECK(fuel_flow(kP, 0.0, 25.0) == kP.p0);
    CHECK(fuel_flow(kP, -300.0, 20.0) == kP.p0);  // engine braking, idle flow
    CHECK_THROWS_AS(fuel_flow(kP, 14000.0, 25.0), ConstraintError);  // 350 kW
}

TEST_CASE("fuel flow is affine in power with slope p1 and intercept p0") {
    double v = 20.0;
    for (double P = 0.0; P <= kP.P_max; P += kP.P_max / 16.0) {
        double phi = fuel_flow(kP, P / v, v);
        CHECK(phi == doctest::Approx(kP.p1 * P + kP.p0).epsilon(1e-14));
    }
}

TEST_CASE("step_time uniform motion under exact force balance") {
    Route flat = make_route(10000.0, {{0.0, 0.0}, {10000.0, 0.0}}, 25.0);
    VehicleState st{100.0, 20.0};
    ControlInput u;
    u.F_e = rolling_force(kP, kEnv, 0.0) + drag_force(kP, kEnv, 20.0, std::nullopt);
    StepResult r = step_time(kP, kEnv, flat, st, std::nullopt, u, 1.0);
    CHECK(r.state.s == doctest::Approx(120.0).epsilon(1e-12));
    CHECK(r.state.v == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("free roll downhill from rest matches small-time expansion") {
    // Altitude falls 100 m over 10 km, so sin(alpha) = -0.01 exactly.
    // v(t) ~ g*|sin(alpha)|*t while drag is still negligible.
    Route slope = make_route(10000.0, {{0.0, 100.0}, {10000.0, 0.0}}, 25.0);
    VehicleParameters p = kP;
    p.c_r = 0.0;
    VehicleState st{0.0, 0.0};
    double t = 0.0;
    while (t < 10.0 - 1e-9) {
        st = step_time(p, kEnv, slope, st, std::nullopt, {}, 0.1).state;
        t += 0.1;
    }
    double ideal = kEnv.g * 0.01 * 10.0;
    CHECK(std::abs(st.v - ideal) / ideal < 1e-3);
}

TEST_CASE("halving dt reduces trajectory error by about 16x") {
    // A light, drag-dominated vehicle and coarse steps, so truncation error
    // sits well above rounding noise. Constant grade keeps the field smooth.
    VehicleParameters p = kP;
    p.m = 2000.0;
    Route slope = make_route(20000.0, {{0.0, 0.0}, {20000.0, 200.0}}, 60.0);
    ControlInput u{6000.0, 0.0};
    VehicleState st{1000.0, 30.0};

    auto integrate = [&](double dt, int steps) {
        VehicleState x = st;
        for (int i = 0; i < steps; ++i) x = step_time(p, kEnv, slope, x, 1.0, u, dt).state;
        return x.v;
    };
    // Reference with very fine steps over the same 12.8 s horizon.
    double ref = integrate(0.0125, 1024);
    double err_a = std::abs(integrate(1.6, 8) - ref);
    double err_b = std::abs(integrate(0.8, 16) - ref);
    double ratio = err_a / err_b;
    CHECK(ratio > 8.0);
    CHECK(ratio < 32.0);
}

TEST_CASE("energy audit closes over a varied maneuver") {
    Route hill = make_route(8000.0, {{0.0, 20.0}, {2000.0, 20.0}, {4000.0, 55.0},
                                     {6000.0, 25.0}, {8000.0, 25.0}},
                            25.0);
    VehicleState st{0.0, 22.0};
    double fuel = 0.0, we = 0.0, wb = 0.0, wr = 0.0, wd = 0.0;
    double t = 0.0;
    VehicleState start = st;
    while (st.s < 7500.0) {
        // Exercise traction, climb, brake, and cruise phases by position.
        ControlInput u;
        if (st.s < 1500.0) u.F_e = 7000.0 + 2000.0 * std::sin(0.1 * t);
        else if (st.s < 4000.0) u.F_e = 14000.0;
        else if (st.s < 5000.0) u.F_b = 4000.0;
        else u.F_e = 6000.0;
        StepResult r = step_time(kP, kEnv, hill, st, std::nullopt, u, 0.1);
        st = r.state;
        fuel += r.fuel_kg;
        we += r.work_engine_J;
        wb += r.work_brake_J;
        wr += r.work_roll_J;
        wd += r.work_drag_J;
        t += 0.1;
        REQUIRE(t < 3600.0);
    }
    double dKE = 0.5 * kP.m * (st.v * st.v - start.v * start.v);
    double dPE = kP.m * kEnv.g * (hill.altitude_at(st.s) - hill.altitude_at(start.s));
    double rhs = we - wb - wr - wd;
    CHECK(std::abs(dKE + dPE - rhs) / std::abs(rhs) < 1e-3);
    CHECK(fuel > 0.0);
}

TEST_CASE("nominal consumption") {
    SUBCASE("matches the closed-form steady state at 80 km/h") {
        Route flat = make_route(50000.0, {{0.0, 0.0}, {50000.0, 0.0}}, 25.0);
        double v = kmh_to_mps(80.0);
        ControlInput u;
        u.F_e = rolling_force(kP, kEnv, 0.0) + drag_force(kP, kEnv, v, std::nullopt);
        VehicleState st{0.0, v};
        FuelLog log;
        for (int i = 0; i < 3000; ++i) {
            StepResult r = step_time(kP, kEnv, flat, st, std::nullopt, u, 0.1);
            log.fuel_kg += r.fuel_kg;
            log.distance_m += r.state.s - st.s;
            log.time_s += 0.1;
            st = r.state;
        }
        double expect = 0.0049685604938271601 / v;  // phi_ss / v
        CHECK(nominal_consumption(log) == doctest::Approx(expect).epsilon(1e-9));
    }
    SUBCASE("zero fuel over positive distance is zero") {
        CHECK(nominal_consumption({0.0, 1000.0, 36.0}) == 0.0);
    }
    SUBCASE("ratio is invariant to duplicating the leg") {
        FuelLog one{2.5, 30000.0, 1350.0};
        FuelLog two{5.0, 60000.0, 2700.0};
        CHECK(nominal_consumption(one) == nominal_consumption(two));
    }
    SUBCASE("zero distance is undefined") {
        CHECK_THROWS_AS(nominal_consumption({0.0, 0.0, 0.0}), RangeError);
    }
}
