// Command-line surface for the platooning toolkit: fleet planning and
// simulation runs, single-vehicle look-ahead planning, two-vehicle merge
// optimization, the three-arm hill demo, plot exports, and the bundled
// demand generator. Exit codes: 0 success, 2 input error, 3 infeasible.
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "platoon/clac.hpp"
#include "platoon/errors.hpp"
#include "platoon/fleet.hpp"
#include "platoon/merge.hpp"
#include "platoon/road_network.hpp"
#include "platoon/scenario.hpp"
#include "platoon/units.hpp"
#include "platoon/vehicle.hpp"

namespace {

using namespace platoon;

void write_file(const std::string& dir, const std::string& name, const std::string& text) {
    std::filesystem::create_directories(dir);
    auto path = std::filesystem::path(dir) / name;
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path.string());
    out << text;
    std::cerr << "wrote " << path.string() << "\n";
}

std::vector<int> parse_route_nodes(const std::string& csv) {
    std::vector<int> nodes;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            nodes.push_back(std::stoi(tok));
        } catch (const std::exception&) {
            throw ParseError("bad node id in route list: '" + tok + "'");
        }
    }
    if (nodes.size() < 2) throw ParseError("route needs at least two nodes");
    return nodes;
}

// Shared options for the plan/simulate subcommands.
struct RunArgs {
    std::string scenario;
    std::string network;
    std::string assignments;
    std::string params;
    std::string out_dir;
    std::string mode;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

Scenario load_run_scenario(const RunArgs& a) {
    Scenario sc;
    if (!a.scenario.empty()) {
        sc = load_scenario(a.scenario);
    } else {
        if (a.network.empty() || a.assignments.empty())
            throw ParseError("need --scenario, or --network and --assignments");
        sc.network = RoadNetwork::load(a.network);
        sc.assignments = load_assignments(a.assignments, sc.network);
        if (!a.params.empty()) sc.params = VehicleParameters::load(a.params);
    }
    if (a.seed_set) sc.seed = a.seed;
    return sc;
}

int run_plan_or_simulate(const RunArgs& a, RunMode default_mode) {
    RunMode mode = default_mode;
    if (!a.mode.empty()) {
        if (a.mode == "plan-only")
            mode = RunMode::plan_only;
        else if (a.mode == "plan+simulate")
            mode = RunMode::plan_and_simulate;
        else
            throw ParseError("unknown --mode '" + a.mode + "' (plan-only | plan+simulate)");
    }
    Scenario sc = load_run_scenario(a);
    RunReport rep = run_scenario(sc, mode);

    std::cerr << "planning: " << rep.wall_ms_planning << " ms";
    if (mode == RunMode::plan_and_simulate)
        std::cerr << ", simulation: " << rep.wall_ms_simulation << " ms";
    std::cerr << "\n";

    std::cout << report_to_text(rep);
    if (!a.out_dir.empty()) {
        write_file(a.out_dir, "report.txt", report_to_text(rep));
        write_file(a.out_dir, "report.json", report_to_json_text(rep));
        write_file(a.out_dir, "gap_curves.txt", gap_curves_text(rep.plan));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fuel-optimal heavy-duty vehicle platooning toolkit"};
    app.require_subcommand(1);

    RunArgs run;
    auto add_run_flags = [&](CLI::App* cmd) {
        cmd->add_option("--scenario", run.scenario, "scenario JSON file");
        cmd->add_option("--network", run.network, "road network JSON file");
        cmd->add_option("--assignments", run.assignments, "transport assignments JSON file");
        cmd->add_option("--params", run.params, "vehicle parameters JSON file");
        cmd->add_option("--out-dir", run.out_dir, "directory for report and curve files");
        cmd->add_option("--mode", run.mode, "plan-only | plan+simulate");
        cmd->add_option("--seed", run.seed, "override the scenario seed")
            ->each([&](const std::string&) { run.seed_set = true; });
    };
    CLI::App* plan_cmd = app.add_subcommand("plan", "coordinate a fleet (kinematic fuel accounting)");
    add_run_flags(plan_cmd);
    CLI::App* sim_cmd = app.add_subcommand("simulate", "coordinate, then run closed-loop dynamics");
    add_run_flags(sim_cmd);

    // clac: fuel-optimal velocity profile for one route window
    std::string clac_network, clac_route, clac_params, clac_out;
    double clac_vbar = 80.0, clac_vmin = 60.0, clac_vmax = 90.0, clac_tau = 1.0;
    double clac_begin = 0.0, clac_end = -1.0;
    std::size_t clac_n = 1;
    CLI::App* clac_cmd = app.add_subcommand("clac", "look-ahead velocity profile on a route window");
    clac_cmd->add_option("--network", clac_network, "road network JSON file")->required();
    clac_cmd->add_option("--route", clac_route, "comma-separated node ids, e.g. 3,5,7")->required();
    clac_cmd->add_option("--params", clac_params, "vehicle parameters JSON file");
    clac_cmd->add_option("--v-avg", clac_vbar, "average speed to hold, km/h");
    clac_cmd->add_option("--v-min", clac_vmin, "lower speed bound, km/h");
    clac_cmd->add_option("--v-max", clac_vmax, "upper speed bound, km/h");
    clac_cmd->add_option("--tau-ref", clac_tau, "platoon time gap, s");
    clac_cmd->add_option("--n", clac_n, "platoon size sharing the profile");
    clac_cmd->add_option("--window-begin", clac_begin, "window start, m");
    clac_cmd->add_option("--window-end", clac_end, "window end, m (default: route end)");
    clac_cmd->add_option("--out-dir", clac_out, "directory for the profile file");

    // merge: two vehicles, separate approach legs, one shared road
    double mg_pre1 = 30.0, mg_pre2 = 40.0, mg_post = 20.0, mg_v1 = 80.0, mg_v2 = 80.0;
    double mg_deadline = -1.0;
    std::string mg_out;
    CLI::App* merge_cmd = app.add_subcommand("merge", "rendezvous planning for two vehicles");
    merge_cmd->add_option("--pre1-km", mg_pre1, "vehicle 1 approach leg, km");
    merge_cmd->add_option("--pre2-km", mg_pre2, "vehicle 2 approach leg, km");
    merge_cmd->add_option("--post-km", mg_post, "shared road after the junction, km");
    merge_cmd->add_option("--v1", mg_v1, "vehicle 1 entry speed, km/h");
    merge_cmd->add_option("--v2", mg_v2, "vehicle 2 entry speed, km/h");
    merge_cmd->add_option("--deadline", mg_deadline,
                          "common arrival time, s (default: longest trip at 80 km/h plus 8%)");
    merge_cmd->add_option("--out-dir", mg_out, "directory for the merge-time scan");

    // hill-demo: three-arm comparison on the synthetic crest
    std::string hill_params, hill_out;
    std::size_t hill_n = 3;
    double hill_vbar = 80.0;
    CLI::App* hill_cmd = app.add_subcommand("hill-demo", "solo vs gap-keeping vs cooperative look-ahead");
    hill_cmd->add_option("--n", hill_n, "platoon size");
    hill_cmd->add_option("--v-bar", hill_vbar, "average speed to hold, km/h");
    hill_cmd->add_option("--params", hill_params, "vehicle parameters JSON file");
    hill_cmd->add_option("--out-dir", hill_out, "directory for the four-panel files");

    // export: plot-ready columnar artifacts
    std::string ex_scenario, ex_params, ex_out = ".";
    bool ex_drag = false, ex_gaps = false, ex_hill = false;
    CLI::App* export_cmd = app.add_subcommand("export", "columnar plot data");
    export_cmd->add_option("--scenario", ex_scenario, "scenario JSON file (enables gap curves)");
    export_cmd->add_option("--params", ex_params, "vehicle parameters JSON file");
    export_cmd->add_option("--out-dir", ex_out, "output directory");
    export_cmd->add_flag("--drag", ex_drag, "drag-coefficient curve");
    export_cmd->add_flag("--gaps", ex_gaps, "per-follower gap curves (needs --scenario)");
    export_cmd->add_flag("--hill", ex_hill, "hill-demo four-panel files");

    // gen-scenario: the bundled 200-vehicle demand, reproducible from a seed
    std::string gen_network, gen_out;
    std::uint64_t gen_seed = 1;
    CLI::App* gen_cmd = app.add_subcommand("gen-scenario", "write the bundled transport demand");
    gen_cmd->add_option("--network", gen_network, "road network JSON file")->required();
    gen_cmd->add_option("--seed", gen_seed, "demand seed");
    gen_cmd->add_option("--out", gen_out, "assignments file to write (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(plan_cmd)) return run_plan_or_simulate(run, RunMode::plan_only);
        if (app.got_subcommand(sim_cmd)) return run_plan_or_simulate(run, RunMode::plan_and_simulate);

        if (app.got_subcommand(clac_cmd)) {
            ClacProblem pb;
            pb.route = RoadNetwork::load(clac_network).resolve_route(parse_route_nodes(clac_route));
            if (!clac_params.empty()) pb.params.assign(clac_n, VehicleParameters::load(clac_params));
            else pb.params.assign(clac_n, VehicleParameters{});
            pb.N = clac_n;
            pb.tau_ref = clac_tau;
            pb.v_bar = kmh_to_mps(clac_vbar);
            pb.v_min = kmh_to_mps(clac_vmin);
            pb.v_max = kmh_to_mps(clac_vmax);
            pb.s0 = clac_begin;
            double end = clac_end < 0 ? pb.route.total_length() : clac_end;
            pb.H = end - pb.s0;
            pb.validate();
            ClacSolution sol = solve_clac(pb);
            std::cout << "stages:        " << clac_stage_count(pb) << "\n"
                      << "fuel:          " << sol.total_fuel_kg << " kg (platoon total)\n"
                      << "time:          " << sol.total_time_s << " s\n"
                      << "avg speed:     " << mps_to_kmh(sol.achieved_average_speed) << " km/h\n"
                      << "time price:    " << sol.lambda << " kg/s\n";
            std::string cols = "# s_m v_mps\n";
            for (const auto& k : sol.profile.knots()) {
                char line[64];
                std::snprintf(line, sizeof line, "%.1f %.6f\n", k.s, k.v);
                cols += line;
            }
            if (!clac_out.empty()) write_file(clac_out, "clac_profile.txt", cols);
            return 0;
        }

        if (app.got_subcommand(merge_cmd)) {
            MergingProblem pb;
            pb.params.assign(2, VehicleParameters{});
            pb.pre_legs = {make_route(mg_pre1 * 1000.0, {}, kmh_to_mps(90.0)),
                           make_route(mg_pre2 * 1000.0, {}, kmh_to_mps(90.0))};
            pb.post_leg = make_route(mg_post * 1000.0, {}, kmh_to_mps(90.0));
            pb.v_start = {kmh_to_mps(mg_v1), kmh_to_mps(mg_v2)};
            pb.t_start = {0.0, 0.0};
            pb.v_final = pb.v_anchor;
            double longest = std::max(mg_pre1, mg_pre2) * 1000.0 + mg_post * 1000.0;
            pb.t_final = mg_deadline > 0 ? mg_deadline : 1.08 * longest / pb.v_anchor;
            pb.validate();
            MergingSolution sol = solve_merge(pb);
            std::cout << (sol.merged ? "merge pays off\n" : "independent driving is cheaper\n")
                      << "merge time:    " << sol.t_merge << " s\n"
                      << "merge speed:   " << mps_to_kmh(sol.v_merge) << " km/h\n"
                      << "fuel merged:   " << sol.merge_fuel_kg << " kg\n"
                      << "fuel alone:    " << sol.no_merge_fuel_kg << " kg\n";
            std::string cols = "# t_merge_s fuel_kg\n";
            for (const auto& [t, f] : sol.cost_curve) {
                char line[64];
                std::snprintf(line, sizeof line, "%.1f %.9f\n", t, f);
                cols += line;
            }
            if (!mg_out.empty()) write_file(mg_out, "merge_scan.txt", cols);
            return 0;
        }

        if (app.got_subcommand(hill_cmd)) {
            VehicleParameters p;
            if (!hill_params.empty()) p = VehicleParameters::load(hill_params);
            HillDemoConfig cfg;
            cfg.n_vehicles = hill_n;
            cfg.v_bar = kmh_to_mps(hill_vbar);
            Route route = default_hill_route();
            HillDemoReport rep = run_hill_demo(route, p, Environment{}, cfg);
            auto arm_line = [](const HillArm& a) {
                std::ostringstream os;
                os << a.fuel_kg << " kg, brakes " << a.brake_energy_J / 1e3 << " kJ (followers "
                   << a.follower_brake_energy_J / 1e3 << " kJ)";
                return os.str();
            };
            std::cout << "solo:          " << arm_line(rep.solo) << "\n"
                      << "gap-keeping:   " << arm_line(rep.gap_keeping) << "\n"
                      << "cooperative:   " << arm_line(rep.cooperative) << "\n"
                      << "coop vs solo:  " << rep.coop_vs_solo_percent << " %\n"
                      << "coop vs gap:   " << rep.coop_vs_gap_percent << " %\n"
                      << "slowest point: " << mps_to_kmh(rep.min_coop_speed_mps) << " km/h\n";
            if (!hill_out.empty()) {
                write_file(hill_out, "hill_solo.txt", hill_panels_text(route, rep.solo.records));
                write_file(hill_out, "hill_gap_keeping.txt",
                           hill_panels_text(route, rep.gap_keeping.records));
                write_file(hill_out, "hill_cooperative.txt",
                           hill_panels_text(route, rep.cooperative.records));
            }
            return 0;
        }

        if (app.got_subcommand(export_cmd)) {
            if (!ex_drag && !ex_gaps && !ex_hill) {  // default: everything available
                ex_drag = true;
                ex_gaps = !ex_scenario.empty();
            }
            if (ex_drag) {
                VehicleParameters p;
                if (!ex_params.empty()) p = VehicleParameters::load(ex_params);
                write_file(ex_out, "drag_curve.txt", drag_curve_text(p));
            }
            if (ex_gaps) {
                if (ex_scenario.empty()) throw ParseError("--gaps needs --scenario");
                Scenario sc = load_scenario(ex_scenario);
                RunReport rep = run_scenario(sc, RunMode::plan_only);
                write_file(ex_out, "gap_curves.txt", gap_curves_text(rep.plan));
            }
            if (ex_hill) {
                VehicleParameters p;
                if (!ex_params.empty()) p = VehicleParameters::load(ex_params);
                Route route = default_hill_route();
                HillDemoReport rep = run_hill_demo(route, p, Environment{});
                write_file(ex_out, "hill_solo.txt", hill_panels_text(route, rep.solo.records));
                write_file(ex_out, "hill_gap_keeping.txt",
                           hill_panels_text(route, rep.gap_keeping.records));
                write_file(ex_out, "hill_cooperative.txt",
                           hill_panels_text(route, rep.cooperative.records));
            }
            return 0;
        }

        if (app.got_subcommand(gen_cmd)) {
            RoadNetwork net = RoadNetwork::load(gen_network);
            auto assigns = gen_case_study_assignments(net, gen_seed);
            std::string text = assignments_to_json_text(assigns);
            if (gen_out.empty()) {
                std::cout << text;
            } else {
                std::filesystem::path path(gen_out);
                if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
                std::ofstream out(path);
                if (!out) throw ParseError("cannot write " + gen_out);
                out << text;
                std::cerr << "wrote " << gen_out << " (" << assigns.size() << " vehicles)\n";
            }
            return 0;
        }
    } catch (const ParseError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const RangeError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const ConnectivityError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {  // infeasible plans, violated constraints, no merge
        std::cerr << "infeasible: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
