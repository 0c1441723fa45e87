#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "sharedspace/errors.hpp"
#include "sharedspace/scenario.hpp"
#include "sharedspace/sim.hpp"
#include "sharedspace/trajectory.hpp"

namespace {

using namespace sharedspace;

std::string output_directory(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("SHAREDSPACE_OUT_DIR")) return env;
    return ".";
}

std::string join_path(const std::string& dir, const std::string& file) {
    if (dir.empty() || dir == ".") return file;
    if (dir.back() == '/') return dir + file;
    return dir + "/" + file;
}

void print_warnings(const Scenario& scenario) {
    for (const auto& w : scenario.warnings) {
        std::cerr << "warning: " << w << "\n";
    }
}

int run_and_write(const Scenario& scenario, std::optional<std::uint64_t> seed,
                  std::optional<double> max_time, const std::string& out_dir) {
    print_warnings(scenario);
    const TrajectoryLog log = run_scenario(scenario, seed, max_time);

    const std::string name = scenario.name.empty() ? "scenario" : scenario.name;
    const std::string out_path = join_path(out_dir, name + "_trajectories.csv");
    write_trajectories(log, out_path);

    std::map<int, bool> seen;
    for (const auto& r : log.records) seen[r.agent_id] = true;

    std::cout << name << ": " << (log.timed_out ? "timed out" : "completed") << " at t="
              << (log.records.empty() ? 0.0 : log.records.back().time) << " s, "
              << seen.size() << " agents, " << log.games.size() << " game(s)\n";
    for (const auto& g : log.games) {
        std::cout << "  t=" << g.tick * log.dt << " game #" << g.interaction_id
                  << ": leader " << (g.leader.kind == ParticipantRef::Kind::Group ? "group " : "agent ")
                  << g.leader.id << " -> " << to_string(g.leader_strategy);
        for (std::size_t i = 0; i < g.followers.size(); ++i) {
            std::cout << ", "
                      << (g.followers[i].kind == ParticipantRef::Kind::Group ? "group " : "agent ")
                      << g.followers[i].id << " -> " << to_string(g.follower_strategies[i]);
        }
        std::cout << "\n";
    }
    std::cout << "trajectories: " << out_path << "\n";
    return log.timed_out ? 2 : 0;
}

int cmd_run(const std::string& path, std::optional<std::uint64_t> seed,
            std::optional<double> max_time, const std::string& out_dir) {
    const Scenario scenario = load_scenario(path);
    return run_and_write(scenario, seed, max_time, out_dir);
}

int cmd_validate(const std::string& path) {
    const Scenario scenario = load_scenario(path);
    print_warnings(scenario);
    std::cout << path << ": OK (" << scenario.agents.size() << " agents, "
              << scenario.groups.size() << " groups, " << scenario.obstacles.size()
              << " obstacles)\n";
    return 0;
}

int cmd_demo(const std::string& name, std::optional<std::uint64_t> seed,
             std::optional<double> max_time, const std::string& out_dir) {
    const char* text = bundled_scenario(name);
    if (!text) {
        std::cerr << "unknown demo '" << name << "'; available:";
        for (const auto& n : bundled_scenario_names()) std::cerr << " " << n;
        std::cerr << "\n";
        return 1;
    }
    const Scenario scenario = load_scenario_from_string(text, name);
    return run_and_write(scenario, seed, max_time, out_dir);
}

int cmd_compare(const std::string& sim_path, const std::string& ref_path,
                const std::string& report_path) {
    const TrajectoryLog sim = read_trajectory_log(sim_path);
    const TrajectoryLog ref = read_trajectory_log(ref_path);

    const DeviationStats traj = trajectory_deviation(sim, ref);
    const DeviationStats speed = speed_deviation(sim, ref);

    std::string report;
    report += "deviation report\n";
    report += "sim: " + sim_path + "\n";
    report += "ref: " + ref_path + "\n\n";
    report += "agent_id,kind,trajectory_dev_m,speed_dev_mps,samples\n";

    std::map<int, UserKind> kinds;
    for (const auto& r : sim.records) kinds[r.agent_id] = r.kind;
    char line[160];
    for (const auto& [id, dev] : traj.per_agent) {
        std::snprintf(line, sizeof(line), "%d,%s,%.6f,%.6f,%d\n", id,
                      to_string(kinds[id]), dev, speed.per_agent.at(id),
                      traj.samples.at(id));
        report += line;
    }
    report += "\nkind,trajectory_dev_m,speed_dev_mps\n";
    for (const auto& [kind, dev] : traj.per_kind) {
        std::snprintf(line, sizeof(line), "%s,%.6f,%.6f\n", to_string(kind), dev,
                      speed.per_kind.at(kind));
        report += line;
    }

    std::ofstream out(report_path, std::ios::binary);
    if (!out) {
        std::cerr << "cannot write report: " << report_path << "\n";
        return 1;
    }
    out << report;
    std::cout << report;

    // Plot-ready per-timestamp series next to the report.
    const std::string series_path = report_path + ".series.csv";
    std::ofstream series(series_path, std::ios::binary);
    series << "time,agent_id,position_deviation,speed_deviation\n";
    for (const auto& p : deviation_series(sim, ref)) {
        std::snprintf(line, sizeof(line), "%.6f,%d,%.6f,%.6f\n", p.time, p.agent_id,
                      p.position_deviation, p.speed_deviation);
        series << line;
    }
    std::cout << "series: " << series_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Shared-space traffic simulator: pedestrians, social groups and "
                 "vehicles negotiating trajectories"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_dir_flag;
    std::string demo_name;
    std::string sim_log;
    std::string ref_log;
    std::string report_path;
    std::uint64_t seed_flag = 0;
    double max_time_flag = 0.0;

    auto* run = app.add_subcommand("run", "Run a scenario file and write trajectories");
    run->add_option("scenario", scenario_path, "Scenario JSON file")->required();
    auto* run_seed = run->add_option("--seed", seed_flag, "Override the scenario seed");
    auto* run_time = run->add_option("--max-time", max_time_flag, "Override max time [s]");
    run->add_option("--out", out_dir_flag,
                    "Output directory (default: $SHAREDSPACE_OUT_DIR or .)");

    auto* validate = app.add_subcommand("validate", "Parse and validate a scenario file");
    validate->add_option("scenario", scenario_path, "Scenario JSON file")->required();

    auto* compare = app.add_subcommand(
        "compare", "Compare a simulated trajectory log against a reference log");
    compare->add_option("sim", sim_log, "Simulated trajectory CSV")->required();
    compare->add_option("ref", ref_log, "Reference trajectory CSV")->required();
    compare->add_option("--report", report_path, "Report output path")->required();

    auto* demo = app.add_subcommand("demo", "Run a bundled demo scenario");
    demo->add_option("name", demo_name, "scenario1 | scenario2 | scenario3")->required();
    auto* demo_seed = demo->add_option("--seed", seed_flag, "Override the scenario seed");
    auto* demo_time = demo->add_option("--max-time", max_time_flag, "Override max time [s]");
    demo->add_option("--out", out_dir_flag,
                     "Output directory (default: $SHAREDSPACE_OUT_DIR or .)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            return cmd_run(scenario_path,
                           run_seed->count() ? std::optional<std::uint64_t>(seed_flag)
                                             : std::nullopt,
                           run_time->count() ? std::optional<double>(max_time_flag)
                                             : std::nullopt,
                           output_directory(out_dir_flag));
        }
        if (validate->parsed()) {
            return cmd_validate(scenario_path);
        }
        if (compare->parsed()) {
            return cmd_compare(sim_log, ref_log, report_path);
        }
        if (demo->parsed()) {
            return cmd_demo(demo_name,
                            demo_seed->count() ? std::optional<std::uint64_t>(seed_flag)
                                               : std::nullopt,
                            demo_time->count() ? std::optional<double>(max_time_flag)
                                               : std::nullopt,
                            output_directory(out_dir_flag));
        }
    } catch (const ScenarioError& e) {
        std::cerr << "scenario error: " << e.what() << "\n";
        return 1;
    } catch (const PlanningError& e) {
        std::cerr << "planning error: " << e.what() << "\n";
        return 1;
    } catch (const ComparisonError& e) {
        std::cerr << "comparison error: " << e.what() << "\n";
        return 1;
    } catch (const SimulationError& e) {
        std::cerr << "simulation error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
