#include <benchmark/benchmark.h>

#include "sharedspace/game.hpp"
#include "sharedspace/planner.hpp"
#include "sharedspace/rng.hpp"
#include "sharedspace/scenario.hpp"
#include "sharedspace/sim.hpp"

namespace {

using namespace sharedspace;

PayoffMatrix worst_case_matrix() {
    Rng rng(7);
    PayoffMatrix m;
    const Strategy all[] = {Strategy::Continue, Strategy::Decelerate, Strategy::Deviate};
    m.leader_strategies = {all[0], all[1], all[2]};
    for (int f = 0; f < 3; ++f) {
        m.followers.push_back({});
        m.follower_strategies.push_back({all[0], all[1], all[2]});
    }
    m.leader_payoff.resize(3);
    for (auto& row : m.leader_payoff) {
        row.resize(m.joint_count());
        for (auto& cell : row) cell = rng.uniform(-100, 4);
    }
    m.follower_payoff.assign(3, {});
    for (auto& table : m.follower_payoff) {
        table.resize(3);
        for (auto& row : table) {
            row.resize(3);
            for (auto& cell : row) cell = rng.uniform(-100, 4);
        }
    }
    return m;
}

void solve_stackelberg_3x3x3(benchmark::State& state) {
    const PayoffMatrix m = worst_case_matrix();
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_stackelberg(m));
    }
}
BENCHMARK(solve_stackelberg_3x3x3);

void build_visibility_graph_grid(benchmark::State& state) {
    std::vector<ObstaclePolygon> obstacles;
    for (int i = 0; i < state.range(0); ++i) {
        const double x = -15.0 + 6.0 * (i % 6);
        const double y = -9.0 + 6.0 * (i / 6);
        obstacles.push_back(
            Polygon::normalized({{x, y}, {x + 2, y}, {x + 2, y + 2}, {x, y + 2}}));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            build_visibility_graph(obstacles, {-20, 0}, {20, 0}));
    }
}
BENCHMARK(build_visibility_graph_grid)->Arg(4)->Arg(12);

void simulation_step_demo(benchmark::State& state) {
    const Scenario scenario =
        load_scenario_from_string(bundled_scenario("scenario1"), "scenario1");
    Simulation sim(scenario);
    for (auto _ : state) {
        sim.step();
        if (sim.finished()) {
            state.PauseTiming();
            sim = Simulation(scenario);
            state.ResumeTiming();
        }
    }
}
BENCHMARK(simulation_step_demo)->Unit(benchmark::kMicrosecond);

void full_run_scenario2(benchmark::State& state) {
    const Scenario scenario =
        load_scenario_from_string(bundled_scenario("scenario2"), "scenario2");
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_scenario(scenario));
    }
}
BENCHMARK(full_run_scenario2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
