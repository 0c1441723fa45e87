#include <doctest.h>

#include <chrono>
#include <cstdio>
#include <fstream>

#include "sharedspace/errors.hpp"
#include "sharedspace/scenario.hpp"
#include "sharedspace/sim.hpp"
#include "sharedspace/trajectory.hpp"

using namespace sharedspace;

namespace {

const char* kMinimalScenario = R"({
  "version": 1,
  "name": "minimal",
  "seed": 4,
  "agents": [
    {"id": 1, "kind": "pedestrian", "origin": [0, 0], "destination": [5, 0]}
  ]
})";

}  // namespace

TEST_CASE("load: minimal scenario applies defaults and warns about payoffs") {
    const Scenario s = load_scenario_from_string(kMinimalScenario, "minimal");
    CHECK(s.name == "minimal");
    CHECK(s.sim.seed == 4);
    CHECK(s.agents.size() == 1);
    CHECK(s.agents[0].kind == UserKind::Pedestrian);
    CHECK(s.payoffs.base_leader(Strategy::Continue, Strategy::Continue) == -100.0);
    REQUIRE(s.warnings.size() == 1);
    CHECK(s.warnings[0].find("payoffs") != std::string::npos);
}

TEST_CASE("load: group referencing a vehicle id is rejected") {
    const char* text = R"({
      "version": 1,
      "agents": [
        {"id": 1, "kind": "pedestrian", "origin": [0, 0], "destination": [5, 0]},
        {"id": 2, "kind": "vehicle", "origin": [0, 5], "destination": [5, 5]}
      ],
      "groups": [{"id": 10, "members": [1, 2]}]
    })";
    CHECK_THROWS_WITH_AS(load_scenario_from_string(text, "bad"),
                         doctest::Contains("group member must be pedestrian"), ScenarioError);
}

TEST_CASE("load: named field errors") {
    CHECK_THROWS_WITH_AS(load_scenario_from_string(R"({"version": 1})", "x"),
                         doctest::Contains("agents"), ScenarioError);

    CHECK_THROWS_WITH_AS(
        load_scenario_from_string(R"({
          "version": 1,
          "obstacles": [{"vertices": [[0,0],[4,0],[4,4],[0,4]]}],
          "agents": [{"id": 1, "kind": "pedestrian", "origin": [2, 2], "destination": [9, 9]}]
        })",
                                  "x"),
        doctest::Contains("origin: inside obstacles[0]"), ScenarioError);

    CHECK_THROWS_WITH_AS(
        load_scenario_from_string(R"({
          "version": 1,
          "payoffs": {"F": {"F27": 1.0}},
          "agents": [{"id": 1, "kind": "pedestrian", "origin": [0, 0], "destination": [5, 0]}]
        })",
                                  "x"),
        doctest::Contains("F27"), ScenarioError);

    CHECK_THROWS_WITH_AS(
        load_scenario_from_string(R"({
          "version": 1,
          "payoffs": {"base": {"continue|continue": [7, 0]}},
          "agents": [{"id": 1, "kind": "pedestrian", "origin": [0, 0], "destination": [5, 0]}]
        })",
                                  "x"),
        doctest::Contains("ordinal"), ScenarioError);

    CHECK_THROWS_WITH_AS(
        load_scenario_from_string(R"({
          "version": 1,
          "agents": [
            {"id": 1, "kind": "pedestrian", "origin": [0, 0], "destination": [5, 0]},
            {"id": 1, "kind": "pedestrian", "origin": [1, 0], "destination": [6, 0]}
          ]
        })",
                                  "x"),
        doctest::Contains("duplicate agent id"), ScenarioError);
}

TEST_CASE("load: payoff base entry feeds the matrix") {
    const char* text = R"({
      "version": 1,
      "payoffs": {"base": {"continue|continue": [-50, -50]}},
      "agents": [{"id": 1, "kind": "pedestrian", "origin": [0, 0], "destination": [5, 0]}]
    })";
    const Scenario s = load_scenario_from_string(text, "base");
    CHECK(s.payoffs.base_leader(Strategy::Continue, Strategy::Continue) == -50.0);
    CHECK(s.payoffs.base_follower(Strategy::Continue, Strategy::Continue) == -50.0);
    // Unspecified cells keep defaults.
    CHECK(s.payoffs.base_leader(Strategy::Decelerate, Strategy::Continue) == 2.0);
}

TEST_CASE("round-trip: load(save(load(f))) equals load(f)") {
    for (const auto& name : bundled_scenario_names()) {
        const Scenario first = load_scenario_from_string(bundled_scenario(name), name);
        const std::string saved = save_scenario(first);
        const Scenario second = load_scenario_from_string(saved, name + "-roundtrip");
        CHECK(save_scenario(second) == saved);
    }
}

TEST_CASE("bundled scenarios: all present and loadable") {
    CHECK(bundled_scenario_names().size() == 3);
    for (const auto& name : bundled_scenario_names()) {
        REQUIRE(bundled_scenario(name) != nullptr);
        const Scenario s = load_scenario_from_string(bundled_scenario(name), name);
        CHECK(s.name == name);
        CHECK_FALSE(s.agents.empty());
    }
    CHECK(bundled_scenario("scenario9") == nullptr);
}

TEST_CASE("trajectory file: header, columns and fixed decimals") {
    TrajectoryLog log;
    log.dt = 0.1;
    TickRecord r;
    r.agent_id = 3;
    r.kind = UserKind::Vehicle;
    r.time = 0.1;
    r.position = {1.25, -2.5};
    r.speed = 8.0;
    r.group_id = -1;
    log.records.push_back(r);

    const std::string text = trajectories_to_string(log);
    CHECK(text ==
          "agent_id,kind,time,x,y,speed,fsm_state,strategy,group_id\n"
          "3,vehicle,0.100000,1.250000,-2.500000,8.000000,-,-,-1\n");
}

TEST_CASE("trajectory file: write/read round trip") {
    Scenario s;
    s.sim.seed = 9;
    AgentSpec a;
    a.id = 1;
    a.kind = UserKind::Pedestrian;
    a.origin = {0, 0};
    a.destination = {6, 0};
    a.desired_speed = 1.25;
    s.agents.push_back(a);

    const TrajectoryLog log = run_scenario(s);
    const std::string path = "roundtrip_test_log.csv";
    write_trajectories(log, path);
    const TrajectoryLog parsed = read_trajectory_log(path);
    std::remove(path.c_str());

    REQUIRE(parsed.records.size() == log.records.size());
    CHECK(parsed.dt == doctest::Approx(log.dt));
    // Values survive up to the fixed 6-decimal precision.
    for (std::size_t i = 0; i < log.records.size(); ++i) {
        CHECK(parsed.records[i].agent_id == log.records[i].agent_id);
        CHECK(parsed.records[i].time ==
              doctest::Approx(log.records[i].time).epsilon(1e-6));
        CHECK(parsed.records[i].position.x ==
              doctest::Approx(log.records[i].position.x).epsilon(1e-6));
    }

    // Timestamps strictly increase per agent with uniform spacing.
    double prev = -1.0;
    for (const auto& r : parsed.records) {
        if (r.agent_id != 1) continue;
        CHECK(r.time > prev);
        prev = r.time;
    }
}

namespace {

TrajectoryLog synthetic_log(Vec2 offset, double speed_bias) {
    TrajectoryLog log;
    log.dt = 0.1;
    for (int tick = 0; tick <= 50; ++tick) {
        TickRecord r;
        r.agent_id = 1;
        r.kind = UserKind::Pedestrian;
        r.time = tick * 0.1;
        r.position = Vec2{0.25 * tick, 0.5} + offset;
        r.speed = 1.25 + speed_bias;
        r.group_id = -1;
        log.records.push_back(r);
    }
    return log;
}

}  // namespace

TEST_CASE("deviation: identical logs give exactly zero") {
    const auto log = synthetic_log({0, 0}, 0.0);
    const auto traj = trajectory_deviation(log, log);
    const auto speed = speed_deviation(log, log);
    CHECK(traj.per_agent.at(1) == 0.0);
    CHECK(traj.per_kind.at(UserKind::Pedestrian) == 0.0);
    CHECK(speed.per_agent.at(1) == 0.0);
}

TEST_CASE("deviation: constant offsets come out exactly") {
    const auto sim = synthetic_log({0, 0}, 0.0);
    const auto ref = synthetic_log({1.0, 0.0}, 0.5);
    CHECK(trajectory_deviation(sim, ref).per_agent.at(1) == 1.0);
    CHECK(speed_deviation(sim, ref).per_agent.at(1) == 0.5);
}

TEST_CASE("deviation: piecewise offset averages by hand integration") {
    // First half offset 1 m, second half 3 m: mean 2 m over 50 samples
    // (26 at 1.0, then 25 at 3.0 -> (26*1 + 25*3) / 51).
    auto sim = synthetic_log({0, 0}, 0.0);
    auto ref = synthetic_log({0, 0}, 0.0);
    for (std::size_t i = 0; i < ref.records.size(); ++i) {
        ref.records[i].position.y += (i <= 25) ? 1.0 : 3.0;
    }
    const double expected = (26.0 * 1.0 + 25.0 * 3.0) / 51.0;
    CHECK(trajectory_deviation(sim, ref).per_agent.at(1) == doctest::Approx(expected));
}

TEST_CASE("deviation: resampling interpolates reference timestamps") {
    const auto sim = synthetic_log({0, 0}, 0.0);
    // Reference sampled at half the rate; linear interpolation still lands
    // on the straight line, so positions agree except for roundoff.
    TrajectoryLog ref;
    ref.dt = 0.2;
    for (int tick = 0; tick <= 50; tick += 2) {
        TickRecord r;
        r.agent_id = 1;
        r.kind = UserKind::Pedestrian;
        r.time = tick * 0.1;
        r.position = {0.25 * tick, 0.5};
        r.speed = 1.25;
        r.group_id = -1;
        ref.records.push_back(r);
    }
    CHECK(trajectory_deviation(sim, ref).per_agent.at(1) ==
          doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("deviation: disjoint time ranges raise an error") {
    const auto sim = synthetic_log({0, 0}, 0.0);
    auto ref = synthetic_log({0, 0}, 0.0);
    for (auto& r : ref.records) r.time += 100.0;
    CHECK_THROWS_AS(trajectory_deviation(sim, ref), ComparisonError);
}

TEST_CASE("deviation: id map matches differently numbered agents") {
    const auto sim = synthetic_log({0, 0}, 0.0);
    auto ref = synthetic_log({2.0, 0.0}, 0.0);
    for (auto& r : ref.records) r.agent_id = 42;
    const std::map<int, int> id_map{{1, 42}};
    CHECK(trajectory_deviation(sim, ref, id_map).per_agent.at(1) == 2.0);
    CHECK_THROWS_AS(trajectory_deviation(sim, ref), ComparisonError);
}

TEST_CASE("deviation: per-kind aggregation averages the agents of that kind") {
    TrajectoryLog sim;
    TrajectoryLog ref;
    sim.dt = ref.dt = 0.1;
    for (int agent = 1; agent <= 2; ++agent) {
        for (int tick = 0; tick <= 10; ++tick) {
            TickRecord r;
            r.agent_id = agent;
            r.kind = UserKind::Pedestrian;
            r.time = tick * 0.1;
            r.position = {0.1 * tick, 0.0};
            r.speed = 1.0;
            r.group_id = -1;
            sim.records.push_back(r);
            r.position.y += agent == 1 ? 1.0 : 3.0;
            ref.records.push_back(r);
        }
    }
    const auto stats = trajectory_deviation(sim, ref);
    CHECK(stats.per_agent.at(1) == 1.0);
    CHECK(stats.per_agent.at(2) == 3.0);
    CHECK(stats.per_kind.at(UserKind::Pedestrian) == 2.0);
}

TEST_CASE("bundled demos: complete under default parameters within the time budget") {
    for (const auto& name : bundled_scenario_names()) {
        const Scenario s = load_scenario_from_string(bundled_scenario(name), name);
        const auto start = std::chrono::steady_clock::now();
        const TrajectoryLog log = run_scenario(s);
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        CHECK_FALSE(log.timed_out);
        CHECK(wall < 60.0);
    }
}
