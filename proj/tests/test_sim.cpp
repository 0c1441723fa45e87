#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "sharedspace/errors.hpp"
#include "sharedspace/sim.hpp"
#include "sharedspace/trajectory.hpp"

using namespace sharedspace;

namespace {

AgentSpec ped_spec(int id, Vec2 origin, Vec2 destination, double speed = 1.3) {
    AgentSpec a;
    a.id = id;
    a.kind = UserKind::Pedestrian;
    a.origin = origin;
    a.destination = destination;
    a.desired_speed = speed;
    return a;
}

AgentSpec car_spec(int id, Vec2 origin, Vec2 destination, double speed = 8.0) {
    AgentSpec a;
    a.id = id;
    a.kind = UserKind::Vehicle;
    a.origin = origin;
    a.destination = destination;
    a.desired_speed = speed;
    return a;
}

Scenario empty_scenario(std::uint64_t seed = 7) {
    Scenario s;
    s.name = "test";
    s.sim.seed = seed;
    s.sim.max_time = 120.0;
    return s;
}

}  // namespace

TEST_CASE("run: a lone agent walks straight to its goal") {
    Scenario s = empty_scenario();
    s.agents.push_back(ped_spec(1, {0, 0}, {20, 0}));
    const auto log = run_scenario(s);
    CHECK_FALSE(log.timed_out);

    // Up to the arrival slack the walk is straight at the desired speed:
    // 20 m at 1.3 m/s is just over 15 s.
    const auto& last = log.records.back();
    CHECK(last.time < 16.5);
    for (const auto& r : log.records) {
        CHECK(std::abs(r.position.y) < 1e-9);
        CHECK(r.speed <= 1.3 * 1.3 + 1e-9);
    }
}

TEST_CASE("run: an empty step advances time only") {
    Scenario s = empty_scenario();
    s.agents.push_back(ped_spec(1, {0, 0}, {5, 0}));
    Simulation sim(s);
    sim.mutable_state().agents[0].reached_goal = true;
    const int tick = sim.state().tick;
    sim.step();
    CHECK(sim.state().tick == tick + 1);
    CHECK(sim.state().time == doctest::Approx((tick + 1) * s.sim.dt));
}

TEST_CASE("run: identical seeds give byte-identical logs") {
    Scenario s = empty_scenario(123);
    s.agents.push_back(ped_spec(1, {0, 0}, {15, 2}));
    s.agents.push_back(ped_spec(2, {15, 0}, {0, 2}));
    s.agents.push_back(car_spec(9, {-30, -4}, {40, -4}));

    const auto a = trajectories_to_string(run_scenario(s));
    const auto b = trajectories_to_string(run_scenario(s));
    CHECK(a == b);
}

TEST_CASE("run: symmetric head-on pedestrians mirror each other") {
    Scenario s = empty_scenario();
    s.agents.push_back(ped_spec(1, {-6, 0}, {6, 0}));
    s.agents.push_back(ped_spec(2, {6, 0}, {-6, 0}));
    Simulation sim(s);
    for (int i = 0; i < 100; ++i) {
        sim.step();
        const auto& a = sim.state().agents[0];
        const auto& b = sim.state().agents[1];
        CHECK(a.position.x == doctest::Approx(-b.position.x).epsilon(1e-9));
        CHECK(a.position.y == doctest::Approx(b.position.y).epsilon(1e-9));
    }
}

TEST_CASE("run: non-finite state aborts with a diagnostic") {
    Scenario s = empty_scenario();
    s.agents.push_back(ped_spec(1, {0, 0}, {5, 0}));
    Simulation sim(s);
    sim.mutable_state().agents[0].velocity = {std::nan(""), 0.0};
    CHECK_THROWS_AS(sim.step(), SimulationError);
}

TEST_CASE("detect: parallel non-converging paths spawn nothing") {
    Scenario s = empty_scenario();
    s.agents.push_back(car_spec(9, {-30, 0}, {40, 0}));
    s.agents.push_back(ped_spec(1, {-5, 6}, {30, 6}));
    Simulation sim(s);
    CHECK(sim.detect_interactions(4.0).empty());
}

TEST_CASE("detect: pedestrian already in the corridor is reactive, not a game") {
    Scenario s = empty_scenario();
    s.agents.push_back(car_spec(9, {0, 0}, {40, 0}));
    s.agents.push_back(ped_spec(1, {4, 0.2}, {4, 8}));
    Simulation sim(s);
    const auto found = sim.detect_interactions(4.0);
    REQUIRE(found.size() == 1);
    CHECK(found[0].kind == InteractionClass::Reactive);

    const auto log = run_scenario(s);
    CHECK(log.games.empty());  // reactive never plays a game
    CHECK_FALSE(log.timed_out);
}

TEST_CASE("detect: crossing group ahead of a car is an implicit interaction") {
    Scenario s = empty_scenario();
    s.agents.push_back(car_spec(9, {-15, 0}, {40, 0}));
    s.agents.push_back(ped_spec(1, {0, -4}, {0, 8}));
    s.agents.push_back(ped_spec(2, {0.7, -4}, {0.7, 8}));
    GroupSpec g;
    g.id = 500;
    g.members = {1, 2};
    s.groups.push_back(g);

    Simulation sim(s);
    const auto found = sim.detect_interactions(4.0);
    REQUIRE(found.size() == 1);
    CHECK(found[0].kind == InteractionClass::Implicit);
    REQUIRE(found[0].participants.size() == 2);
    bool has_group = false;
    for (const auto& p : found[0].participants) {
        if (p.kind == ParticipantRef::Kind::Group) has_group = true;
    }
    CHECK(has_group);
}

TEST_CASE("detect: trailing same-direction vehicle classifies as car following") {
    Scenario s = empty_scenario();
    s.agents.push_back(car_spec(8, {0, 0}, {60, 0}, 9.0));
    s.agents.push_back(car_spec(9, {12, 0}, {72, 0}, 5.0));
    Simulation sim(s);
    const auto found = sim.detect_interactions(4.0);
    REQUIRE(found.size() == 1);
    CHECK(found[0].kind == InteractionClass::CarFollowing);
    CHECK(found[0].rear_vehicle == 8);
    CHECK(found[0].lead_vehicle == 9);
}

TEST_CASE("run: car following never rams the slow lead") {
    Scenario s = empty_scenario();
    s.agents.push_back(car_spec(8, {0, 0}, {80, 0}, 9.0));
    s.agents.push_back(car_spec(9, {14, 0}, {94, 0}, 4.0));
    const auto log = run_scenario(s);
    CHECK_FALSE(log.timed_out);

    std::map<double, std::pair<double, double>> xs;  // time -> (rear, lead)
    for (const auto& r : log.records) {
        if (r.agent_id == 8) xs[r.time].first = r.position.x;
        if (r.agent_id == 9) xs[r.time].second = r.position.x;
    }
    for (const auto& [t, pair] : xs) {
        if (pair.second <= 80.0) {  // until the lead exits
            CHECK(pair.second - pair.first > 3.9);
        }
    }
}

TEST_CASE("run: every implicit interaction logs exactly one game event") {
    Scenario s = empty_scenario(99);
    s.sim.normal_vehicle_speed = 8.0;
    s.agents.push_back(car_spec(9, {-35, 0}, {45, 0}));
    s.agents.push_back(ped_spec(1, {4, -6}, {4, 8}, 1.1));
    const auto log = run_scenario(s);
    CHECK_FALSE(log.timed_out);
    REQUIRE(log.games.size() >= 1);

    std::map<int, int> games_per_interaction;
    for (const auto& g : log.games) games_per_interaction[g.interaction_id] += 1;
    for (const auto& [id, count] : games_per_interaction) CHECK(count == 1);
}

TEST_CASE("run: speed caps and the no-tunneling bound hold every tick") {
    Scenario s = empty_scenario(5);
    s.sim.normal_vehicle_speed = 8.0;
    s.agents.push_back(car_spec(9, {-35, 0}, {45, 0}));
    s.agents.push_back(ped_spec(1, {4, -6}, {4, 8}));
    s.agents.push_back(ped_spec(2, {2, 6}, {2, -8}));
    const auto log = run_scenario(s);

    std::map<int, Vec2> last_pos;
    std::map<int, bool> seen;
    for (const auto& r : log.records) {
        const double cap = r.kind == UserKind::Vehicle ? s.forces.vehicle_speed_limit
                                                       : 1.3 * s.forces.ped_speed_cap_factor;
        CHECK(r.speed <= cap + 1e-9);
        if (seen[r.agent_id]) {
            const double hop = distance(last_pos[r.agent_id], r.position);
            CHECK(hop < 2.0);  // well under any conflict radius
        }
        last_pos[r.agent_id] = r.position;
        seen[r.agent_id] = true;
    }
}

TEST_CASE("run: deviate tracks the moving vehicle and clears when it leaves view") {
    // A pedestrian walking parallel and close to the road, with payoffs
    // tilted so the follower prefers deviating.
    Scenario s = empty_scenario(3);
    s.sim.normal_vehicle_speed = 8.0;
    // Make deviate dominate for the pedestrian follower.
    s.payoffs.set_base(Strategy::Continue, Strategy::Deviate, 4.0, 4.0);
    s.payoffs.set_base(Strategy::Decelerate, Strategy::Deviate, 2.0, 4.0);
    s.payoffs.set_base(Strategy::Continue, Strategy::Decelerate, 4.0, 0.0);

    // At the typical walking speed the car claims priority; the pedestrian
    // prefers passing behind it.
    s.sim.normal_ped_speed = 1.2;
    s.agents.push_back(car_spec(9, {-30, 0}, {50, 0}));
    s.agents.push_back(ped_spec(1, {2, -2.2}, {2, 9}, 1.2));

    Simulation sim(s);
    bool deviated = false;
    bool target_moved = false;
    Vec2 last_target;
    for (int i = 0; i < 600 && !sim.finished(); ++i) {
        sim.step();
        const auto& ped = sim.agent(1);
        if (ped.active_strategy &&
            ped.active_strategy->strategy == Strategy::Deviate && ped.strategy_target) {
            if (deviated && distance(*ped.strategy_target, last_target) > 1e-6) {
                target_moved = true;
            }
            deviated = true;
            last_target = *ped.strategy_target;
        }
    }
    CHECK(deviated);
    CHECK(target_moved);
    // The strategy cleared once the car left the field of view.
    CHECK_FALSE(sim.agent(1).active_strategy.has_value());
}

TEST_CASE("run: engine split and reform keep the partition invariant") {
    Scenario s = empty_scenario(21);
    s.sim.normal_vehicle_speed = 8.0;
    s.agents.push_back(car_spec(9, {-40, 0}, {50, 0}));
    for (int i = 0; i < 4; ++i) {
        s.agents.push_back(ped_spec(1 + i, {-0.6 + 0.6 * (i % 2), -5.0 - 0.7 * (i / 2)},
                                    {-0.6 + 0.6 * (i % 2), 8.0 - 0.7 * (i / 2)}, 1.3));
    }
    GroupSpec g;
    g.id = 500;
    g.members = {1, 2, 3, 4};
    g.params.split_base_probability = 1.0;  // deterministic split at onset
    s.groups.push_back(g);

    Simulation sim(s);
    bool split_seen = false;
    for (int i = 0; i < 1200 && !sim.finished(); ++i) {
        sim.step();
        // Partition invariant: every member belongs to exactly one active
        // group.
        for (int member = 1; member <= 4; ++member) {
            int owners = 0;
            for (const auto& grp : sim.state().groups) {
                if (grp.active && grp.has_member(member)) ++owners;
            }
            CHECK(owners == 1);
        }
        for (const auto& grp : sim.state().groups) {
            if (grp.id == 500 && grp.is_split()) split_seen = true;
        }
    }
    CHECK(split_seen);
    // After the run the parent must be whole again (reform on regrouping).
    bool parent_active = false;
    for (const auto& grp : sim.state().groups) {
        if (grp.id == 500) {
            parent_active = grp.active;
            CHECK(grp.members.size() == 4);
            CHECK(grp.leader == grp.original_leader);
        }
    }
    CHECK(parent_active);
}

TEST_CASE("run: waiting happens only in safe zones") {
    // The leader cluster waits ahead; when the car gets close (danger) all
    // members must be back in the walking state.
    Scenario s = empty_scenario(21);
    s.sim.normal_vehicle_speed = 8.0;
    s.agents.push_back(car_spec(9, {-60, 0}, {45, 0}));
    s.agents.push_back(ped_spec(1, {0, -2.4}, {0, 9}));
    s.agents.push_back(ped_spec(2, {0, -8.4}, {0, 3}));
    GroupSpec g;
    g.id = 500;
    g.members = {1, 2};
    s.groups.push_back(g);

    Simulation sim(s);
    bool saw_danger = false;
    bool saw_waiting = false;
    for (int i = 0; i < 900 && !sim.finished(); ++i) {
        sim.step();
        for (std::size_t gi = 0; gi < sim.state().groups.size(); ++gi) {
            const auto& grp = sim.state().groups[gi];
            if (!grp.active) continue;
            const ZoneClass zone = sim.group_zones()[gi];
            saw_danger = saw_danger || zone == ZoneClass::Danger;
            for (int id : grp.members) {
                const FsmState fsm = sim.agent(id).fsm;
                saw_waiting = saw_waiting || fsm == FsmState::Waiting;
                if (fsm != FsmState::Walking) {
                    CHECK(zone == ZoneClass::Safe);
                }
            }
        }
    }
    CHECK(saw_danger);
    CHECK(saw_waiting);
}

TEST_CASE("run: waypoints advance through an obstacle detour") {
    Scenario s = empty_scenario(31);
    s.obstacles.push_back(Polygon::normalized({{4, -2}, {8, -2}, {8, 2}, {4, 2}}));
    s.agents.push_back(ped_spec(1, {0, 0}, {12, 0}));

    Simulation sim(s);
    REQUIRE(sim.agent(1).path.waypoints.size() > 2);  // must route around the box
    std::size_t max_index = 0;
    while (!sim.finished() && sim.state().time < 60.0) {
        sim.step();
        max_index = std::max(max_index, sim.agent(1).waypoint_index);
        for (const auto& poly : s.obstacles) {
            CHECK_FALSE(poly.strictly_contains(sim.agent(1).position));
        }
    }
    CHECK(sim.finished());
    CHECK(max_index >= 2);  // interior waypoints were consumed in order
}
