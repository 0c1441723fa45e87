#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sharedspace/forces.hpp"
#include "sharedspace/game.hpp"
#include "sharedspace/groups.hpp"
#include "sharedspace/planner.hpp"
#include "sharedspace/road_user.hpp"

namespace sharedspace {

// Engine-level constants (everything not owned by a specific layer).
struct SimParams {
    double dt = 0.1;
    std::uint64_t seed = 1;
    double max_time = 120.0;
    double conflict_horizon = 4.0;      // s of constant-velocity extrapolation
    double conflict_margin = 0.5;       // m added to the radii sum
    double hold_margin = 5.0;           // m: approaching pairs closer than
                                        // reach + hold_margin keep an
                                        // interaction alive
    double normal_ped_speed = 1.34;     // typical walking speed (factor evaluation)
    double normal_vehicle_speed = 10.0; // typical driving speed (factor evaluation)
    double moving_epsilon = 0.05;       // m/s; slower agents count as standing
    double heading_alignment = 0.866;   // cos threshold for same-direction driving
    double waypoint_clearance = 0.4;    // m, planner corner offset
};

struct AgentSpec {
    int id = -1;
    UserKind kind = UserKind::Pedestrian;
    Vec2 origin;
    Vec2 destination;
    double desired_speed = 0.0;    // 0: kind default
    double relaxation_time = 0.0;  // 0: kind default
    double radius = 0.2;
    VehicleDims dims;
};

struct GroupSpec {
    int id = -1;
    std::vector<int> members;
    GroupParams params;
    std::optional<Vec2> goal;  // defaults to the centroid of member destinations
};

struct ReferenceSpec {
    std::string path;              // trajectory log, relative to the scenario file
    std::map<int, int> id_map;     // simulated agent id -> reference agent id
};

struct Scenario {
    int version = 1;
    std::string name;

    SimParams sim;
    ForceParams forces;
    FovParams fov;
    GroupParams group_defaults;
    PayoffParams payoffs = PayoffParams::defaults();

    std::vector<ObstaclePolygon> obstacles;
    std::vector<ZoneRegion> zones;
    std::vector<Polygon> roundabouts;
    std::vector<AgentSpec> agents;
    std::vector<GroupSpec> groups;
    std::optional<ReferenceSpec> reference;

    std::vector<std::string> warnings;  // filled by the loader, not persisted
};

// Parses and validates a scenario. Violations raise ScenarioError with the
// offending field; recoverable gaps (missing payoff table, missing
// adjustments) apply defaults and add a warning.
Scenario load_scenario(const std::string& path);
Scenario load_scenario_from_string(const std::string& text,
                                   const std::string& origin = "<string>");

// Canonical JSON serialization; load(save(s)) == s up to warnings.
std::string save_scenario(const Scenario& scenario);

// Scenario texts compiled into the library for the demo subcommand.
const char* bundled_scenario(const std::string& name);  // nullptr when unknown
std::vector<std::string> bundled_scenario_names();

}  // namespace sharedspace
