#pragma once

#include <algorithm>
#include <optional>

#include "sharedspace/geometry.hpp"
#include "sharedspace/planner.hpp"
#include "sharedspace/types.hpp"

namespace sharedspace {

struct VehicleDims {
    double half_length = 2.0;
    double half_width = 1.0;
};

// Strategy a road user is currently executing, together with the
// interaction it came from and the vehicle it is played against.
struct StrategyAssignment {
    Strategy strategy = Strategy::Continue;
    int interaction_id = -1;
    int counterpart = -1;  // agent id of the opposing vehicle, -1 if none
    bool target_resolved = false;   // continue: crossing point computed once
    bool counterpart_seen = false;  // deviate: vehicle has entered the view cone
};

// Mutable per-agent simulation state for a pedestrian or vehicle.
struct RoadUser {
    int id = -1;
    UserKind kind = UserKind::Pedestrian;

    Vec2 position;
    Vec2 velocity;
    Vec2 heading{1.0, 0.0};  // unit; last movement direction
    Vec2 goal;
    double desired_speed = 1.3;
    double relaxation_time = 0.5;
    double radius = 0.2;  // pedestrians; vehicles use dims
    VehicleDims dims;

    WaypointPath path;
    std::size_t waypoint_index = 0;
    double path_arc = 0.0;  // vehicles: arc length travelled along path
    bool reached_goal = false;

    int group_id = -1;
    FsmState fsm = FsmState::Walking;
    std::optional<Vec2> temp_goal;  // coordination-state target

    std::optional<StrategyAssignment> active_strategy;
    std::optional<Vec2> strategy_target;  // crossing point / deviate point

    double speed() const { return velocity.norm(); }

    bool is_vehicle() const { return kind == UserKind::Vehicle; }
    bool is_pedestrian() const { return kind == UserKind::Pedestrian; }

    // Radius used for conflict detection.
    double conflict_radius() const {
        return is_vehicle() ? std::max(dims.half_length, dims.half_width) : radius;
    }

    bool has_waypoint() const { return waypoint_index < path.waypoints.size(); }

    Vec2 current_waypoint() const {
        if (has_waypoint()) return path.waypoints[waypoint_index];
        return goal;
    }
};

// Default fields of view per user kind. The cone geometry is a scenario
// parameter; these are the stock values.
struct FovParams {
    FieldOfView pedestrian{deg_to_rad(85.0), 10.0};
    FieldOfView vehicle{deg_to_rad(60.0), 20.0};
};

inline const FieldOfView& fov_for(const RoadUser& u, const FovParams& params) {
    return u.is_vehicle() ? params.vehicle : params.pedestrian;
}

}  // namespace sharedspace
