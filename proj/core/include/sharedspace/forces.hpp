#pragma once

#include <optional>
#include <span>
#include <vector>

#include "sharedspace/groups.hpp"
#include "sharedspace/planner.hpp"
#include "sharedspace/road_user.hpp"

namespace sharedspace {

// Force-layer constants. All scenario-configurable; the stock values are
// the calibration-free defaults.
struct ForceParams {
    // Social repulsion kernels: magnitude = strength * exp((r - d) / range).
    double ped_strength = 2.0;        // between pedestrians
    double ped_range = 0.8;
    double vehicle_strength = 3.0;    // pedestrians repelled by vehicles
    double vehicle_range = 1.0;
    double anisotropy_lambda = 0.3;   // weight of sources outside the field of view
    double obstacle_strength = 5.0;
    double obstacle_range = 0.3;
    double repulsion_cutoff = 4.0;    // m beyond which sources are ignored
    double max_repulsion = 20.0;      // magnitude cap for degenerate geometry
    double group_contact_distance = 0.5;  // mates closer than this repulse again

    // Group cohesion.
    double visibility_strength = 1.0;   // S_vis
    double attraction_strength = 2.0;   // S_att
    double attraction_threshold = 1.5;  // centroid pull activates at this distance

    // Strategy geometry and braking.
    double critical_distance = 5.0;      // D_min
    double continue_scale_base = 1.0;    // crossing offset = base + gain * vehicle speed
    double continue_scale_speed_gain = 0.5;
    double deviate_offset = 3.0;         // m behind the vehicle
    double corridor_margin = 0.5;        // added to each side of the vehicle width
    double max_brake = 4.0;              // m/s^2, for stopping-distance estimates
    double headway_time = 1.5;           // s, car-following headway
    double lane_width = 3.0;             // lateral window for car-following
    double stop_speed_epsilon = 0.05;    // speeds below this collapse to 0

    double arrival_radius = 0.4;        // waypoint switch distance
    double ped_speed_cap_factor = 1.3;  // |v| <= desired_speed * factor
    double vehicle_speed_limit = 10.0;
};

// Per-tick output of the behavior resolution: either a force to integrate
// or an exact velocity for the next tick. The braking rules are defined on
// speeds, so they bypass force integration to stay exact.
struct AccelerationCommand {
    enum class Kind { Accelerate, SetVelocity };
    Kind kind = Kind::Accelerate;
    Vec2 value;

    static AccelerationCommand accelerate(const Vec2& a) {
        return {Kind::Accelerate, a};
    }
    static AccelerationCommand set_velocity(const Vec2& v) {
        return {Kind::SetVelocity, v};
    }
};

struct ResolvedAcceleration {
    AccelerationCommand command;
    Directive directive = Directive::FreeFlow;
    bool stopping_active = false;  // emergency brake condition held this tick
    bool game_active = false;      // a game strategy was assigned this tick
};

// Relaxation toward the desired velocity pointed at the current waypoint.
Vec2 driving_force(const RoadUser& u);
Vec2 driving_force_toward(const RoadUser& u, const Vec2& target);

Vec2 obstacle_repulsion(const RoadUser& u, std::span<const ObstaclePolygon> obstacles,
                        const ForceParams& params);

// Social repulsion from other road users. Callers exclude the agent itself
// and its own group members. Sources outside the field of view contribute
// with weight anisotropy_lambda.
Vec2 pedestrian_repulsion(const RoadUser& u, std::span<const RoadUser* const> others,
                          const ForceParams& params, const FovParams& fov);

// Car-following speed adjustment; empty when `lead` is not actually ahead
// within the lane window and field of view.
std::optional<AccelerationCommand> car_following(const RoadUser& v, const RoadUser& lead,
                                                 const ForceParams& params,
                                                 const FovParams& fov);

// Oriented rectangle ahead of a vehicle: stopping distance long, vehicle
// width plus margin wide.
struct BrakingCorridor {
    Vec2 origin;     // vehicle position
    Vec2 axis;       // unit heading
    double length = 0.0;
    double half_width = 0.0;

    bool contains(const Vec2& p) const;
};

BrakingCorridor braking_corridor(const RoadUser& v, const ForceParams& params);

// Emergency yield: triggers when any pedestrian is inside the braking
// corridor now or after one tick of extrapolation. Overrides every other
// directive, including game decisions.
std::optional<AccelerationCommand> reactive_stop(const RoadUser& v,
                                                 std::span<const RoadUser* const> pedestrians,
                                                 const ForceParams& params, double dt);

// Cohesion force on one group member: a view-recovery term that swings the
// desired direction toward out-of-view members, plus a centroid pull past
// the attraction threshold (never on the leader). Zero in danger zones, in
// the waiting state, and for singleton groups.
Vec2 group_force(const RoadUser& member, const PedestrianGroup& group, ZoneClass zone,
                 const std::vector<RoadUser>& agents, const ForceParams& params,
                 const FovParams& fov);

// Crossing point ahead of a vehicle for the continue strategy; empty when
// the pedestrian's straight course does not cut the vehicle's axis segment
// (free flow applies then).
std::optional<Vec2> continue_crossing_point(const RoadUser& pedestrian, const RoadUser& vehicle,
                                            const ForceParams& params);

// Braking rate per tick. Below the critical distance the speed halves;
// farther out speed^2/(distance - critical) applies, capped at the halving
// rate so distant braking is never harsher than the emergency case.
double vehicle_deceleration_rate(double current_speed, double distance_to_other, double d_min);

// Next-tick speed under the decelerate strategy: pedestrians halve, vehicles
// subtract the rate above. Speeds below stop_epsilon collapse to zero.
double decelerate_new_speed(const RoadUser& u, double distance_to_other, double d_min,
                            double stop_epsilon);

// Target point behind a vehicle for the deviate strategy; recomputed every
// tick while the vehicle remains in view.
Vec2 deviate_target(const RoadUser& vehicle, double deviate_offset);

// Inputs for one agent's behavior resolution, built from the previous
// tick's snapshot.
struct ForceContext {
    std::span<const ObstaclePolygon> obstacles;
    std::span<const RoadUser* const> repulsion_sources;  // excludes self + own group
    std::span<const RoadUser* const> pedestrians;        // all pedestrians (vehicles only)
    const PedestrianGroup* group = nullptr;              // the agent's active group
    ZoneClass zone = ZoneClass::Safe;
    const RoadUser* following_lead = nullptr;        // car-following lead
    const RoadUser* strategy_counterpart = nullptr;  // vehicle of the active strategy
    const std::vector<RoadUser>& agents;
    const ForceParams& params;
    const FovParams& fov;
    double dt = 0.1;
};

// Pedestrians: an active game strategy replaces the force sum entirely;
// otherwise driving + repulsions + group force.
ResolvedAcceleration pedestrian_acceleration(const RoadUser& u, const ForceContext& ctx);

// Vehicles resolve in priority order: emergency stop > game strategy >
// car-following > free flow.
ResolvedAcceleration vehicle_acceleration(const RoadUser& u, const ForceContext& ctx);

}  // namespace sharedspace
