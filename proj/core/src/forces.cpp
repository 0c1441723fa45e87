#include "sharedspace/forces.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sharedspace {

namespace {
constexpr double kTiny = 1e-9;
}

Vec2 driving_force_toward(const RoadUser& u, const Vec2& target) {
    const Vec2 dir = (target - u.position).normalized();
    const Vec2 desired_velocity = dir * u.desired_speed;
    return (desired_velocity - u.velocity) / u.relaxation_time;
}

Vec2 driving_force(const RoadUser& u) {
    if (u.reached_goal) {
        return -u.velocity / u.relaxation_time;  // decay to rest at the goal
    }
    return driving_force_toward(u, u.current_waypoint());
}

Vec2 obstacle_repulsion(const RoadUser& u, std::span<const ObstaclePolygon> obstacles,
                        const ForceParams& params) {
    Vec2 total;
    for (const auto& poly : obstacles) {
        const Vec2 nearest = poly.closest_boundary_point(u.position);
        const double d = distance(u.position, nearest);
        if (d > params.repulsion_cutoff) continue;

        Vec2 away = (u.position - nearest).normalized();
        if (away.norm_sq() <= kTiny || poly.strictly_contains(u.position)) {
            // On or inside the outline: push along the previous heading.
            away = u.heading;
        }
        double magnitude =
            params.obstacle_strength * std::exp((u.radius - d) / params.obstacle_range);
        magnitude = std::min(magnitude, params.max_repulsion);
        total += away * magnitude;
    }
    return total;
}

Vec2 pedestrian_repulsion(const RoadUser& u, std::span<const RoadUser* const> others,
                          const ForceParams& params, const FovParams& fov) {
    Vec2 total;
    const FieldOfView& view = fov_for(u, fov);
    for (const RoadUser* other : others) {
        const Vec2 delta = u.position - other->position;
        const double d = delta.norm();
        if (d > params.repulsion_cutoff) continue;

        const double strength =
            other->is_vehicle() ? params.vehicle_strength : params.ped_strength;
        const double range = other->is_vehicle() ? params.vehicle_range : params.ped_range;
        const double radii = u.radius + other->conflict_radius();

        Vec2 away;
        double magnitude;
        if (d <= kTiny) {
            // Coincident positions: deterministic fallback along the
            // previous heading, capped.
            away = u.heading;
            magnitude = params.max_repulsion;
        } else {
            away = delta / d;
            magnitude = strength * std::exp((radii - d) / range);
            magnitude = std::min(magnitude, params.max_repulsion);
            // Sources behind the agent (outside its view cone) press with
            // reduced weight.
            const bool visible =
                in_field_of_view(u.position, u.heading, view, other->position);
            if (!visible) magnitude *= params.anisotropy_lambda;
        }
        total += away * magnitude;
    }
    return total;
}

std::optional<AccelerationCommand> car_following(const RoadUser& v, const RoadUser& lead,
                                                 const ForceParams& params,
                                                 const FovParams& fov) {
    if (!v.is_vehicle() || !lead.is_vehicle()) return std::nullopt;
    if (!in_field_of_view(v.position, v.heading, fov.vehicle, lead.position)) {
        return std::nullopt;
    }
    const Vec2 delta = lead.position - v.position;
    if (delta.dot(v.heading) <= 0.0) return std::nullopt;  // not ahead
    const double lateral = std::abs(delta.cross(v.heading));
    if (lateral > params.lane_width) return std::nullopt;

    const double gap = delta.norm();
    const double speed = v.speed();
    const double desired_headway = params.critical_distance + params.headway_time * speed;

    double new_speed;
    if (gap < desired_headway && speed > lead.speed()) {
        new_speed = speed - vehicle_deceleration_rate(speed, gap, params.critical_distance);
    } else if (gap >= desired_headway) {
        // Free driving inside the follow window: relax toward desired speed.
        new_speed = speed + (v.desired_speed - speed) / v.relaxation_time * 0.1;
        new_speed = std::min(new_speed, v.desired_speed);
    } else {
        // Lead is faster and the gap is opening: track the lead's speed.
        new_speed = std::min(lead.speed(), v.desired_speed);
    }
    new_speed = std::max(new_speed, 0.0);
    if (new_speed < params.stop_speed_epsilon) new_speed = 0.0;
    return AccelerationCommand::set_velocity(v.heading * new_speed);
}

bool BrakingCorridor::contains(const Vec2& p) const {
    const Vec2 delta = p - origin;
    const double along = delta.dot(axis);
    if (along < 0.0 || along > length) return false;
    return std::abs(delta.cross(axis)) <= half_width;
}

BrakingCorridor braking_corridor(const RoadUser& v, const ForceParams& params) {
    BrakingCorridor c;
    c.origin = v.position;
    c.axis = v.heading;
    const double speed = v.speed();
    c.length = params.critical_distance + speed * speed / (2.0 * params.max_brake);
    c.half_width = v.dims.half_width + params.corridor_margin;
    return c;
}

std::optional<AccelerationCommand> reactive_stop(const RoadUser& v,
                                                 std::span<const RoadUser* const> pedestrians,
                                                 const ForceParams& params, double dt) {
    if (!v.is_vehicle()) return std::nullopt;
    const BrakingCorridor corridor = braking_corridor(v, params);

    bool blocked = false;
    for (const RoadUser* p : pedestrians) {
        if (corridor.contains(p->position) ||
            corridor.contains(p->position + p->velocity * dt)) {
            blocked = true;
            break;
        }
    }
    if (!blocked) return std::nullopt;

    const double speed = v.speed();
    double new_speed = speed - speed / 2.0;  // emergency case of the braking rule
    if (new_speed < params.stop_speed_epsilon) new_speed = 0.0;
    return AccelerationCommand::set_velocity(v.heading * new_speed);
}

namespace {

// Smallest rotation (radians, signed) that would bring the farthest
// out-of-view group member back into the member's view cone. Bearings are
// measured against the desired walking direction, which keeps the force
// stationary for a fixed formation. Members beyond the view range are the
// attraction term's problem, not a rotation's.
double view_recovery_angle(const RoadUser& member, const Vec2& desired_dir,
                           const PedestrianGroup& group,
                           const std::vector<RoadUser>& agents, const FieldOfView& view) {
    double best = 0.0;
    for (int id : group.members) {
        if (id == member.id) continue;
        const RoadUser* other = nullptr;
        for (const auto& a : agents) {
            if (a.id == id) {
                other = &a;
                break;
            }
        }
        // Members already at their destination no longer pull gazes.
        if (!other || other->reached_goal) continue;
        const Vec2 delta = other->position - member.position;
        if (delta.norm() > view.range || delta.norm() <= kTiny) continue;
        const double bearing = signed_angle(desired_dir, delta);
        const double overshoot = std::abs(bearing) - view.half_angle;
        if (overshoot > std::abs(best)) {
            best = overshoot * (bearing >= 0.0 ? 1.0 : -1.0);
        }
    }
    return best;
}

}  // namespace

Vec2 group_force(const RoadUser& member, const PedestrianGroup& group, ZoneClass zone,
                 const std::vector<RoadUser>& agents, const ForceParams& params,
                 const FovParams& fov) {
    if (zone == ZoneClass::Danger) return {};
    if (group.members.size() <= 1) return {};
    if (member.fsm == FsmState::Waiting) return {};

    const Vec2 target = member.temp_goal.value_or(member.current_waypoint());
    const Vec2 desired_dir = (target - member.position).normalized();
    const Vec2 desired_velocity = desired_dir * (member.reached_goal ? 0.0 : member.desired_speed);

    Vec2 force;

    // View recovery: swing the desired direction toward the straggler,
    // scaled by how far out of view it is.
    const double theta =
        view_recovery_angle(member, desired_dir, group, agents, fov_for(member, fov));
    if (std::abs(theta) > kTiny && desired_velocity.norm_sq() > kTiny) {
        force += desired_velocity.rotated(theta) * (params.visibility_strength * std::abs(theta));
    }

    // Centroid pull on everyone but the leader, once the member drifts past
    // the attraction threshold and still wants to move. Finished members
    // drop out of the centroid.
    if (member.id != group.leader && desired_velocity.norm_sq() > kTiny) {
        Vec2 sum;
        int count = 0;
        for (int id : group.members) {
            for (const auto& a : agents) {
                if (a.id == id && !a.reached_goal) {
                    sum += a.position;
                    ++count;
                    break;
                }
            }
        }
        if (count > 0) {
            const Vec2 centroid = sum / static_cast<double>(count);
            const Vec2 to_centroid = centroid - member.position;
            if (to_centroid.norm() >= params.attraction_threshold) {
                force += to_centroid.normalized() * params.attraction_strength;
            }
        }
    }
    return force;
}

std::optional<Vec2> continue_crossing_point(const RoadUser& pedestrian, const RoadUser& vehicle,
                                            const ForceParams& params) {
    const double scale = params.continue_scale_base +
                         params.continue_scale_speed_gain * vehicle.speed();
    const Vec2 ahead = vehicle.position + vehicle.heading * scale;
    const Vec2 behind = vehicle.position - vehicle.heading * (scale / 2.0);

    const Segment course{pedestrian.position, pedestrian.goal};
    const Segment axis{ahead, behind};
    if (distance(course.a, course.b) <= kTiny || distance(axis.a, axis.b) <= kTiny) {
        return std::nullopt;
    }
    if (!segments_intersect(course, axis)) return std::nullopt;
    return ahead;
}

double vehicle_deceleration_rate(double current_speed, double distance_to_other, double d_min) {
    const double emergency = current_speed / 2.0;
    if (distance_to_other <= d_min) return emergency;
    const double rate = current_speed * current_speed / (distance_to_other - d_min);
    return std::min(rate, emergency);
}

double decelerate_new_speed(const RoadUser& u, double distance_to_other, double d_min,
                            double stop_epsilon) {
    const double speed = u.speed();
    double next;
    if (u.is_pedestrian()) {
        next = speed / 2.0;
    } else {
        next = speed - vehicle_deceleration_rate(speed, distance_to_other, d_min);
    }
    next = std::max(next, 0.0);
    if (next < stop_epsilon) next = 0.0;
    return next;
}

Vec2 deviate_target(const RoadUser& vehicle, double deviate_offset) {
    return vehicle.position - vehicle.heading * deviate_offset;
}

namespace {

double distance_to_counterpart(const RoadUser& u, const ForceContext& ctx) {
    if (ctx.strategy_counterpart) {
        return distance(u.position, ctx.strategy_counterpart->position);
    }
    return std::numeric_limits<double>::infinity();
}

ResolvedAcceleration execute_strategy(const RoadUser& u, const ForceContext& ctx) {
    ResolvedAcceleration out;
    out.directive = Directive::Game;
    out.game_active = true;

    switch (u.active_strategy->strategy) {
        case Strategy::Continue: {
            const Vec2 target = u.strategy_target.value_or(u.current_waypoint());
            out.command = AccelerationCommand::accelerate(driving_force_toward(u, target));
            break;
        }
        case Strategy::Decelerate: {
            const double next = decelerate_new_speed(u, distance_to_counterpart(u, ctx),
                                                     ctx.params.critical_distance,
                                                     ctx.params.stop_speed_epsilon);
            out.command = AccelerationCommand::set_velocity(u.heading * next);
            break;
        }
        case Strategy::Deviate: {
            const Vec2 target = u.strategy_target.value_or(u.current_waypoint());
            out.command = AccelerationCommand::accelerate(driving_force_toward(u, target));
            break;
        }
    }
    return out;
}

}  // namespace

ResolvedAcceleration pedestrian_acceleration(const RoadUser& u, const ForceContext& ctx) {
    if (u.active_strategy) {
        return execute_strategy(u, ctx);
    }

    ResolvedAcceleration out;
    out.directive = Directive::FreeFlow;

    Vec2 force;
    if (u.fsm == FsmState::Waiting) {
        force = -u.velocity / u.relaxation_time;  // hold position
    } else if (u.temp_goal) {
        force = driving_force_toward(u, *u.temp_goal);
    } else {
        force = driving_force(u);
    }
    force += obstacle_repulsion(u, ctx.obstacles, ctx.params);
    force += pedestrian_repulsion(u, ctx.repulsion_sources, ctx.params, ctx.fov);
    if (ctx.group) {
        force += group_force(u, *ctx.group, ctx.zone, ctx.agents, ctx.params, ctx.fov);
    }
    out.command = AccelerationCommand::accelerate(force);
    return out;
}

ResolvedAcceleration vehicle_acceleration(const RoadUser& u, const ForceContext& ctx) {
    ResolvedAcceleration out;
    out.game_active = u.active_strategy.has_value();

    if (auto stop = reactive_stop(u, ctx.pedestrians, ctx.params, ctx.dt)) {
        out.command = *stop;
        out.directive = Directive::Stopping;
        out.stopping_active = true;
        return out;
    }

    if (u.active_strategy) {
        ResolvedAcceleration game = execute_strategy(u, ctx);
        game.game_active = true;
        return game;
    }

    if (ctx.following_lead) {
        if (auto follow = car_following(u, *ctx.following_lead, ctx.params, ctx.fov)) {
            out.command = *follow;
            out.directive = Directive::Following;
            return out;
        }
    }

    out.command = AccelerationCommand::accelerate(driving_force(u));
    out.directive = Directive::FreeFlow;
    return out;
}

}  // namespace sharedspace
