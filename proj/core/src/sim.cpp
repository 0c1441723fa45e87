#include "sharedspace/sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sharedspace/errors.hpp"

namespace sharedspace {

const char* to_string(InteractionClass c) {
    switch (c) {
        case InteractionClass::Reactive: return "reactive";
        case InteractionClass::CarFollowing: return "car_following";
        case InteractionClass::Implicit: return "implicit";
    }
    return "?";
}

double extrapolated_min_distance(const Vec2& pos_a, const Vec2& vel_a, const Vec2& pos_b,
                                 const Vec2& vel_b, double horizon) {
    const Vec2 p = pos_a - pos_b;
    const Vec2 v = vel_a - vel_b;
    const double v_sq = v.norm_sq();
    double t = 0.0;
    if (v_sq > 1e-12) {
        t = std::clamp(-p.dot(v) / v_sq, 0.0, horizon);
    }
    return (p + v * t).norm();
}

Simulation::Simulation(Scenario scenario, std::optional<std::uint64_t> seed_override)
    : scenario_(std::move(scenario)),
      rng_(seed_override.value_or(scenario_.sim.seed)) {
    if (seed_override) scenario_.sim.seed = *seed_override;
    log_.dt = scenario_.sim.dt;
    init_agents();
    init_groups();
    // Initial snapshot at t = 0.
    append_records(std::vector<ResolvedAcceleration>(state_.agents.size()));
}

void Simulation::init_agents() {
    for (const auto& spec : scenario_.agents) {
        RoadUser u;
        u.id = spec.id;
        u.kind = spec.kind;
        u.position = spec.origin;
        u.goal = spec.destination;
        u.radius = spec.radius;
        u.dims = spec.dims;
        const bool vehicle = spec.kind == UserKind::Vehicle;
        u.desired_speed = spec.desired_speed > 0.0 ? spec.desired_speed : (vehicle ? 8.0 : 1.3);
        u.relaxation_time =
            spec.relaxation_time > 0.0 ? spec.relaxation_time : (vehicle ? 1.0 : 0.5);

        const auto graph =
            build_visibility_graph(scenario_.obstacles, spec.origin, spec.destination);
        WaypointPath path = plan_path(graph, spec.origin, spec.destination);
        path = offset_waypoints(path, scenario_.obstacles, scenario_.sim.waypoint_clearance);
        u.path = std::move(path);
        u.waypoint_index = 0;
        if (u.path.waypoints.size() > 1 &&
            distance(u.path.waypoints.front(), spec.origin) <= 1e-9) {
            u.waypoint_index = 1;
        }

        const Vec2 dir = (u.current_waypoint() - u.position).normalized();
        u.heading = dir.norm_sq() > 0.0 ? dir : Vec2{1.0, 0.0};
        u.velocity = u.heading * u.desired_speed;  // agents enter at cruise speed
        state_.agents.push_back(std::move(u));
    }
}

void Simulation::init_groups() {
    int max_id = 0;
    for (const auto& spec : scenario_.groups) {
        PedestrianGroup g;
        g.id = spec.id;
        g.members = spec.members;
        g.params = spec.params;
        if (spec.goal) {
            g.goal = *spec.goal;
        } else {
            Vec2 sum;
            for (int id : g.members) sum += agent(id).goal;
            g.goal = sum / static_cast<double>(g.members.size());
        }

        // Group walking speed shrinks with size.
        for (int id : g.members) {
            RoadUser& m = agent(id);
            m.group_id = g.id;
            m.desired_speed = group_desired_speed(g.size(), m.desired_speed, g.params);
            m.velocity = m.heading * m.desired_speed;
        }

        const LeaderContext ctx{std::nullopt, g.goal, scenario_.zones};
        g.leader = select_leader(g, g.params.leader_method, ctx, state_.agents);
        g.original_leader = g.leader;
        recompute_boundary_member(g, state_.agents);
        state_.groups.push_back(std::move(g));
        max_id = std::max(max_id, spec.id);
    }
    state_.next_group_id = max_id + 1;
    group_zones_.assign(state_.groups.size(), ZoneClass::Safe);
}

RoadUser& Simulation::agent(int id) {
    for (auto& a : state_.agents) {
        if (a.id == id) return a;
    }
    throw SimulationError("unknown agent id " + std::to_string(id));
}

const RoadUser& Simulation::agent(int id) const {
    return const_cast<Simulation*>(this)->agent(id);
}

const PedestrianGroup* Simulation::group_for_member(int agent_id) const {
    for (const auto& g : state_.groups) {
        if (g.active && g.has_member(agent_id)) return &g;
    }
    return nullptr;
}

ParticipantRef Simulation::participant_for(const RoadUser& u) const {
    if (u.is_pedestrian()) {
        if (const PedestrianGroup* g = group_for_member(u.id)) {
            return ParticipantRef::group(*g);
        }
    }
    return ParticipantRef::agent(u);
}

std::vector<const RoadUser*> Simulation::participant_bodies(const ParticipantRef& p) const {
    std::vector<const RoadUser*> bodies;
    if (p.kind == ParticipantRef::Kind::Group) {
        for (const auto& g : state_.groups) {
            if (g.id == p.id) {
                for (int id : g.members) bodies.push_back(&agent(id));
                return bodies;
            }
        }
    }
    bodies.push_back(&agent(p.representative));
    return bodies;
}

bool Simulation::participants_conflict(const ParticipantRef& a, const ParticipantRef& b,
                                       double horizon, bool resume_speeds) const {
    auto body_velocity = [resume_speeds](const RoadUser& u) {
        if (resume_speeds && u.is_vehicle() && !u.reached_goal) {
            return u.heading * std::max(u.speed(), u.desired_speed);
        }
        return u.velocity;
    };
    for (const RoadUser* ua : participant_bodies(a)) {
        for (const RoadUser* ub : participant_bodies(b)) {
            const double reach =
                ua->conflict_radius() + ub->conflict_radius() + scenario_.sim.conflict_margin;
            if (extrapolated_min_distance(ua->position, body_velocity(*ua), ub->position,
                                          body_velocity(*ub), horizon) < reach) {
                return true;
            }
        }
    }
    return false;
}

bool Simulation::participants_separating(const ParticipantRef& a,
                                         const ParticipantRef& b) const {
    // A pair holds an interaction open only while some bodies are both
    // nearby and still closing in; distant drift does not count.
    for (const RoadUser* ua : participant_bodies(a)) {
        for (const RoadUser* ub : participant_bodies(b)) {
            const Vec2 rel_pos = ub->position - ua->position;
            const Vec2 rel_vel = ub->velocity - ua->velocity;
            const double hold_radius = ua->conflict_radius() + ub->conflict_radius() +
                                       scenario_.sim.conflict_margin +
                                       scenario_.sim.hold_margin;
            if (rel_pos.norm() <= hold_radius && rel_pos.dot(rel_vel) < -1e-9) {
                return false;
            }
        }
    }
    return true;
}

bool Simulation::pair_active(const ParticipantRef& a, const ParticipantRef& b) const {
    for (const auto& interaction : state_.interactions) {
        bool has_a = false;
        bool has_b = false;
        for (const auto& p : interaction.participants) {
            if (p == a) has_a = true;
            if (p == b) has_b = true;
        }
        if (has_a && has_b) return true;
    }
    return false;
}

std::vector<Interaction> Simulation::detect_interactions(double horizon) const {
    std::vector<Interaction> fresh;
    std::vector<std::pair<ParticipantRef, ParticipantRef>> seen;

    const auto& agents = state_.agents;
    for (std::size_t i = 0; i < agents.size(); ++i) {
        for (std::size_t j = i + 1; j < agents.size(); ++j) {
            const RoadUser& ua = agents[i];
            const RoadUser& ub = agents[j];
            if (!ua.is_vehicle() && !ub.is_vehicle()) continue;  // plain SFM territory
            if (ua.reached_goal || ub.reached_goal) continue;

            ParticipantRef pa = participant_for(ua);
            ParticipantRef pb = participant_for(ub);
            if (pa == pb) continue;
            if (pair_active(pa, pb)) continue;
            bool already = false;
            for (const auto& [sa, sb] : seen) {
                if ((sa == pa && sb == pb) || (sa == pb && sb == pa)) {
                    already = true;
                    break;
                }
            }
            if (already) continue;
            if (!participants_conflict(pa, pb, horizon)) continue;
            seen.emplace_back(pa, pb);

            Interaction interaction;
            interaction.onset_tick = state_.tick;
            if (ua.is_vehicle() && ub.is_vehicle()) {
                const bool same_direction =
                    ua.heading.dot(ub.heading) > scenario_.sim.heading_alignment;
                if (same_direction) {
                    const RoadUser& rear =
                        (ub.position - ua.position).dot(ua.heading) > 0.0 ? ua : ub;
                    const RoadUser& lead = rear.id == ua.id ? ub : ua;
                    const Vec2 delta = lead.position - rear.position;
                    if (std::abs(delta.cross(rear.heading)) <= scenario_.forces.lane_width) {
                        interaction.kind = InteractionClass::CarFollowing;
                        interaction.rear_vehicle = rear.id;
                        interaction.lead_vehicle = lead.id;
                    } else {
                        interaction.kind = InteractionClass::Implicit;
                    }
                } else {
                    interaction.kind = InteractionClass::Implicit;
                }
            } else {
                const RoadUser& vehicle = ua.is_vehicle() ? ua : ub;
                const ParticipantRef& walker = ua.is_vehicle() ? pb : pa;
                const BrakingCorridor corridor = braking_corridor(vehicle, scenario_.forces);
                bool inside = false;
                for (const RoadUser* body : participant_bodies(walker)) {
                    if (corridor.contains(body->position)) {
                        inside = true;
                        break;
                    }
                }
                interaction.kind =
                    inside ? InteractionClass::Reactive : InteractionClass::Implicit;
            }
            interaction.participants = {pa, pb};
            fresh.push_back(std::move(interaction));
        }
    }

    // Merge implicit conflicts that share a participant into one game.
    std::vector<Interaction> merged;
    for (auto& interaction : fresh) {
        if (interaction.kind != InteractionClass::Implicit) {
            merged.push_back(std::move(interaction));
            continue;
        }
        Interaction* host = nullptr;
        for (auto& existing : merged) {
            if (existing.kind != InteractionClass::Implicit) continue;
            for (const auto& p : interaction.participants) {
                for (const auto& q : existing.participants) {
                    if (p == q) {
                        host = &existing;
                        break;
                    }
                }
                if (host) break;
            }
            if (host) break;
        }
        if (!host) {
            merged.push_back(std::move(interaction));
            continue;
        }
        for (const auto& p : interaction.participants) {
            bool present = false;
            for (const auto& q : host->participants) present = present || q == p;
            if (!present) host->participants.push_back(p);
        }
    }
    return merged;
}

ParticipantSituation Simulation::situation_for(const ParticipantRef& p,
                                               int interaction_id) const {
    ParticipantSituation s;
    for (const auto& interaction : state_.interactions) {
        bool involved = false;
        for (const auto& q : interaction.participants) involved = involved || q == p;
        if (involved) ++s.active_interactions;
        if (interaction.kind == InteractionClass::CarFollowing) {
            if (interaction.rear_vehicle == p.representative) s.following_another = true;
            if (interaction.lead_vehicle == p.representative) s.followed_by_another = true;
        }
    }
    const RoadUser& rep = agent(p.representative);
    s.yielding_elsewhere = rep.active_strategy &&
                           rep.active_strategy->interaction_id != interaction_id &&
                           rep.active_strategy->strategy == Strategy::Decelerate;
    return s;
}

void Simulation::play_game(Interaction& interaction) {
    // Groups settle structure before the game: leader re-selection when
    // configured, then the one-time split decision for this onset.
    std::optional<Vec2> vehicle_pos;
    for (const auto& p : interaction.participants) {
        if (p.vehicle) {
            vehicle_pos = agent(p.representative).position;
            break;
        }
    }
    for (auto& p : interaction.participants) {
        if (p.kind != ParticipantRef::Kind::Group) continue;
        PedestrianGroup* g = nullptr;
        for (auto& group : state_.groups) {
            if (group.id == p.id) g = &group;
        }
        if (!g) continue;
        const LeaderContext ctx{vehicle_pos, g->goal, scenario_.zones};
        if (g->params.leader_method == LeaderMethod::NearestVehicle) {
            g->leader = select_leader(*g, LeaderMethod::NearestVehicle, ctx, state_.agents);
            recompute_boundary_member(*g, state_.agents);
        }
        if (!g->split_evaluated && !g->is_split()) {
            g->split_evaluated = true;
            auto split =
                maybe_split(*g, g->params, rng_, ctx, state_.agents, state_.next_group_id);
            if (split) {
                state_.next_group_id += 2;
                state_.groups.push_back(std::move(split->first));
                state_.groups.push_back(std::move(split->second));
                group_zones_.assign(state_.groups.size(), ZoneClass::Safe);
            }
        }
        p.representative = g->leader;
    }

    const ParticipantRef leader = select_game_leader(interaction.participants, rng_);
    std::vector<ParticipantRef> followers;
    for (const auto& p : interaction.participants) {
        if (!(p == leader)) followers.push_back(p);
    }

    const FactorWorld world{state_.agents,
                            state_.groups,
                            scenario_.roundabouts,
                            scenario_.sim.normal_ped_speed,
                            scenario_.sim.normal_vehicle_speed,
                            scenario_.sim.moving_epsilon,
                            scenario_.forces.max_brake};

    std::vector<FactorVector> factors;
    const ParticipantRef& leader_beta = followers.empty() ? leader : followers.front();
    factors.push_back(evaluate_factors(leader, leader_beta, world,
                                       situation_for(leader, interaction.id),
                                       scenario_.payoffs, rng_));
    for (const auto& f : followers) {
        factors.push_back(evaluate_factors(f, leader, world,
                                           situation_for(f, interaction.id),
                                           scenario_.payoffs, rng_));
    }

    const PayoffMatrix matrix =
        build_payoff_matrix(leader, followers, factors, scenario_.payoffs);
    const GameOutcome outcome = solve_stackelberg(matrix);
    execute_decision(matrix, outcome, interaction.id, state_.agents, state_.groups, rng_);
    interaction.game_played = true;
    interaction.phase = InteractionPhase::Executing;

    GameEventRecord event;
    event.tick = state_.tick;
    event.interaction_id = interaction.id;
    event.leader = leader;
    event.followers = followers;
    event.factors = factors;
    event.leader_strategy = matrix.leader_strategies[outcome.leader_row];
    for (std::size_t fi = 0; fi < followers.size(); ++fi) {
        event.follower_strategies.push_back(
            matrix.follower_strategies[fi][outcome.follower_choices[fi]]);
    }
    log_.games.push_back(std::move(event));
}

void Simulation::handle_new_interactions(std::vector<Interaction> fresh) {
    for (auto& interaction : fresh) {
        interaction.id = state_.next_interaction_id++;
        state_.interactions.push_back(std::move(interaction));
        Interaction& stored = state_.interactions.back();
        if (stored.kind == InteractionClass::Implicit) {
            play_game(stored);
        } else {
            stored.phase = InteractionPhase::Executing;
        }
    }
}

ZoneClass Simulation::zone_of_group(const PedestrianGroup& g) const {
    const ZoneContext ctx{scenario_.zones, state_.agents, g.members, g.params, scenario_.fov};
    return classify_zone(group_centroid(g, state_.agents), ctx);
}

void Simulation::update_groups() {
    // Reform pass first, so the zone/FSM pass below sees the final roster.
    for (std::size_t pi = 0; pi < state_.groups.size(); ++pi) {
        PedestrianGroup& parent = state_.groups[pi];
        if (parent.active || parent.subgroup_ids.empty()) continue;
        // No reform while any member still executes a game decision; the
        // split belongs to that interaction.
        bool engaged = false;
        for (int id : parent.members) {
            if (agent(id).active_strategy) engaged = true;
        }
        if (engaged) continue;
        std::vector<PedestrianGroup*> subs;
        for (int sid : parent.subgroup_ids) {
            for (auto& g : state_.groups) {
                if (g.id == sid && g.active) subs.push_back(&g);
            }
        }
        if (subs.size() != parent.subgroup_ids.size()) continue;
        const std::vector<int> spent = parent.subgroup_ids;
        if (try_reform(parent, subs, state_.agents, zone_of_group(parent))) {
            std::vector<PedestrianGroup> kept;
            for (auto& g : state_.groups) {
                bool drop = false;
                for (int sid : spent) drop = drop || g.id == sid;
                if (!drop) kept.push_back(std::move(g));
            }
            state_.groups = std::move(kept);
            pi = static_cast<std::size_t>(-1);  // roster changed, restart scan
        }
    }

    group_zones_.assign(state_.groups.size(), ZoneClass::Safe);
    for (std::size_t gi = 0; gi < state_.groups.size(); ++gi) {
        PedestrianGroup& g = state_.groups[gi];
        if (!g.active) continue;
        recompute_boundary_member(g, state_.agents);
        const ZoneClass zone = zone_of_group(g);
        group_zones_[gi] = zone;
        update_member_states(g, state_.agents, zone, g.params.regroup_radius);
    }
}

void Simulation::refresh_strategy_targets() {
    for (auto& u : state_.agents) {
        if (!u.active_strategy) continue;
        StrategyAssignment& assignment = *u.active_strategy;
        const RoadUser* counterpart = nullptr;
        if (assignment.counterpart >= 0) {
            counterpart = &agent(assignment.counterpart);
        }

        switch (assignment.strategy) {
            case Strategy::Continue: {
                if (!u.is_pedestrian() || !counterpart) break;
                if (!assignment.target_resolved) {
                    assignment.target_resolved = true;
                    u.strategy_target =
                        continue_crossing_point(u, *counterpart, scenario_.forces);
                }
                if (u.strategy_target &&
                    distance(u.position, *u.strategy_target) <=
                        scenario_.forces.arrival_radius) {
                    u.strategy_target.reset();  // crossing point reached, free flow
                }
                break;
            }
            case Strategy::Deviate: {
                if (!counterpart) break;
                const bool visible =
                    in_field_of_view(u.position, u.heading, fov_for(u, scenario_.fov),
                                     counterpart->position);
                if (visible || !assignment.counterpart_seen) {
                    // Track the vehicle until it has entered and then left
                    // the view cone; only that ends the maneuver.
                    assignment.counterpart_seen = assignment.counterpart_seen || visible;
                    u.strategy_target =
                        deviate_target(*counterpart, scenario_.forces.deviate_offset);
                } else {
                    u.active_strategy.reset();
                    u.strategy_target.reset();
                }
                break;
            }
            case Strategy::Decelerate:
                break;
        }
    }
}

void Simulation::resolve_and_integrate() {
    const std::vector<RoadUser> snapshot = state_.agents;
    const std::vector<PedestrianGroup> group_snapshot = state_.groups;

    // Waypoint bookkeeping happens before force evaluation.
    for (auto& u : state_.agents) {
        if (u.reached_goal) continue;
        if (u.is_pedestrian()) {
            while (u.waypoint_index + 1 < u.path.waypoints.size() &&
                   distance(u.position, u.path.waypoints[u.waypoint_index]) <=
                       scenario_.forces.arrival_radius) {
                ++u.waypoint_index;
            }
            if (distance(u.position, u.goal) <= scenario_.forces.arrival_radius) {
                u.reached_goal = true;
                u.velocity = {};
                u.active_strategy.reset();
                u.strategy_target.reset();
            }
        } else if (u.path_arc >= u.path.total_length - 1e-9) {
            u.reached_goal = true;
            u.velocity = {};
            u.active_strategy.reset();
        }
    }

    std::vector<ResolvedAcceleration> resolved(state_.agents.size());
    std::vector<const RoadUser*> pedestrians;
    for (const auto& a : snapshot) {
        if (a.is_pedestrian() && !a.reached_goal) pedestrians.push_back(&a);
    }

    for (std::size_t i = 0; i < state_.agents.size(); ++i) {
        RoadUser& u = state_.agents[i];
        if (u.reached_goal) continue;

        std::vector<const RoadUser*> sources;
        const PedestrianGroup* own_group = nullptr;
        ZoneClass zone = ZoneClass::Safe;
        if (u.is_pedestrian()) {
            for (std::size_t gi = 0; gi < group_snapshot.size(); ++gi) {
                const auto& g = group_snapshot[gi];
                if (g.active && g.has_member(u.id)) {
                    own_group = &g;
                    if (gi < group_zones_.size()) zone = group_zones_[gi];
                    break;
                }
            }
            for (const auto& other : snapshot) {
                if (other.id == u.id || other.reached_goal) continue;
                if (own_group && own_group->has_member(other.id)) {
                    // Group mates are spaced by the cohesion force, except
                    // at contact range where bodies still cannot overlap.
                    if (distance(u.position, other.position) >=
                        scenario_.forces.group_contact_distance) {
                        continue;
                    }
                }
                sources.push_back(&other);
            }
        }

        const RoadUser* lead = nullptr;
        for (const auto& interaction : state_.interactions) {
            if (interaction.kind == InteractionClass::CarFollowing &&
                interaction.rear_vehicle == u.id) {
                for (const auto& other : snapshot) {
                    if (other.id == interaction.lead_vehicle) lead = &other;
                }
            }
        }

        const RoadUser* counterpart = nullptr;
        if (u.active_strategy && u.active_strategy->counterpart >= 0) {
            for (const auto& other : snapshot) {
                if (other.id == u.active_strategy->counterpart) counterpart = &other;
            }
        }

        const ForceContext ctx{scenario_.obstacles,
                               sources,
                               pedestrians,
                               own_group,
                               zone,
                               lead,
                               counterpart,
                               snapshot,
                               scenario_.forces,
                               scenario_.fov,
                               scenario_.sim.dt};
        resolved[i] = u.is_pedestrian() ? pedestrian_acceleration(u, ctx)
                                        : vehicle_acceleration(u, ctx);
    }

    for (std::size_t i = 0; i < state_.agents.size(); ++i) {
        RoadUser& u = state_.agents[i];
        if (u.reached_goal) continue;
        if (u.is_pedestrian()) {
            integrate_pedestrian(u, resolved[i].command);
        } else {
            integrate_vehicle(u, resolved[i].command);
        }
    }

    state_.tick += 1;
    state_.time = state_.tick * scenario_.sim.dt;
    check_finite();
    append_records(resolved);
}

void Simulation::integrate_pedestrian(RoadUser& u, const AccelerationCommand& cmd) {
    const double dt = scenario_.sim.dt;
    if (cmd.kind == AccelerationCommand::Kind::Accelerate) {
        u.velocity += cmd.value * dt;
    } else {
        u.velocity = cmd.value;
    }
    const double cap = u.desired_speed * scenario_.forces.ped_speed_cap_factor;
    const double speed = u.velocity.norm();
    if (speed > cap && speed > 0.0) {
        u.velocity *= cap / speed;
    }
    u.position += u.velocity * dt;
    if (u.velocity.norm() > 1e-6) {
        u.heading = u.velocity.normalized();
    }
}

void Simulation::integrate_vehicle(RoadUser& u, const AccelerationCommand& cmd) {
    const double dt = scenario_.sim.dt;
    double speed = u.speed();
    if (cmd.kind == AccelerationCommand::Kind::Accelerate) {
        speed += cmd.value.dot(u.heading) * dt;
    } else {
        speed = cmd.value.norm();
    }
    speed = std::clamp(speed, 0.0, scenario_.forces.vehicle_speed_limit);

    // Vehicles stay on their planned polyline: advance by arc length.
    u.path_arc += speed * dt;
    double remaining = u.path_arc;
    Vec2 pos = u.path.waypoints.empty() ? u.position : u.path.waypoints.front();
    Vec2 tangent = u.heading;
    std::size_t wp = 1;
    for (; wp < u.path.waypoints.size(); ++wp) {
        const Vec2& a = u.path.waypoints[wp - 1];
        const Vec2& b = u.path.waypoints[wp];
        const double seg = distance(a, b);
        if (remaining <= seg) {
            tangent = (b - a).normalized();
            pos = a + tangent * remaining;
            break;
        }
        remaining -= seg;
    }
    if (wp >= u.path.waypoints.size()) {
        // Past the final waypoint.
        if (u.path.waypoints.size() >= 2) {
            const Vec2& a = u.path.waypoints[u.path.waypoints.size() - 2];
            const Vec2& b = u.path.waypoints.back();
            tangent = (b - a).normalized();
        }
        pos = u.path.waypoints.empty() ? u.position : u.path.waypoints.back();
        u.path_arc = u.path.total_length;
    } else {
        u.waypoint_index = wp;
    }
    u.position = pos;
    u.heading = tangent;
    u.velocity = tangent * speed;
}

void Simulation::finish_interactions() {
    std::vector<Interaction> kept;
    for (auto& interaction : state_.interactions) {
        bool conflict = false;
        bool separating = true;
        for (std::size_t i = 0; i < interaction.participants.size() && !conflict; ++i) {
            for (std::size_t j = i + 1; j < interaction.participants.size(); ++j) {
                const auto& a = interaction.participants[i];
                const auto& b = interaction.participants[j];
                if (participants_conflict(a, b, scenario_.sim.conflict_horizon,
                                          /*resume_speeds=*/true)) {
                    conflict = true;
                    break;
                }
                if (!participants_separating(a, b)) separating = false;
            }
        }

        // Stalemate release: when a decision leaves everyone standing
        // (mutual yield in close quarters), drop the interaction after a
        // second so a fresh game can break the tie.
        bool all_standing = true;
        for (const auto& p : interaction.participants) {
            for (const RoadUser* body : participant_bodies(p)) {
                if (body->speed() > scenario_.sim.moving_epsilon) all_standing = false;
            }
        }
        interaction.stall_ticks = all_standing ? interaction.stall_ticks + 1 : 0;
        const bool stalled = interaction.stall_ticks >= 10;

        if ((conflict || !separating) && !stalled) {
            kept.push_back(std::move(interaction));
            continue;
        }

        // Interaction over: clear the strategies it issued and allow the
        // involved groups a fresh split decision on the next onset.
        for (auto& u : state_.agents) {
            if (u.active_strategy &&
                u.active_strategy->interaction_id == interaction.id) {
                u.active_strategy.reset();
                u.strategy_target.reset();
            }
        }
        for (const auto& p : interaction.participants) {
            if (p.kind != ParticipantRef::Kind::Group) continue;
            for (auto& g : state_.groups) {
                if (g.id == p.id && !g.is_split()) g.split_evaluated = false;
            }
        }
    }
    state_.interactions = std::move(kept);
}

void Simulation::check_finite() const {
    for (const auto& u : state_.agents) {
        const bool ok = std::isfinite(u.position.x) && std::isfinite(u.position.y) &&
                        std::isfinite(u.velocity.x) && std::isfinite(u.velocity.y);
        if (!ok) {
            std::ostringstream out;
            out << "non-finite state at tick " << state_.tick << " for agent " << u.id
                << " (pos " << u.position.x << "," << u.position.y << " vel " << u.velocity.x
                << "," << u.velocity.y << ")";
            throw SimulationError(out.str());
        }
    }
}

void Simulation::append_records(const std::vector<ResolvedAcceleration>& resolved) {
    for (std::size_t i = 0; i < state_.agents.size(); ++i) {
        const RoadUser& u = state_.agents[i];
        TickRecord r;
        r.agent_id = u.id;
        r.kind = u.kind;
        r.time = state_.time;
        r.position = u.position;
        r.speed = u.speed();
        if (u.group_id >= 0) r.fsm = u.fsm;
        if (u.active_strategy) r.strategy = u.active_strategy->strategy;
        r.group_id = u.group_id;
        if (i < resolved.size()) {
            r.directive = resolved[i].directive;
            r.stopping_active = resolved[i].stopping_active;
            r.game_active = resolved[i].game_active;
        }
        log_.records.push_back(r);
    }
}

void Simulation::step() {
    handle_new_interactions(detect_interactions(scenario_.sim.conflict_horizon));
    update_groups();
    refresh_strategy_targets();
    resolve_and_integrate();
    for (auto& g : state_.groups) {
        if (g.active) recompute_boundary_member(g, state_.agents);
    }
    finish_interactions();
}

bool Simulation::finished() const {
    for (const auto& u : state_.agents) {
        if (!u.reached_goal) return false;
    }
    return true;
}

TrajectoryLog run_scenario(const Scenario& scenario, std::optional<std::uint64_t> seed,
                           std::optional<double> max_time) {
    Simulation sim(scenario, seed);
    const double limit = max_time.value_or(scenario.sim.max_time);
    while (!sim.finished() && sim.state().time < limit) {
        sim.step();
    }
    TrajectoryLog log = sim.take_log();
    log.timed_out = !sim.finished();
    return log;
}

}  // namespace sharedspace
