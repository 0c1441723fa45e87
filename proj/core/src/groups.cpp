#include "sharedspace/groups.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace sharedspace {

namespace {

const RoadUser& agent_by_id(const std::vector<RoadUser>& agents, int id) {
    for (const auto& a : agents) {
        if (a.id == id) return a;
    }
    // Group rosters are validated at load time; a miss here is a logic bug.
    std::abort();
}

RoadUser& agent_by_id(std::vector<RoadUser>& agents, int id) {
    return const_cast<RoadUser&>(agent_by_id(std::as_const(agents), id));
}

}  // namespace

const char* to_string(ZoneKind k) {
    switch (k) {
        case ZoneKind::Pedestrian: return "pedestrian";
        case ZoneKind::Mixed: return "mixed";
        case ZoneKind::Road: return "road";
    }
    return "?";
}

bool parse_zone_kind(const std::string& text, ZoneKind& out) {
    if (text == "pedestrian") {
        out = ZoneKind::Pedestrian;
    } else if (text == "mixed") {
        out = ZoneKind::Mixed;
    } else if (text == "road") {
        out = ZoneKind::Road;
    } else {
        return false;
    }
    return true;
}

const char* to_string(LeaderMethod m) {
    switch (m) {
        case LeaderMethod::NearestVehicle: return "nearest_vehicle";
        case LeaderMethod::NearestDestination: return "nearest_destination";
        case LeaderMethod::NearestBorder: return "nearest_border";
    }
    return "?";
}

bool parse_leader_method(const std::string& text, LeaderMethod& out) {
    if (text == "nearest_vehicle") {
        out = LeaderMethod::NearestVehicle;
    } else if (text == "nearest_destination") {
        out = LeaderMethod::NearestDestination;
    } else if (text == "nearest_border") {
        out = LeaderMethod::NearestBorder;
    } else {
        return false;
    }
    return true;
}

bool PedestrianGroup::has_member(int agent_id) const {
    return std::find(members.begin(), members.end(), agent_id) != members.end();
}

Vec2 group_centroid(const PedestrianGroup& g, const std::vector<RoadUser>& agents) {
    Vec2 sum;
    for (int id : g.members) sum += agent_by_id(agents, id).position;
    return sum / static_cast<double>(g.members.size());
}

bool is_coherent(const PedestrianGroup& g, const std::vector<RoadUser>& agents) {
    if (g.members.size() <= 1) return true;
    const Vec2 leader_pos = agent_by_id(agents, g.leader).position;
    const Vec2 boundary_pos = agent_by_id(agents, g.boundary_member).position;
    return distance(leader_pos, boundary_pos) <= g.params.d_social;
}

namespace {

// Members that already reached their destination no longer take part in
// coherence bookkeeping; the group cannot wait for somebody who is done.
bool socially_active(const RoadUser& u) { return !u.reached_goal; }

}  // namespace

namespace {

double border_distance(const Vec2& p, std::span<const ZoneRegion> zones) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& zone : zones) {
        if (zone.kind == ZoneKind::Pedestrian) continue;
        best = std::min(best, zone.area.distance_to_boundary(p));
    }
    return best;
}

}  // namespace

int select_leader(const PedestrianGroup& g, LeaderMethod method, const LeaderContext& ctx,
                  const std::vector<RoadUser>& agents) {
    if (method == LeaderMethod::NearestVehicle && !ctx.vehicle_position) {
        method = LeaderMethod::NearestDestination;
    }
    if (method == LeaderMethod::NearestBorder &&
        !std::isfinite(border_distance(ctx.destination, ctx.zones))) {
        method = LeaderMethod::NearestDestination;
    }

    int best_id = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int id : g.members) {
        const RoadUser& member = agent_by_id(agents, id);
        if (!socially_active(member)) continue;
        const Vec2& p = member.position;
        double d = 0.0;
        switch (method) {
            case LeaderMethod::NearestVehicle: d = distance(p, *ctx.vehicle_position); break;
            case LeaderMethod::NearestDestination: d = distance(p, ctx.destination); break;
            case LeaderMethod::NearestBorder: d = border_distance(p, ctx.zones); break;
        }
        if (d < best_dist - 1e-12 || (std::abs(d - best_dist) <= 1e-12 && id < best_id)) {
            best_dist = d;
            best_id = id;
        }
    }
    return best_id >= 0 ? best_id : g.leader;
}

int recompute_boundary_member(PedestrianGroup& g, const std::vector<RoadUser>& agents) {
    const Vec2 leader_pos = agent_by_id(agents, g.leader).position;
    int best_id = g.leader;
    double best_dist = -1.0;
    for (int id : g.members) {
        const RoadUser& member = agent_by_id(agents, id);
        if (!socially_active(member) && id != g.leader) continue;
        const double d = distance(member.position, leader_pos);
        if (d > best_dist + 1e-12 || (std::abs(d - best_dist) <= 1e-12 && id < best_id)) {
            best_dist = d;
            best_id = id;
        }
    }
    g.boundary_member = best_id;
    return best_id;
}

void update_member_states(PedestrianGroup& g, std::vector<RoadUser>& agents, ZoneClass zone,
                          double arrival_radius) {
    if (g.members.size() <= 1) return;
    int active_members = 0;
    for (int id : g.members) {
        if (socially_active(agent_by_id(agents, id))) ++active_members;
    }
    if (active_members <= 1) {
        for (int id : g.members) {
            RoadUser& m = agent_by_id(agents, id);
            m.fsm = FsmState::Walking;
            m.temp_goal.reset();
        }
        return;
    }

    if (zone == ZoneClass::Danger) {
        // Waiting or coordinating is only allowed in safe zones.
        for (int id : g.members) {
            RoadUser& m = agent_by_id(agents, id);
            m.fsm = FsmState::Walking;
            m.temp_goal.reset();
        }
        return;
    }

    const bool coherent = is_coherent(g, agents);
    const Vec2 leader_pos = agent_by_id(agents, g.leader).position;
    const bool regrouping = agent_by_id(agents, g.leader).fsm == FsmState::Waiting;

    if (!regrouping) {
        if (coherent) return;  // everyone keeps walking
        // Coherence lost: leader halts, the rest home in on the leader.
        for (int id : g.members) {
            RoadUser& m = agent_by_id(agents, id);
            if (!socially_active(m)) continue;
            if (id == g.leader) {
                m.fsm = FsmState::Waiting;
                m.temp_goal.reset();
            } else {
                m.fsm = FsmState::Coordination;
                m.temp_goal = leader_pos;
            }
        }
        return;
    }

    // Regrouping in progress: members hold at the leader's position until
    // the last one arrives, then everybody resumes toward the real goals.
    bool all_arrived = true;
    for (int id : g.members) {
        if (id == g.leader) continue;
        const RoadUser& m = agent_by_id(agents, id);
        if (!socially_active(m)) continue;
        if (distance(m.position, leader_pos) > arrival_radius) {
            all_arrived = false;
            break;
        }
    }
    for (int id : g.members) {
        RoadUser& m = agent_by_id(agents, id);
        if (all_arrived) {
            m.fsm = FsmState::Walking;
            m.temp_goal.reset();
        } else if (id != g.leader && socially_active(m)) {
            m.fsm = FsmState::Coordination;
            // Hold position once close enough; driving into the leader's
            // exact spot would stack bodies.
            const double d = distance(m.position, leader_pos);
            m.temp_goal = d > arrival_radius ? leader_pos : m.position;
        }
    }
}

double local_density(const Vec2& position, const std::vector<RoadUser>& agents, double radius) {
    int count = 0;
    for (const auto& a : agents) {
        if (a.is_pedestrian() && distance(a.position, position) <= radius) ++count;
    }
    return static_cast<double>(count) / (kPi * radius * radius);
}

ZoneClass classify_zone(const Vec2& position, const ZoneContext& ctx) {
    if (local_density(position, ctx.agents, ctx.params.density_radius) >=
        ctx.params.density_threshold) {
        return ZoneClass::Danger;
    }

    ZoneKind kind = ZoneKind::Mixed;  // unzoned space counts as mixed
    for (const auto& zone : ctx.zones) {
        if (zone.area.contains(position)) {
            kind = zone.kind;
            break;
        }
    }
    if (kind == ZoneKind::Pedestrian) return ZoneClass::Safe;

    // Mixed or road territory: a vehicle in any member's field of view
    // makes the spot unsafe for waiting.
    for (int id : ctx.member_ids) {
        const RoadUser* member = nullptr;
        for (const auto& a : ctx.agents) {
            if (a.id == id) {
                member = &a;
                break;
            }
        }
        if (!member) continue;
        for (const auto& a : ctx.agents) {
            if (!a.is_vehicle()) continue;
            if (in_field_of_view(member->position, member->heading, ctx.fov.pedestrian,
                                 a.position)) {
                return ZoneClass::Danger;
            }
        }
    }
    return ZoneClass::Safe;
}

std::optional<std::pair<PedestrianGroup, PedestrianGroup>> maybe_split(
    PedestrianGroup& g, const GroupParams& params, Rng& rng, const LeaderContext& ctx,
    const std::vector<RoadUser>& agents, int first_subgroup_id) {
    if (g.size() < params.split_min_size || g.is_split()) return std::nullopt;

    const double p = std::clamp(
        params.split_base_probability +
            (g.size() - params.split_min_size) * params.split_per_member,
        0.0, 1.0);
    if (!rng.bernoulli(p)) return std::nullopt;

    // Leader keeps the nearest ceil(S/2)-1 members; the rest walk apart.
    const Vec2 leader_pos = agent_by_id(agents, g.leader).position;
    std::vector<int> others;
    for (int id : g.members) {
        if (id != g.leader) others.push_back(id);
    }
    std::stable_sort(others.begin(), others.end(), [&](int a, int b) {
        const double da = distance(agent_by_id(agents, a).position, leader_pos);
        const double db = distance(agent_by_id(agents, b).position, leader_pos);
        if (std::abs(da - db) > 1e-12) return da < db;
        return a < b;
    });

    const std::size_t leader_half = (g.members.size() + 1) / 2;  // ceil(S/2)

    PedestrianGroup lead_sub;
    lead_sub.id = first_subgroup_id;
    lead_sub.members.push_back(g.leader);
    for (std::size_t i = 0; i + 1 < leader_half && i < others.size(); ++i) {
        lead_sub.members.push_back(others[i]);
    }
    lead_sub.leader = g.leader;
    lead_sub.goal = g.goal;
    lead_sub.params = g.params;
    lead_sub.parent = g.id;

    PedestrianGroup rest_sub;
    rest_sub.id = first_subgroup_id + 1;
    for (std::size_t i = leader_half - 1; i < others.size(); ++i) {
        rest_sub.members.push_back(others[i]);
    }
    std::sort(rest_sub.members.begin(), rest_sub.members.end());
    rest_sub.goal = g.goal;
    rest_sub.params = g.params;
    rest_sub.parent = g.id;
    rest_sub.leader = select_leader(rest_sub, g.params.leader_method, ctx, agents);

    recompute_boundary_member(lead_sub, agents);
    recompute_boundary_member(rest_sub, agents);

    g.subgroup_ids = {lead_sub.id, rest_sub.id};
    g.original_leader = g.leader;
    g.active = false;

    return std::make_pair(std::move(lead_sub), std::move(rest_sub));
}

bool try_reform(PedestrianGroup& parent, std::span<PedestrianGroup* const> subgroups,
                std::vector<RoadUser>& agents, ZoneClass zone) {
    if (zone != ZoneClass::Safe) return false;
    for (std::size_t i = 0; i < subgroups.size(); ++i) {
        for (std::size_t j = i + 1; j < subgroups.size(); ++j) {
            const Vec2 a = agent_by_id(agents, subgroups[i]->leader).position;
            const Vec2 b = agent_by_id(agents, subgroups[j]->leader).position;
            if (distance(a, b) > parent.params.d_social) return false;
        }
    }

    for (PedestrianGroup* sub : subgroups) sub->active = false;
    parent.active = true;
    parent.subgroup_ids.clear();
    if (parent.original_leader >= 0) parent.leader = parent.original_leader;
    parent.split_evaluated = false;
    for (int id : parent.members) {
        RoadUser& m = agent_by_id(agents, id);
        m.fsm = FsmState::Walking;
        m.temp_goal.reset();
    }
    recompute_boundary_member(parent, agents);
    return true;
}

std::vector<Strategy> assign_subgroup_strategies(Strategy leader_strategy,
                                                 Strategy vehicle_strategy,
                                                 std::size_t subgroup_count, Rng& rng) {
    std::vector<Strategy> out(subgroup_count, leader_strategy);
    for (std::size_t i = 1; i < subgroup_count; ++i) {
        if (vehicle_strategy == Strategy::Continue && leader_strategy == Strategy::Decelerate) {
            out[i] = Strategy::Deviate;
        } else if (vehicle_strategy == Strategy::Decelerate &&
                   leader_strategy == Strategy::Continue) {
            out[i] = rng.bernoulli(0.5) ? Strategy::Decelerate : Strategy::Deviate;
        }
    }
    return out;
}

double group_desired_speed(int size, double base_speed, const GroupParams& params) {
    const double slowed = base_speed - params.speed_slope * (size - 1);
    return std::max(params.min_speed, slowed);
}

}  // namespace sharedspace
