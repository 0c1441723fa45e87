#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "sharedspace/geometry.hpp"
#include "sharedspace/rng.hpp"
#include "sharedspace/road_user.hpp"

namespace sharedspace {

enum class ZoneClass { Safe, Danger };
enum class ZoneKind { Pedestrian, Mixed, Road };

enum class LeaderMethod { NearestVehicle, NearestDestination, NearestBorder };

const char* to_string(ZoneKind k);
bool parse_zone_kind(const std::string& text, ZoneKind& out);
const char* to_string(LeaderMethod m);
bool parse_leader_method(const std::string& text, LeaderMethod& out);

struct GroupParams {
    double split_base_probability = 0.5;  // P_base
    double split_per_member = 0.1;        // added per member beyond the threshold size
    int split_min_size = 3;
    double d_social = 2.5;             // coherence threshold, leader to boundary member
    double regroup_radius = 1.5;       // stragglers count as arrived at the leader here
    double attraction_threshold = 1.5; // centroid pull activates beyond this distance
    LeaderMethod leader_method = LeaderMethod::NearestDestination;
    double density_threshold = 1.5;  // agents / m^2 before a zone turns dangerous
    double density_radius = 2.0;     // m, neighborhood for the density estimate
    double speed_slope = 0.05;       // desired-speed reduction per extra member
    double min_speed = 0.6;
};

// Social pedestrian group: ordered member roster, a leader, and the
// boundary member (farthest from the leader, recomputed every tick).
// At most one split level: a parent group goes inactive while its two
// subgroups are walking separately, and reactivates on reform.
struct PedestrianGroup {
    int id = -1;
    std::vector<int> members;  // agent ids
    int leader = -1;
    int boundary_member = -1;
    Vec2 goal;
    GroupParams params;

    std::vector<int> subgroup_ids;
    int parent = -1;
    bool active = true;
    int original_leader = -1;
    bool split_evaluated = false;  // one split decision per interaction onset

    int size() const { return static_cast<int>(members.size()); }
    bool is_split() const { return !subgroup_ids.empty(); }
    bool has_member(int agent_id) const;
};

struct ZoneRegion {
    ZoneKind kind = ZoneKind::Mixed;
    Polygon area;
};

// Inputs for leader selection; only the fields required by the chosen
// method need to be populated.
struct LeaderContext {
    std::optional<Vec2> vehicle_position;
    Vec2 destination;
    std::span<const ZoneRegion> zones;  // road borders come from road/mixed outlines
};

// Everything classify_zone looks at.
struct ZoneContext {
    std::span<const ZoneRegion> zones;
    const std::vector<RoadUser>& agents;
    std::span<const int> member_ids;  // group members whose FOV counts
    const GroupParams& params;
    const FovParams& fov;
};

Vec2 group_centroid(const PedestrianGroup& g, const std::vector<RoadUser>& agents);

// Coherent iff the boundary member is within d_social of the leader
// (closed bound).
bool is_coherent(const PedestrianGroup& g, const std::vector<RoadUser>& agents);

// Member that minimizes the method's distance; ties resolve to the lowest
// member id. NearestVehicle falls back to NearestDestination when no
// vehicle position is supplied.
int select_leader(const PedestrianGroup& g, LeaderMethod method, const LeaderContext& ctx,
                  const std::vector<RoadUser>& agents);

int recompute_boundary_member(PedestrianGroup& g, const std::vector<RoadUser>& agents);

// Walking/waiting/coordination transitions. On coherence loss in a safe
// zone the leader waits and everyone else homes in on the leader's
// position; a danger zone forces everybody back to walking.
void update_member_states(PedestrianGroup& g, std::vector<RoadUser>& agents, ZoneClass zone,
                          double arrival_radius);

// Danger when the local crowd density reaches the threshold, or when a
// vehicle is visible to any group member outside pedestrian-only zones.
ZoneClass classify_zone(const Vec2& position, const ZoneContext& ctx);

double local_density(const Vec2& position, const std::vector<RoadUser>& agents, double radius);

// With probability P_base + (S - split_min_size) * per_member (clamped to
// [0,1]) splits an eligible group into the leader's subgroup (leader plus
// the nearest half) and the remainder. Returns the two subgroups; the
// parent keeps its roster and goes inactive.
std::optional<std::pair<PedestrianGroup, PedestrianGroup>> maybe_split(
    PedestrianGroup& g, const GroupParams& params, Rng& rng, const LeaderContext& ctx,
    const std::vector<RoadUser>& agents, int first_subgroup_id);

// True when every pair of subgroup leaders is within d_social and the zone
// is safe; merges members back into the parent and restores its leader.
bool try_reform(PedestrianGroup& parent, std::span<PedestrianGroup* const> subgroups,
                std::vector<RoadUser>& agents, ZoneClass zone);

// Strategy per subgroup, index 0 being the subgroup that holds the
// original leader (which always keeps leader_strategy).
std::vector<Strategy> assign_subgroup_strategies(Strategy leader_strategy,
                                                 Strategy vehicle_strategy,
                                                 std::size_t subgroup_count, Rng& rng);

// Desired walking speed shrinks linearly with group size.
double group_desired_speed(int size, double base_speed, const GroupParams& params);

}  // namespace sharedspace
