#include "sharedspace/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sharedspace/errors.hpp"

namespace sharedspace {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& origin, const std::string& message) {
    throw ScenarioError(origin + ": " + message);
}

Vec2 parse_vec2(const json& j, const std::string& origin, const std::string& field) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        fail(origin, field + ": expected [x, y]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

std::vector<Vec2> parse_vertices(const json& j, const std::string& origin,
                                 const std::string& field) {
    if (!j.is_array()) fail(origin, field + ": expected an array of [x, y] pairs");
    std::vector<Vec2> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(parse_vec2(j[i], origin, field + "[" + std::to_string(i) + "]"));
    }
    return out;
}

double number_or(const json& j, const char* key, double fallback) {
    if (j.contains(key)) return j.at(key).get<double>();
    return fallback;
}

int int_or(const json& j, const char* key, int fallback) {
    if (j.contains(key)) return j.at(key).get<int>();
    return fallback;
}

void load_sim_params(const json& j, SimParams& p) {
    p.dt = number_or(j, "dt", p.dt);
    p.max_time = number_or(j, "max_time", p.max_time);
    p.conflict_horizon = number_or(j, "conflict_horizon", p.conflict_horizon);
    p.conflict_margin = number_or(j, "conflict_margin", p.conflict_margin);
    p.hold_margin = number_or(j, "hold_margin", p.hold_margin);
    p.normal_ped_speed = number_or(j, "normal_ped_speed", p.normal_ped_speed);
    p.normal_vehicle_speed = number_or(j, "normal_vehicle_speed", p.normal_vehicle_speed);
    p.moving_epsilon = number_or(j, "moving_epsilon", p.moving_epsilon);
    p.heading_alignment = number_or(j, "heading_alignment", p.heading_alignment);
    p.waypoint_clearance = number_or(j, "waypoint_clearance", p.waypoint_clearance);
}

json save_sim_params(const SimParams& p) {
    return {{"dt", p.dt},
            {"max_time", p.max_time},
            {"conflict_horizon", p.conflict_horizon},
            {"conflict_margin", p.conflict_margin},
            {"hold_margin", p.hold_margin},
            {"normal_ped_speed", p.normal_ped_speed},
            {"normal_vehicle_speed", p.normal_vehicle_speed},
            {"moving_epsilon", p.moving_epsilon},
            {"heading_alignment", p.heading_alignment},
            {"waypoint_clearance", p.waypoint_clearance}};
}

void load_force_params(const json& j, ForceParams& p) {
    p.ped_strength = number_or(j, "ped_strength", p.ped_strength);
    p.ped_range = number_or(j, "ped_range", p.ped_range);
    p.vehicle_strength = number_or(j, "vehicle_strength", p.vehicle_strength);
    p.vehicle_range = number_or(j, "vehicle_range", p.vehicle_range);
    p.anisotropy_lambda = number_or(j, "anisotropy_lambda", p.anisotropy_lambda);
    p.obstacle_strength = number_or(j, "obstacle_strength", p.obstacle_strength);
    p.obstacle_range = number_or(j, "obstacle_range", p.obstacle_range);
    p.repulsion_cutoff = number_or(j, "repulsion_cutoff", p.repulsion_cutoff);
    p.max_repulsion = number_or(j, "max_repulsion", p.max_repulsion);
    p.group_contact_distance = number_or(j, "group_contact_distance", p.group_contact_distance);
    p.visibility_strength = number_or(j, "visibility_strength", p.visibility_strength);
    p.attraction_strength = number_or(j, "attraction_strength", p.attraction_strength);
    p.attraction_threshold = number_or(j, "attraction_threshold", p.attraction_threshold);
    p.critical_distance = number_or(j, "critical_distance", p.critical_distance);
    p.continue_scale_base = number_or(j, "continue_scale_base", p.continue_scale_base);
    p.continue_scale_speed_gain =
        number_or(j, "continue_scale_speed_gain", p.continue_scale_speed_gain);
    p.deviate_offset = number_or(j, "deviate_offset", p.deviate_offset);
    p.corridor_margin = number_or(j, "corridor_margin", p.corridor_margin);
    p.max_brake = number_or(j, "max_brake", p.max_brake);
    p.headway_time = number_or(j, "headway_time", p.headway_time);
    p.lane_width = number_or(j, "lane_width", p.lane_width);
    p.stop_speed_epsilon = number_or(j, "stop_speed_epsilon", p.stop_speed_epsilon);
    p.arrival_radius = number_or(j, "arrival_radius", p.arrival_radius);
    p.ped_speed_cap_factor = number_or(j, "ped_speed_cap_factor", p.ped_speed_cap_factor);
    p.vehicle_speed_limit = number_or(j, "vehicle_speed_limit", p.vehicle_speed_limit);
}

json save_force_params(const ForceParams& p) {
    return {{"ped_strength", p.ped_strength},
            {"ped_range", p.ped_range},
            {"vehicle_strength", p.vehicle_strength},
            {"vehicle_range", p.vehicle_range},
            {"anisotropy_lambda", p.anisotropy_lambda},
            {"obstacle_strength", p.obstacle_strength},
            {"obstacle_range", p.obstacle_range},
            {"repulsion_cutoff", p.repulsion_cutoff},
            {"max_repulsion", p.max_repulsion},
            {"group_contact_distance", p.group_contact_distance},
            {"visibility_strength", p.visibility_strength},
            {"attraction_strength", p.attraction_strength},
            {"attraction_threshold", p.attraction_threshold},
            {"critical_distance", p.critical_distance},
            {"continue_scale_base", p.continue_scale_base},
            {"continue_scale_speed_gain", p.continue_scale_speed_gain},
            {"deviate_offset", p.deviate_offset},
            {"corridor_margin", p.corridor_margin},
            {"max_brake", p.max_brake},
            {"headway_time", p.headway_time},
            {"lane_width", p.lane_width},
            {"stop_speed_epsilon", p.stop_speed_epsilon},
            {"arrival_radius", p.arrival_radius},
            {"ped_speed_cap_factor", p.ped_speed_cap_factor},
            {"vehicle_speed_limit", p.vehicle_speed_limit}};
}

void load_group_params(const json& j, GroupParams& p, const std::string& origin,
                       const std::string& field) {
    p.split_base_probability = number_or(j, "split_base_probability", p.split_base_probability);
    p.split_per_member = number_or(j, "split_per_member", p.split_per_member);
    p.split_min_size = int_or(j, "split_min_size", p.split_min_size);
    p.d_social = number_or(j, "d_social", p.d_social);
    p.regroup_radius = number_or(j, "regroup_radius", p.regroup_radius);
    p.attraction_threshold = number_or(j, "attraction_threshold", p.attraction_threshold);
    p.density_threshold = number_or(j, "density_threshold", p.density_threshold);
    p.density_radius = number_or(j, "density_radius", p.density_radius);
    p.speed_slope = number_or(j, "speed_slope", p.speed_slope);
    p.min_speed = number_or(j, "min_speed", p.min_speed);
    if (j.contains("leader_method")) {
        const std::string text = j.at("leader_method").get<std::string>();
        if (!parse_leader_method(text, p.leader_method)) {
            fail(origin, field + ".leader_method: unknown method '" + text + "'");
        }
    }
    if (p.split_base_probability < 0.0 || p.split_base_probability > 1.0) {
        fail(origin, field + ".split_base_probability: must be in [0, 1]");
    }
    if (p.split_per_member < 0.0) {
        fail(origin, field + ".split_per_member: must be >= 0");
    }
}

json save_group_params(const GroupParams& p) {
    return {{"split_base_probability", p.split_base_probability},
            {"split_per_member", p.split_per_member},
            {"split_min_size", p.split_min_size},
            {"d_social", p.d_social},
            {"regroup_radius", p.regroup_radius},
            {"attraction_threshold", p.attraction_threshold},
            {"leader_method", to_string(p.leader_method)},
            {"density_threshold", p.density_threshold},
            {"density_radius", p.density_radius},
            {"speed_slope", p.speed_slope},
            {"min_speed", p.min_speed}};
}

const char* strategy_key(int i) {
    switch (i) {
        case 0: return "continue";
        case 1: return "decelerate";
        default: return "deviate";
    }
}

void load_payoffs(const json& j, PayoffParams& p, const std::string& origin,
                  std::vector<std::string>& warnings) {
    p.interaction_count_threshold = int_or(j, "N", p.interaction_count_threshold);
    p.cannot_stop_distance = number_or(j, "M", p.cannot_stop_distance);

    if (j.contains("F")) {
        const json& f = j.at("F");
        if (!f.is_object()) fail(origin, "payoffs.F: expected an object of F1..F26 overrides");
        for (const auto& [key, value] : f.items()) {
            if (key.size() < 2 || key[0] != 'F') {
                fail(origin, "payoffs.F: unknown parameter '" + key + "'");
            }
            int index = 0;
            try {
                index = std::stoi(key.substr(1));
            } catch (const std::exception&) {
                fail(origin, "payoffs.F: unknown parameter '" + key + "'");
            }
            if (index < 1 || index > 26) {
                fail(origin, "payoffs.F: unknown parameter '" + key + "' (valid: F1..F26)");
            }
            if (!value.is_number()) fail(origin, "payoffs.F." + key + ": expected a number");
            p.adjustments[index - 1] = value.get<double>();
        }
    } else {
        warnings.push_back("payoffs.F missing, default adjustments applied");
    }

    if (j.contains("base")) {
        const json& base = j.at("base");
        if (!base.is_object()) {
            fail(origin,
                 "payoffs.base: expected an object of 'leader|follower' -> [ordinal, ordinal]");
        }
        for (const auto& [key, value] : base.items()) {
            const auto sep = key.find('|');
            if (sep == std::string::npos) {
                fail(origin,
                     "payoffs.base: key '" + key + "' must look like 'leader|follower'");
            }
            Strategy leader_s;
            Strategy follower_s;
            if (!parse_strategy(key.substr(0, sep), leader_s) ||
                !parse_strategy(key.substr(sep + 1), follower_s)) {
                fail(origin, "payoffs.base: key '" + key + "' names an unknown strategy");
            }
            if (!value.is_array() || value.size() != 2 || !value[0].is_number() ||
                !value[1].is_number()) {
                fail(origin, "payoffs.base." + key + ": expected [leader, follower] ordinals");
            }
            const double leader_ordinal = value[0].get<double>();
            const double follower_ordinal = value[1].get<double>();
            if (leader_ordinal < -100.0 || leader_ordinal > 4.0 ||
                follower_ordinal < -100.0 || follower_ordinal > 4.0) {
                fail(origin, "payoffs.base." + key + ": ordinal must lie in [-100, 4]");
            }
            p.set_base(leader_s, follower_s, leader_ordinal, follower_ordinal);
        }
    } else {
        warnings.push_back("payoffs.base missing, default ordinals applied");
    }
}

json save_payoffs(const PayoffParams& p) {
    json f = json::object();
    for (int i = 1; i <= 26; ++i) {
        f["F" + std::to_string(i)] = p.adjustment(i);
    }
    json base = json::object();
    for (int leader_s = 0; leader_s < 3; ++leader_s) {
        for (int follower_s = 0; follower_s < 3; ++follower_s) {
            base[std::string(strategy_key(leader_s)) + "|" + strategy_key(follower_s)] = {
                p.base[leader_s][follower_s][0], p.base[leader_s][follower_s][1]};
        }
    }
    return {{"N", p.interaction_count_threshold},
            {"M", p.cannot_stop_distance},
            {"F", f},
            {"base", base}};
}

void load_fov(const json& j, FovParams& p, const std::string& origin) {
    auto load_one = [&](const char* key, FieldOfView& view) {
        if (!j.contains(key)) return;
        const json& v = j.at(key);
        if (v.contains("half_angle_deg")) {
            view.half_angle = deg_to_rad(v.at("half_angle_deg").get<double>());
        }
        view.range = number_or(v, "range", view.range);
        if (view.half_angle <= 0.0 || view.half_angle > kPi) {
            fail(origin, std::string("fov.") + key + ": half angle must lie in (0, 180] degrees");
        }
        if (view.range <= 0.0) {
            fail(origin, std::string("fov.") + key + ": range must be positive");
        }
    };
    load_one("pedestrian", p.pedestrian);
    load_one("vehicle", p.vehicle);
}

json save_fov(const FovParams& p) {
    return {{"pedestrian",
             {{"half_angle_deg", p.pedestrian.half_angle * 180.0 / kPi},
              {"range", p.pedestrian.range}}},
            {"vehicle",
             {{"half_angle_deg", p.vehicle.half_angle * 180.0 / kPi},
              {"range", p.vehicle.range}}}};
}

}  // namespace

Scenario load_scenario_from_string(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ScenarioError(origin + ": " + e.what());
    }
    if (!root.is_object()) fail(origin, "top level must be an object");

    Scenario s;
    s.version = int_or(root, "version", 1);
    if (s.version != 1) fail(origin, "version: unsupported schema version");
    if (root.contains("name")) s.name = root.at("name").get<std::string>();

    if (root.contains("seed")) s.sim.seed = root.at("seed").get<std::uint64_t>();
    if (root.contains("params")) load_sim_params(root.at("params"), s.sim);
    if (s.sim.dt <= 0.0) fail(origin, "params.dt: must be positive");
    if (root.contains("forces")) load_force_params(root.at("forces"), s.forces);
    if (root.contains("fov")) load_fov(root.at("fov"), s.fov, origin);
    if (root.contains("group_defaults")) {
        load_group_params(root.at("group_defaults"), s.group_defaults, origin, "group_defaults");
    }
    if (root.contains("payoffs")) {
        load_payoffs(root.at("payoffs"), s.payoffs, origin, s.warnings);
    } else {
        s.warnings.push_back("payoffs missing, defaults applied");
    }

    if (root.contains("obstacles")) {
        const json& arr = root.at("obstacles");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string field = "obstacles[" + std::to_string(i) + "]";
            auto vertices = parse_vertices(arr[i].contains("vertices") ? arr[i].at("vertices")
                                                                       : arr[i],
                                           origin, field);
            try {
                s.obstacles.push_back(Polygon::normalized(std::move(vertices)));
            } catch (const std::invalid_argument& e) {
                fail(origin, field + ": " + e.what());
            }
        }
    }

    if (root.contains("zones")) {
        const json& arr = root.at("zones");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string field = "zones[" + std::to_string(i) + "]";
            ZoneRegion zone;
            const std::string kind_text = arr[i].value("kind", "mixed");
            if (!parse_zone_kind(kind_text, zone.kind)) {
                fail(origin, field + ".kind: unknown zone kind '" + kind_text + "'");
            }
            auto vertices = parse_vertices(arr[i].at("vertices"), origin, field + ".vertices");
            try {
                zone.area = Polygon::normalized(std::move(vertices));
            } catch (const std::invalid_argument& e) {
                fail(origin, field + ": " + e.what());
            }
            s.zones.push_back(std::move(zone));
        }
    }

    if (root.contains("roundabouts")) {
        const json& arr = root.at("roundabouts");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string field = "roundabouts[" + std::to_string(i) + "]";
            auto vertices = parse_vertices(arr[i].contains("vertices") ? arr[i].at("vertices")
                                                                       : arr[i],
                                           origin, field);
            try {
                s.roundabouts.push_back(Polygon::normalized(std::move(vertices)));
            } catch (const std::invalid_argument& e) {
                fail(origin, field + ": " + e.what());
            }
        }
    }

    if (!root.contains("agents") || !root.at("agents").is_array() ||
        root.at("agents").empty()) {
        fail(origin, "agents: at least one agent required");
    }
    for (std::size_t i = 0; i < root.at("agents").size(); ++i) {
        const json& a = root.at("agents")[i];
        const std::string field = "agents[" + std::to_string(i) + "]";
        AgentSpec spec;
        if (!a.contains("id")) fail(origin, field + ".id: required");
        spec.id = a.at("id").get<int>();
        const std::string kind_text = a.value("kind", "pedestrian");
        if (!parse_user_kind(kind_text, spec.kind)) {
            fail(origin, field + ".kind: unknown kind '" + kind_text + "'");
        }
        if (!a.contains("origin")) fail(origin, field + ".origin: required");
        if (!a.contains("destination")) fail(origin, field + ".destination: required");
        spec.origin = parse_vec2(a.at("origin"), origin, field + ".origin");
        spec.destination = parse_vec2(a.at("destination"), origin, field + ".destination");
        if (distance(spec.origin, spec.destination) <= 1e-9) {
            fail(origin, field + ": origin and destination coincide");
        }
        spec.desired_speed = number_or(a, "desired_speed", 0.0);
        spec.relaxation_time = number_or(a, "relaxation_time", 0.0);
        spec.radius = number_or(a, "radius", 0.2);
        spec.dims.half_length = number_or(a, "half_length", spec.dims.half_length);
        spec.dims.half_width = number_or(a, "half_width", spec.dims.half_width);
        if (spec.desired_speed < 0.0) fail(origin, field + ".desired_speed: must be positive");
        for (const auto& existing : s.agents) {
            if (existing.id == spec.id) {
                fail(origin, field + ".id: duplicate agent id " + std::to_string(spec.id));
            }
        }
        for (std::size_t k = 0; k < s.obstacles.size(); ++k) {
            if (s.obstacles[k].strictly_contains(spec.origin)) {
                fail(origin, field + ".origin: inside obstacles[" + std::to_string(k) + "]");
            }
            if (s.obstacles[k].strictly_contains(spec.destination)) {
                fail(origin,
                     field + ".destination: inside obstacles[" + std::to_string(k) + "]");
            }
        }
        s.agents.push_back(spec);
    }

    if (root.contains("groups")) {
        for (std::size_t i = 0; i < root.at("groups").size(); ++i) {
            const json& g = root.at("groups")[i];
            const std::string field = "groups[" + std::to_string(i) + "]";
            GroupSpec spec;
            if (!g.contains("id")) fail(origin, field + ".id: required");
            spec.id = g.at("id").get<int>();
            if (!g.contains("members") || !g.at("members").is_array() ||
                g.at("members").size() < 2) {
                fail(origin, field + ".members: a group needs at least 2 members");
            }
            for (const auto& m : g.at("members")) {
                const int member_id = m.get<int>();
                const AgentSpec* agent = nullptr;
                for (const auto& a : s.agents) {
                    if (a.id == member_id) {
                        agent = &a;
                        break;
                    }
                }
                if (!agent) {
                    fail(origin, field + ".members: unknown agent id " +
                                     std::to_string(member_id));
                }
                if (agent->kind != UserKind::Pedestrian) {
                    fail(origin, field + ".members: group member must be pedestrian (agent " +
                                     std::to_string(member_id) + " is a vehicle)");
                }
                for (const auto& other : s.groups) {
                    for (int existing : other.members) {
                        if (existing == member_id) {
                            fail(origin, field + ".members: agent " +
                                             std::to_string(member_id) +
                                             " already belongs to group " +
                                             std::to_string(other.id));
                        }
                    }
                }
                spec.members.push_back(member_id);
            }
            spec.params = s.group_defaults;
            load_group_params(g, spec.params, origin, field);
            if (g.contains("goal")) {
                spec.goal = parse_vec2(g.at("goal"), origin, field + ".goal");
            }
            for (const auto& existing : s.groups) {
                if (existing.id == spec.id) {
                    fail(origin, field + ".id: duplicate group id " + std::to_string(spec.id));
                }
            }
            s.groups.push_back(std::move(spec));
        }
    }

    if (root.contains("reference")) {
        const json& r = root.at("reference");
        ReferenceSpec ref;
        if (!r.contains("path")) fail(origin, "reference.path: required");
        ref.path = r.at("path").get<std::string>();
        if (r.contains("id_map")) {
            for (const auto& [key, value] : r.at("id_map").items()) {
                ref.id_map[std::stoi(key)] = value.get<int>();
            }
        }
        s.reference = std::move(ref);
    }

    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) {
        throw ScenarioError("cannot open scenario file: " + path);
    }
    std::ostringstream buffer;
    buffer << file.rdbuf();
    return load_scenario_from_string(buffer.str(), path);
}

std::string save_scenario(const Scenario& s) {
    json root;
    root["version"] = s.version;
    root["name"] = s.name;
    root["seed"] = s.sim.seed;
    root["params"] = save_sim_params(s.sim);
    root["forces"] = save_force_params(s.forces);
    root["fov"] = save_fov(s.fov);
    root["group_defaults"] = save_group_params(s.group_defaults);
    root["payoffs"] = save_payoffs(s.payoffs);

    root["obstacles"] = json::array();
    for (const auto& poly : s.obstacles) {
        json vertices = json::array();
        for (const auto& v : poly.vertices) vertices.push_back({v.x, v.y});
        root["obstacles"].push_back({{"vertices", vertices}});
    }
    root["zones"] = json::array();
    for (const auto& zone : s.zones) {
        json vertices = json::array();
        for (const auto& v : zone.area.vertices) vertices.push_back({v.x, v.y});
        root["zones"].push_back({{"kind", to_string(zone.kind)}, {"vertices", vertices}});
    }
    root["roundabouts"] = json::array();
    for (const auto& poly : s.roundabouts) {
        json vertices = json::array();
        for (const auto& v : poly.vertices) vertices.push_back({v.x, v.y});
        root["roundabouts"].push_back({{"vertices", vertices}});
    }

    root["agents"] = json::array();
    for (const auto& a : s.agents) {
        json entry = {{"id", a.id},
                      {"kind", to_string(a.kind)},
                      {"origin", {a.origin.x, a.origin.y}},
                      {"destination", {a.destination.x, a.destination.y}},
                      {"desired_speed", a.desired_speed},
                      {"relaxation_time", a.relaxation_time},
                      {"radius", a.radius}};
        if (a.kind == UserKind::Vehicle) {
            entry["half_length"] = a.dims.half_length;
            entry["half_width"] = a.dims.half_width;
        }
        root["agents"].push_back(std::move(entry));
    }

    root["groups"] = json::array();
    for (const auto& g : s.groups) {
        json entry = save_group_params(g.params);
        entry["id"] = g.id;
        entry["members"] = g.members;
        if (g.goal) entry["goal"] = {g.goal->x, g.goal->y};
        root["groups"].push_back(std::move(entry));
    }

    if (s.reference) {
        json id_map = json::object();
        for (const auto& [sim_id, ref_id] : s.reference->id_map) {
            id_map[std::to_string(sim_id)] = ref_id;
        }
        root["reference"] = {{"path", s.reference->path}, {"id_map", id_map}};
    }

    return root.dump(2) + "\n";
}

}  // namespace sharedspace
