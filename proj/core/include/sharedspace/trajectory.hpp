#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sharedspace/game.hpp"
#include "sharedspace/geometry.hpp"
#include "sharedspace/types.hpp"

namespace sharedspace {

// One (agent, tick) sample. The directive and audit flags are in-memory
// companions; the file format carries the columns listed in
// write_trajectories.
struct TickRecord {
    int agent_id = -1;
    UserKind kind = UserKind::Pedestrian;
    double time = 0.0;
    Vec2 position;
    double speed = 0.0;
    std::optional<FsmState> fsm;        // group members only
    std::optional<Strategy> strategy;   // active game strategy
    int group_id = -1;
    Directive directive = Directive::FreeFlow;
    bool stopping_active = false;
    bool game_active = false;
};

struct GameEventRecord {
    int tick = 0;
    int interaction_id = -1;
    ParticipantRef leader;
    std::vector<ParticipantRef> followers;
    std::vector<FactorVector> factors;  // leader first, then followers
    Strategy leader_strategy = Strategy::Continue;
    std::vector<Strategy> follower_strategies;
};

struct TrajectoryLog {
    double dt = 0.1;
    std::vector<TickRecord> records;  // tick-major, agent order within a tick
    std::vector<GameEventRecord> games;
    bool timed_out = false;
};

// Delimited text, one row per (agent, tick):
// agent_id,kind,time,x,y,speed,fsm_state,strategy,group_id
// Header row, comma separated, 6 fixed decimals on all floating columns.
std::string trajectories_to_string(const TrajectoryLog& log);
void write_trajectories(const TrajectoryLog& log, const std::string& path);

// Parses the format written above. Game events and audit flags are not
// representable in the file and come back empty.
TrajectoryLog read_trajectory_log(const std::string& path);
TrajectoryLog parse_trajectory_log(const std::string& text, const std::string& origin);

// Mean deviations between a simulated log and a reference, the reference
// resampled onto the simulated timestamps by linear interpolation.
// `id_map` maps simulated agent ids to reference agent ids; agents missing
// from the map compare against the same id.
struct DeviationStats {
    std::map<int, double> per_agent;
    std::map<UserKind, double> per_kind;
    std::map<int, int> samples;  // timestamps compared per agent
};

DeviationStats trajectory_deviation(const TrajectoryLog& sim, const TrajectoryLog& ref,
                                    const std::map<int, int>& id_map = {});
DeviationStats speed_deviation(const TrajectoryLog& sim, const TrajectoryLog& ref,
                               const std::map<int, int>& id_map = {});

// Plot-ready per-timestamp deviation series for one agent pair.
struct DeviationSeriesPoint {
    double time = 0.0;
    int agent_id = -1;
    double position_deviation = 0.0;
    double speed_deviation = 0.0;
};

std::vector<DeviationSeriesPoint> deviation_series(const TrajectoryLog& sim,
                                                   const TrajectoryLog& ref,
                                                   const std::map<int, int>& id_map = {});

}  // namespace sharedspace
