#pragma once

#include <optional>
#include <vector>

#include "sharedspace/forces.hpp"
#include "sharedspace/game.hpp"
#include "sharedspace/groups.hpp"
#include "sharedspace/rng.hpp"
#include "sharedspace/scenario.hpp"
#include "sharedspace/trajectory.hpp"

namespace sharedspace {

enum class InteractionClass { Reactive, CarFollowing, Implicit };
enum class InteractionPhase { Pending, Executing, Done };

const char* to_string(InteractionClass c);

// A detected conflict between road users. Implicit interactions carry
// exactly one game; reactive and car-following ones never do.
struct Interaction {
    int id = -1;
    InteractionClass kind = InteractionClass::Implicit;
    InteractionPhase phase = InteractionPhase::Pending;
    std::vector<ParticipantRef> participants;
    int onset_tick = 0;
    int rear_vehicle = -1;  // car-following only
    int lead_vehicle = -1;
    bool game_played = false;
    int stall_ticks = 0;  // consecutive ticks with every participant at rest
};

struct WorldState {
    int tick = 0;
    double time = 0.0;
    std::vector<RoadUser> agents;
    std::vector<PedestrianGroup> groups;
    std::vector<Interaction> interactions;  // active
    int next_interaction_id = 1;
    int next_group_id = 1;
};

// Fixed-timestep engine. One step runs, in order: interaction detection
// and classification, games for new implicit interactions, group
// maintenance (zones, state machine, splits and reforms), behavior
// resolution on the previous snapshot, integration, bookkeeping, logging.
// Given the same scenario and seed the produced log is identical run to
// run.
class Simulation {
  public:
    explicit Simulation(Scenario scenario,
                        std::optional<std::uint64_t> seed_override = std::nullopt);

    void step();
    bool finished() const;

    const WorldState& state() const { return state_; }
    WorldState& mutable_state() { return state_; }
    const Scenario& scenario() const { return scenario_; }
    const TrajectoryLog& log() const { return log_; }
    TrajectoryLog take_log() { return std::move(log_); }

    // Conflict detection against the current state without committing
    // anything; what step() would enqueue this tick.
    std::vector<Interaction> detect_interactions(double horizon) const;

    RoadUser& agent(int id);
    const RoadUser& agent(int id) const;
    const PedestrianGroup* group_for_member(int agent_id) const;

    // Zones the last group-maintenance pass classified, parallel to
    // state().groups; the FSM decisions of that tick were made against
    // these.
    const std::vector<ZoneClass>& group_zones() const { return group_zones_; }

  private:
    void init_agents();
    void init_groups();
    void handle_new_interactions(std::vector<Interaction> fresh);
    void play_game(Interaction& interaction);
    void update_groups();
    void refresh_strategy_targets();
    void resolve_and_integrate();
    void integrate_pedestrian(RoadUser& u, const AccelerationCommand& cmd);
    void integrate_vehicle(RoadUser& u, const AccelerationCommand& cmd);
    void finish_interactions();
    void append_records(const std::vector<ResolvedAcceleration>& resolved);
    void check_finite() const;

    ParticipantRef participant_for(const RoadUser& u) const;
    bool pair_active(const ParticipantRef& a, const ParticipantRef& b) const;
    // resume_speeds: extrapolate vehicles at their desired speed, answering
    // "would the conflict come back if the brakes were released".
    bool participants_conflict(const ParticipantRef& a, const ParticipantRef& b,
                               double horizon, bool resume_speeds = false) const;
    bool participants_separating(const ParticipantRef& a, const ParticipantRef& b) const;
    std::vector<const RoadUser*> participant_bodies(const ParticipantRef& p) const;
    ParticipantSituation situation_for(const ParticipantRef& p, int interaction_id) const;
    ZoneClass zone_of_group(const PedestrianGroup& g) const;

    Scenario scenario_;
    WorldState state_;
    Rng rng_;
    TrajectoryLog log_;
    std::vector<ZoneClass> group_zones_;  // parallel to state_.groups, refreshed per tick
};

// Convenience wrapper: build, run to completion or max_time, return the log.
TrajectoryLog run_scenario(const Scenario& scenario,
                           std::optional<std::uint64_t> seed = std::nullopt,
                           std::optional<double> max_time = std::nullopt);

// Closed-form minimum distance between two constant-velocity points over
// [0, horizon] seconds.
double extrapolated_min_distance(const Vec2& pos_a, const Vec2& vel_a, const Vec2& pos_b,
                                 const Vec2& vel_b, double horizon);

}  // namespace sharedspace
