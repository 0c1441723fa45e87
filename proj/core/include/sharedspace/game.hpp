#pragma once

#include <array>
#include <span>
#include <vector>

#include "sharedspace/groups.hpp"
#include "sharedspace/rng.hpp"
#include "sharedspace/road_user.hpp"

namespace sharedspace {

// One player of a game: a single road user or a whole pedestrian group
// represented by its leader.
struct ParticipantRef {
    enum class Kind { Agent, Group };
    Kind kind = Kind::Agent;
    int id = -1;              // agent id or group id
    int representative = -1;  // agent id used for geometry (the leader for groups)
    bool vehicle = false;

    bool operator==(const ParticipantRef&) const = default;

    static ParticipantRef agent(const RoadUser& u) {
        return {Kind::Agent, u.id, u.id, u.is_vehicle()};
    }
    static ParticipantRef group(const PedestrianGroup& g) {
        return {Kind::Group, g.id, g.leader, false};
    }
};

// Observable situation flags for one participant, evaluated against the
// interaction counterpart. Each active flag adds its configured payoff
// adjustments to the participant's own cells.
struct FactorVector {
    bool counterpart_slow = false;       // counterpart moving below its typical speed
    bool few_interactions = false;       // active negotiations below the threshold
    bool yielding_elsewhere = false;     // already braking for somebody else
    bool following_another = false;      // vehicle driving in a platoon
    bool cheap_detour = false;           // pedestrian can deviate without a long detour
    bool followed_by_another = false;    // vehicle with a tailgater
    bool cannot_stop = false;            // vehicle too close to brake in time
    bool in_roundabout = false;          // vehicle inside a roundabout region
    double uncertainty_draw = 0.0;       // driver-uncertainty sample in [-1, 1]
    bool leader_waiting = false;         // group leader currently in the waiting state
    bool in_group = false;               // participant is a pedestrian group / member

    bool operator==(const FactorVector&) const = default;
};

// Payoff model parameters: base ordinals plus the situational adjustments
// F1..F26 (stored zero-indexed). The base table maps a (leader strategy,
// follower strategy) pair to the pair of ordinals in [-100, 4];
// both-continue on a conflicting course carries the collision extreme.
struct PayoffParams {
    std::array<double, 26> adjustments{};
    int interaction_count_threshold = 3;  // N
    double cannot_stop_distance = 0.0;    // M; <= 0 derives braking distance + 1 m
    // [leader strategy][follower strategy][0 = leader ordinal, 1 = follower]
    std::array<std::array<std::array<double, 2>, 3>, 3> base{};

    static PayoffParams defaults();

    double adjustment(int index_1_based) const { return adjustments[index_1_based - 1]; }
    double base_leader(Strategy leader_s, Strategy follower_s) const {
        return base[static_cast<int>(leader_s)][static_cast<int>(follower_s)][0];
    }
    double base_follower(Strategy leader_s, Strategy follower_s) const {
        return base[static_cast<int>(leader_s)][static_cast<int>(follower_s)][1];
    }
    void set_base(Strategy leader_s, Strategy follower_s, double leader_ordinal,
                  double follower_ordinal) {
        base[static_cast<int>(leader_s)][static_cast<int>(follower_s)] = {leader_ordinal,
                                                                          follower_ordinal};
    }
};

// Leader rows against per-follower strategy choices. Followers respond
// independently, so follower payoffs depend only on the leader row and
// their own choice; the leader's payoff is stored per joint follower
// profile (mixed-radix enumeration over follower choices).
struct PayoffMatrix {
    ParticipantRef leader;
    std::vector<ParticipantRef> followers;
    std::vector<Strategy> leader_strategies;
    std::vector<std::vector<Strategy>> follower_strategies;
    std::vector<std::vector<double>> leader_payoff;               // [row][joint]
    std::vector<std::vector<std::vector<double>>> follower_payoff;  // [f][row][choice]

    std::size_t joint_count() const;
    std::size_t joint_index(std::span<const int> choices) const;
};

struct GameOutcome {
    int leader_row = 0;
    std::vector<int> follower_choices;

    bool operator==(const GameOutcome&) const = default;
};

// The vehicle leads; with several vehicles a seeded uniform draw picks one.
// A pedestrian or group never leads while a vehicle participates.
ParticipantRef select_game_leader(std::span<const ParticipantRef> participants, Rng& rng);

// Engine-side bookkeeping needed by the factor evaluation.
struct ParticipantSituation {
    int active_interactions = 0;
    bool yielding_elsewhere = false;
    bool following_another = false;
    bool followed_by_another = false;
};

struct FactorWorld {
    const std::vector<RoadUser>& agents;
    const std::vector<PedestrianGroup>& groups;
    std::span<const Polygon> roundabouts;
    double normal_ped_speed = 1.34;
    double normal_vehicle_speed = 10.0;
    double moving_epsilon = 0.05;
    double max_brake = 4.0;
};

FactorVector evaluate_factors(const ParticipantRef& alpha, const ParticipantRef& beta,
                              const FactorWorld& world, const ParticipantSituation& situation,
                              const PayoffParams& params, Rng& rng);

// Cell payoffs = base ordinals + the adjustments activated by each
// player's factor vector (applied to that player's own cells).
// `factors` holds the leader's vector first, then one per follower.
PayoffMatrix build_payoff_matrix(const ParticipantRef& leader,
                                 std::span<const ParticipantRef> followers,
                                 std::span<const FactorVector> factors,
                                 const PayoffParams& params);

// Backward induction: each follower best-responds per leader row
// (ties prefer decelerate > deviate > continue), the leader maximizes its
// own payoff under those responses (ties prefer the lower row index).
GameOutcome solve_stackelberg(const PayoffMatrix& m);

// Writes the solved strategies onto the participants. Group members take
// their subgroup's assignment; a non-split group follows its leader's
// strategy as one block.
void execute_decision(const PayoffMatrix& m, const GameOutcome& outcome, int interaction_id,
                      std::vector<RoadUser>& agents, std::vector<PedestrianGroup>& groups,
                      Rng& rng);

// Strategy set for a participant kind: vehicles cannot deviate.
std::vector<Strategy> strategies_for(const ParticipantRef& p);

}  // namespace sharedspace
