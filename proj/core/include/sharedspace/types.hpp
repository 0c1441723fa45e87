#pragma once

#include <string>

namespace sharedspace {

enum class UserKind { Pedestrian, Vehicle };

// Strategies negotiated in the decision layer. Deviate is valid for
// pedestrians and pedestrian groups only.
enum class Strategy { Continue, Decelerate, Deviate };

// Movement states of pedestrian group members.
enum class FsmState { Walking, Waiting, Coordination };

// Which behavior drove a road user's acceleration on a given tick, in
// descending priority for vehicles: Stopping > Game > Following > FreeFlow.
enum class Directive { FreeFlow, Following, Game, Stopping };

// Safety ordering used for deterministic tie-breaks:
// decelerate > deviate > continue.
inline int safety_rank(Strategy s) {
    switch (s) {
        case Strategy::Decelerate: return 2;
        case Strategy::Deviate: return 1;
        case Strategy::Continue: return 0;
    }
    return 0;
}

const char* to_string(UserKind k);
const char* to_string(Strategy s);
const char* to_string(FsmState s);
const char* to_string(Directive d);

bool parse_user_kind(const std::string& text, UserKind& out);
bool parse_strategy(const std::string& text, Strategy& out);
bool parse_fsm_state(const std::string& text, FsmState& out);

}  // namespace sharedspace
