#include "sharedspace/types.hpp"

namespace sharedspace {

const char* to_string(UserKind k) {
    return k == UserKind::Pedestrian ? "pedestrian" : "vehicle";
}

const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::Continue: return "continue";
        case Strategy::Decelerate: return "decelerate";
        case Strategy::Deviate: return "deviate";
    }
    return "?";
}

const char* to_string(FsmState s) {
    switch (s) {
        case FsmState::Walking: return "walking";
        case FsmState::Waiting: return "waiting";
        case FsmState::Coordination: return "coordination";
    }
    return "?";
}

const char* to_string(Directive d) {
    switch (d) {
        case Directive::FreeFlow: return "free_flow";
        case Directive::Following: return "following";
        case Directive::Game: return "game";
        case Directive::Stopping: return "stopping";
    }
    return "?";
}

bool parse_user_kind(const std::string& text, UserKind& out) {
    if (text == "pedestrian") {
        out = UserKind::Pedestrian;
    } else if (text == "vehicle") {
        out = UserKind::Vehicle;
    } else {
        return false;
    }
    return true;
}

bool parse_strategy(const std::string& text, Strategy& out) {
    if (text == "continue") {
        out = Strategy::Continue;
    } else if (text == "decelerate") {
        out = Strategy::Decelerate;
    } else if (text == "deviate") {
        out = Strategy::Deviate;
    } else {
        return false;
    }
    return true;
}

bool parse_fsm_state(const std::string& text, FsmState& out) {
    if (text == "walking") {
        out = FsmState::Walking;
    } else if (text == "waiting") {
        out = FsmState::Waiting;
    } else if (text == "coordination") {
        out = FsmState::Coordination;
    } else {
        return false;
    }
    return true;
}

}  // namespace sharedspace
