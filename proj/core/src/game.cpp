#include "sharedspace/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sharedspace {

namespace {

const RoadUser* find_agent(const std::vector<RoadUser>& agents, int id) {
    for (const auto& a : agents) {
        if (a.id == id) return &a;
    }
    return nullptr;
}

PedestrianGroup* find_group(std::vector<PedestrianGroup>& groups, int id) {
    for (auto& g : groups) {
        if (g.id == id) return &g;
    }
    return nullptr;
}

const PedestrianGroup* find_group(const std::vector<PedestrianGroup>& groups, int id) {
    for (const auto& g : groups) {
        if (g.id == id) return &g;
    }
    return nullptr;
}

}  // namespace

PayoffParams PayoffParams::defaults() {
    PayoffParams p;
    // Base ordinals: winning the conflict outright scores highest, yielding
    // scores low but safe, a joint continue on a conflicting course is the
    // collision extreme. The same valuation applies to either role.
    auto own = [](Strategy s, Strategy other) {
        switch (s) {
            case Strategy::Continue: return other == Strategy::Continue ? -100.0 : 4.0;
            case Strategy::Decelerate: return 2.0;
            case Strategy::Deviate: return 1.0;
        }
        return 0.0;
    };
    const Strategy all[] = {Strategy::Continue, Strategy::Decelerate, Strategy::Deviate};
    for (Strategy ls : all) {
        for (Strategy fs : all) {
            p.set_base(ls, fs, own(ls, fs), own(fs, ls));
        }
    }

    // Situational adjustments F1..F26. Signs follow the documented
    // qualitative influences; magnitudes are uncalibrated defaults.
    auto set = [&p](int idx, double value) { p.adjustments[idx - 1] = value; };
    set(1, -2.0);  // counterpart slow: continuing into them loses appeal
    set(2, 2.0);   //   ... and giving way gains
    set(3, 1.0);
    set(4, 1.0);   // few open negotiations: keep going
    set(5, -2.0);  // vehicle already yielding elsewhere
    set(6, 2.0);
    set(7, -2.0);  // pedestrian already yielding elsewhere
    set(8, 2.0);
    set(9, 1.0);   // platooned vehicle, cell-wise (cont,cont)
    set(10, 1.0);  //   (cont,dec)
    set(11, -1.0); //   (dec,cont)
    set(12, -1.0); //   (dec,dec)
    set(13, -1.0); // cheap detour available
    set(14, -1.0);
    set(15, 2.0);
    set(16, 1.0);  // pedestrian already yielding: deviating out is fine
    set(17, -2.0); // tailgater: braking is risky
    set(18, 3.0);  // cannot stop in time: continue dominates
    set(19, -3.0);
    set(20, 2.0);  // inside a roundabout: priority
    set(21, -2.0);
    set(22, 0.5);  // driver-uncertainty jitter amplitude
    set(23, 3.0);  // waiting group leader keeps waiting
    set(24, 1.0);  // group membership: cross together
    set(25, 1.0);  //   wait together
    set(26, -2.0); //   dragging the whole group sideways is costly
    return p;
}

std::size_t PayoffMatrix::joint_count() const {
    std::size_t n = 1;
    for (const auto& s : follower_strategies) n *= s.size();
    return n;
}

std::size_t PayoffMatrix::joint_index(std::span<const int> choices) const {
    std::size_t index = 0;
    for (std::size_t f = 0; f < follower_strategies.size(); ++f) {
        index = index * follower_strategies[f].size() + static_cast<std::size_t>(choices[f]);
    }
    return index;
}

ParticipantRef select_game_leader(std::span<const ParticipantRef> participants, Rng& rng) {
    std::vector<const ParticipantRef*> vehicles;
    for (const auto& p : participants) {
        if (p.vehicle) vehicles.push_back(&p);
    }
    if (vehicles.size() == 1) return *vehicles.front();
    if (vehicles.size() > 1) return *vehicles[rng.uniform_int(static_cast<int>(vehicles.size()))];
    // No vehicle participates; fall back to the lowest id for determinism.
    const ParticipantRef* best = &participants.front();
    for (const auto& p : participants) {
        if (p.id < best->id) best = &p;
    }
    return *best;
}

namespace {

// Angle from the counterpart's travel direction to the line of sight,
// mapped to [0, 2*pi).
double sight_line_angle(const Vec2& alpha_pos, const Vec2& beta_pos, const Vec2& beta_heading) {
    const Vec2 n = (beta_pos - alpha_pos).normalized();
    if (n.norm_sq() <= 1e-18 || beta_heading.norm_sq() <= 1e-18) return 0.0;
    double angle = signed_angle(beta_heading, n);
    if (angle < 0.0) angle += 2.0 * kPi;
    return angle;
}

}  // namespace

FactorVector evaluate_factors(const ParticipantRef& alpha, const ParticipantRef& beta,
                              const FactorWorld& world, const ParticipantSituation& situation,
                              const PayoffParams& params, Rng& rng) {
    FactorVector f;

    const RoadUser* a = find_agent(world.agents, alpha.representative);
    const RoadUser* b = find_agent(world.agents, beta.representative);
    if (!a || !b) return f;

    // Courtesy trigger: the counterpart is underway but slower than the
    // typical speed for its kind. Standing agents do not claim priority.
    const double b_normal =
        b->is_vehicle() ? world.normal_vehicle_speed : world.normal_ped_speed;
    f.counterpart_slow = b->speed() > world.moving_epsilon && b->speed() < b_normal;

    f.few_interactions = situation.active_interactions < params.interaction_count_threshold;
    f.yielding_elsewhere = situation.yielding_elsewhere;
    f.following_another = alpha.vehicle && situation.following_another;
    f.followed_by_another = alpha.vehicle && situation.followed_by_another;

    if (!alpha.vehicle) {
        // A sideways escape is cheap when the counterpart's course crosses
        // the sight line roughly at right angles.
        const double angle = sight_line_angle(a->position, b->position, b->heading);
        const double deg = angle * 180.0 / kPi;
        f.cheap_detour = (deg > 58.0 && deg <= 113.0) || (deg >= 247.0 && deg < 302.0);
    }

    if (alpha.vehicle) {
        double m = params.cannot_stop_distance;
        if (m <= 0.0) {
            m = a->speed() * a->speed() / (2.0 * world.max_brake) + 1.0;
        }
        f.cannot_stop = distance(a->position, b->position) < m;

        for (const auto& region : world.roundabouts) {
            if (region.contains(a->position)) {
                f.in_roundabout = true;
                break;
            }
        }
        f.uncertainty_draw = rng.uniform(-1.0, 1.0);
    }

    if (alpha.kind == ParticipantRef::Kind::Group) {
        f.in_group = true;
        const PedestrianGroup* g = find_group(world.groups, alpha.id);
        if (g) {
            const RoadUser* leader = find_agent(world.agents, g->leader);
            f.leader_waiting = leader && leader->fsm == FsmState::Waiting;
        }
    } else if (!alpha.vehicle && a->group_id >= 0) {
        f.in_group = true;
        const PedestrianGroup* g = find_group(world.groups, a->group_id);
        if (g && a->id == g->leader) {
            f.leader_waiting = a->fsm == FsmState::Waiting;
        }
    }
    return f;
}

std::vector<Strategy> strategies_for(const ParticipantRef& p) {
    if (p.vehicle) return {Strategy::Continue, Strategy::Decelerate};
    return {Strategy::Continue, Strategy::Decelerate, Strategy::Deviate};
}

namespace {

// Strategy-level adjustment for one player's own cells.
double strategy_adjustment(const ParticipantRef& who, const FactorVector& f,
                           const PayoffParams& params, Strategy own) {
    double adj = 0.0;
    auto F = [&params](int i) { return params.adjustment(i); };

    if (f.counterpart_slow) {
        if (own == Strategy::Continue) adj += F(1);
        if (own == Strategy::Decelerate) adj += F(2);
        if (own == Strategy::Deviate) adj += F(3);
    }
    if (f.few_interactions && own == Strategy::Continue) adj += F(4);
    if (f.yielding_elsewhere) {
        if (who.vehicle) {
            if (own == Strategy::Continue) adj += F(5);
            if (own == Strategy::Decelerate) adj += F(6);
        } else {
            if (own == Strategy::Continue) adj += F(7);
            if (own == Strategy::Decelerate) adj += F(8);
            if (own == Strategy::Deviate) adj += F(16);
        }
    }
    if (f.cheap_detour) {
        if (own == Strategy::Continue) adj += F(13);
        if (own == Strategy::Decelerate) adj += F(14);
        if (own == Strategy::Deviate) adj += F(15);
    }
    if (f.followed_by_another && own == Strategy::Decelerate) adj += F(17);
    if (f.cannot_stop) {
        if (own == Strategy::Continue) adj += F(18);
        if (own == Strategy::Decelerate) adj += F(19);
    }
    if (f.in_roundabout) {
        if (own == Strategy::Continue) adj += F(20);
        if (own == Strategy::Decelerate) adj += F(21);
    }
    if (who.vehicle && own == Strategy::Continue) {
        adj += f.uncertainty_draw * F(22);
    }
    if (f.leader_waiting && own == Strategy::Decelerate) adj += F(23);
    if (f.in_group) {
        if (own == Strategy::Continue) adj += F(24);
        if (own == Strategy::Decelerate) adj += F(25);
        if (own == Strategy::Deviate) adj += F(26);
    }
    return adj;
}

// Cell-level adjustment (depends on both strategies): platoon driving.
double cell_adjustment(const FactorVector& f, const PayoffParams& params, Strategy own,
                       Strategy other) {
    if (!f.following_another) return 0.0;
    auto F = [&params](int i) { return params.adjustment(i); };
    if (own == Strategy::Continue && other == Strategy::Continue) return F(9);
    if (own == Strategy::Continue && other == Strategy::Decelerate) return F(10);
    if (own == Strategy::Decelerate && other == Strategy::Continue) return F(11);
    if (own == Strategy::Decelerate && other == Strategy::Decelerate) return F(12);
    return 0.0;
}

}  // namespace

PayoffMatrix build_payoff_matrix(const ParticipantRef& leader,
                                 std::span<const ParticipantRef> followers,
                                 std::span<const FactorVector> factors,
                                 const PayoffParams& params) {
    if (factors.size() != followers.size() + 1) {
        throw std::invalid_argument("build_payoff_matrix: one factor vector per player required");
    }

    PayoffMatrix m;
    m.leader = leader;
    m.followers.assign(followers.begin(), followers.end());
    m.leader_strategies = strategies_for(leader);
    for (const auto& f : followers) m.follower_strategies.push_back(strategies_for(f));

    const std::size_t rows = m.leader_strategies.size();
    const std::size_t joints = m.joint_count();
    const FactorVector& leader_factors = factors[0];

    m.follower_payoff.resize(followers.size());
    for (std::size_t fi = 0; fi < followers.size(); ++fi) {
        const FactorVector& ff = factors[fi + 1];
        auto& table = m.follower_payoff[fi];
        table.resize(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            const Strategy leader_s = m.leader_strategies[r];
            table[r].resize(m.follower_strategies[fi].size());
            for (std::size_t c = 0; c < m.follower_strategies[fi].size(); ++c) {
                const Strategy own = m.follower_strategies[fi][c];
                table[r][c] = params.base_follower(leader_s, own) +
                              strategy_adjustment(m.followers[fi], ff, params, own) +
                              cell_adjustment(ff, params, own, leader_s);
            }
        }
    }

    m.leader_payoff.assign(rows, std::vector<double>(joints, 0.0));
    std::vector<int> choices(followers.size(), 0);
    for (std::size_t r = 0; r < rows; ++r) {
        const Strategy leader_s = m.leader_strategies[r];
        const double own_adj = strategy_adjustment(leader, leader_factors, params, leader_s);
        // Enumerate joint follower profiles in mixed-radix order.
        std::fill(choices.begin(), choices.end(), 0);
        for (std::size_t j = 0; j < joints; ++j) {
            double payoff = own_adj;
            for (std::size_t fi = 0; fi < followers.size(); ++fi) {
                const Strategy fs = m.follower_strategies[fi][choices[fi]];
                payoff += params.base_leader(leader_s, fs) +
                          cell_adjustment(leader_factors, params, leader_s, fs);
            }
            m.leader_payoff[r][j] = payoff;
            // Increment mixed-radix counter (last follower varies fastest).
            for (std::size_t fi = followers.size(); fi-- > 0;) {
                if (++choices[fi] < static_cast<int>(m.follower_strategies[fi].size())) break;
                choices[fi] = 0;
            }
        }
    }
    return m;
}

GameOutcome solve_stackelberg(const PayoffMatrix& m) {
    const std::size_t rows = m.leader_strategies.size();
    GameOutcome best;
    double best_value = -std::numeric_limits<double>::infinity();
    bool first = true;

    for (std::size_t r = 0; r < rows; ++r) {
        std::vector<int> responses(m.followers.size(), 0);
        for (std::size_t fi = 0; fi < m.followers.size(); ++fi) {
            const auto& payoffs = m.follower_payoff[fi][r];
            int pick = 0;
            for (std::size_t c = 1; c < payoffs.size(); ++c) {
                const double diff = payoffs[c] - payoffs[pick];
                if (diff > 0.0) {
                    pick = static_cast<int>(c);
                } else if (diff == 0.0 &&
                           safety_rank(m.follower_strategies[fi][c]) >
                               safety_rank(m.follower_strategies[fi][pick])) {
                    pick = static_cast<int>(c);
                }
            }
            responses[fi] = pick;
        }
        const double value = m.leader_payoff[r][m.joint_index(responses)];
        if (first || value > best_value) {
            first = false;
            best_value = value;
            best.leader_row = static_cast<int>(r);
            best.follower_choices = std::move(responses);
        }
        // Equal leader value keeps the earlier (lower-index) row.
    }
    return best;
}

namespace {

bool safer(Strategy a, Strategy b) { return safety_rank(a) > safety_rank(b); }

void assign_strategy(RoadUser& agent, Strategy s, int interaction_id, int counterpart) {
    if (agent.active_strategy && agent.active_strategy->interaction_id != interaction_id &&
        safer(agent.active_strategy->strategy, s)) {
        return;  // keep the safer commitment from the other live game
    }
    agent.active_strategy = StrategyAssignment{s, interaction_id, counterpart};
    agent.strategy_target.reset();
}

}  // namespace

void execute_decision(const PayoffMatrix& m, const GameOutcome& outcome, int interaction_id,
                      std::vector<RoadUser>& agents, std::vector<PedestrianGroup>& groups,
                      Rng& rng) {
    std::vector<std::pair<const ParticipantRef*, Strategy>> assignments;
    assignments.emplace_back(&m.leader, m.leader_strategies[outcome.leader_row]);
    for (std::size_t fi = 0; fi < m.followers.size(); ++fi) {
        assignments.emplace_back(&m.followers[fi],
                                 m.follower_strategies[fi][outcome.follower_choices[fi]]);
    }

    // The opposing vehicle for strategy geometry: the first vehicle player.
    int vehicle_id = -1;
    Strategy vehicle_strategy = Strategy::Continue;
    for (const auto& [p, s] : assignments) {
        if (p->vehicle) {
            vehicle_id = p->representative;
            vehicle_strategy = s;
            break;
        }
    }

    // Counterpart for each player: pedestrians brake/deviate against the
    // vehicle; a vehicle measures its braking distance against the first
    // opposing player (preferring the pedestrian side).
    auto counterpart_of = [&](const ParticipantRef& self) {
        int fallback = -1;
        for (const auto& [p, s] : assignments) {
            if (p->id == self.id && p->kind == self.kind) continue;
            if (!p->vehicle) return p->representative;
            if (fallback < 0) fallback = p->representative;
        }
        return fallback;
    };

    for (const auto& [p, s] : assignments) {
        const int counterpart = p->vehicle ? counterpart_of(*p) : vehicle_id;
        if (p->kind == ParticipantRef::Kind::Agent) {
            for (auto& agent : agents) {
                if (agent.id == p->id) {
                    assign_strategy(agent, s, interaction_id, counterpart);
                    break;
                }
            }
            continue;
        }

        PedestrianGroup* g = find_group(groups, p->id);
        if (!g) continue;
        if (!g->is_split()) {
            for (int id : g->members) {
                for (auto& agent : agents) {
                    if (agent.id == id) {
                        assign_strategy(agent, s, interaction_id, counterpart);
                        break;
                    }
                }
            }
            continue;
        }

        // Split group: the leader's subgroup keeps the solved strategy, the
        // others follow the subgroup assignment rules.
        std::vector<PedestrianGroup*> subs;
        for (int sid : g->subgroup_ids) {
            if (PedestrianGroup* sub = find_group(groups, sid)) subs.push_back(sub);
        }
        const auto strategies = assign_subgroup_strategies(s, vehicle_strategy, subs.size(), rng);
        for (std::size_t i = 0; i < subs.size(); ++i) {
            for (int id : subs[i]->members) {
                for (auto& agent : agents) {
                    if (agent.id == id) {
                        assign_strategy(agent, strategies[i], interaction_id, counterpart);
                        break;
                    }
                }
            }
        }
    }
}

}  // namespace sharedspace
