#include "gwm/sim.hpp"

#include "gwm/rng.hpp"

#include <algorithm>

// NPC strategy policies and the sparring partners they are recorded against.
//
//   offense  — closes distance, then mashes melee at ~0.55/frame with the
//              occasional point-blank grab; never touches DOWN so no chord
//              can fire by accident.
//   control  — keeps the range open and launches a projectile chord whenever
//              its cooldown lapses with the opponent far enough away.
//   defense  — backs into the nearest corner and holds crouch guard, with
//              brief stand-up windows for variety; never presses an attack.
//
//   light_spar / wander / aggress are the matching player-side partners:
//   a rarely-attacking shadow, a pacifist drifter, and a relentless rusher.

namespace gwm::sim {

const std::array<const char*, 8> policy_kind_names = {
    "offense", "control", "defense", "light_spar", "wander", "aggress", "idle", "scripted",
};

PolicyKind partner_for(PolicyKind npc_policy) {
    switch (npc_policy) {
        case PolicyKind::offense: return PolicyKind::light_spar;
        case PolicyKind::control: return PolicyKind::wander;
        case PolicyKind::defense: return PolicyKind::aggress;
        default: return PolicyKind::idle;
    }
}

namespace {

constexpr codec::Button k_attacks[6] = {
    codec::BTN_A, codec::BTN_B, codec::BTN_C,
    codec::BTN_X, codec::BTN_Y, codec::BTN_Z,
};

class PolicyAgent final : public Agent {
  public:
    PolicyAgent(PolicyKind kind, uint64_t seed) : kind_(kind), rng_(seed) {}

    ButtonVector act(const EngineState& st, FighterId self) override {
        const FighterState& me = st.fighter(self);
        const FighterState& opp = st.fighter(other(self));
        switch (kind_) {
            case PolicyKind::offense: return rusher(me, opp, 0.13, 0.55, 0.08);
            case PolicyKind::aggress: return rusher(me, opp, 0.14, 0.50, 0.04);
            case PolicyKind::control: return zoner(me, opp);
            case PolicyKind::defense: return turtle(me, opp);
            case PolicyKind::light_spar: return spar(me, opp);
            case PolicyKind::wander: return drift(me, opp);
            default: return {};
        }
    }

  private:
    static codec::Button toward(const FighterState& me, const FighterState& opp) {
        return opp.x > me.x ? codec::BTN_RIGHT : codec::BTN_LEFT;
    }
    static codec::Button away(const FighterState& me, const FighterState& opp) {
        return opp.x > me.x ? codec::BTN_LEFT : codec::BTN_RIGHT;
    }

    ButtonVector rusher(const FighterState& me, const FighterState& opp,
                        double reach, double attack_p, double grab_p) {
        ButtonVector out;
        if (cool_ > 0) --cool_;
        if (!me.free() || me.airborne) return out;
        const double dist = std::abs(me.x - opp.x);
        if (dist > reach) {
            out.set(toward(me, opp));
            return out;
        }
        if (cool_ > 0) return out;
        const double r = rng_.next_unit();
        if (dist < 0.125 && r < grab_p) {
            out.set(codec::BTN_A);
            out.set(codec::BTN_X);
            cool_ = 3;
            return out;
        }
        if (r < attack_p) {
            out.set(k_attacks[rng_.next_below(6)]);
            cool_ = 2;
        }
        return out;
    }

    ButtonVector zoner(const FighterState& me, const FighterState& opp) {
        ButtonVector out;
        if (cool_ > 0) --cool_;
        if (!me.free() || me.airborne) return out;
        const double dist = std::abs(me.x - opp.x);
        if (cool_ == 0 && dist > 0.30) {
            out.set(codec::BTN_DOWN);
            out.set(codec::BTN_A);
            out.set(codec::BTN_B);
            cool_ = 30 + int(rng_.next_below(9));
            return out;
        }
        const bool at_wall = me.x <= tune::wall_left + 0.02 || me.x >= tune::wall_right - 0.02;
        if (dist < 0.42 && !at_wall) out.set(away(me, opp));
        return out;
    }

    ButtonVector turtle(const FighterState& me, const FighterState& opp) {
        ButtonVector out;
        const double corner = me.x >= opp.x ? tune::wall_right - 0.015 : tune::wall_left + 0.015;
        if (stand_ > 0) {
            --stand_;
            out.set(away(me, opp)); // standing guard
            return out;
        }
        if (std::abs(me.x - corner) > 0.02 && me.free() && !me.airborne) {
            out.set(corner > me.x ? codec::BTN_RIGHT : codec::BTN_LEFT);
            return out;
        }
        if (rng_.next_unit() < 0.01 && me.free()) stand_ = 8;
        out.set(codec::BTN_DOWN); // crouch guard, held through stun
        return out;
    }

    ButtonVector spar(const FighterState& me, const FighterState& opp) {
        ButtonVector out;
        if (cool_ > 0) --cool_;
        if (!me.free() || me.airborne) return out;
        const double dist = std::abs(me.x - opp.x);
        if (dist > 0.20) {
            out.set(toward(me, opp));
            return out;
        }
        if (cool_ == 0 && rng_.next_unit() < 0.04) {
            out.set(k_attacks[rng_.next_below(6)]);
            cool_ = 4;
        }
        return out;
    }

    ButtonVector drift(const FighterState& me, const FighterState& opp) {
        ButtonVector out;
        if (timer_ <= 0) {
            dir_ = int(rng_.next_below(3)) - 1;
            timer_ = 14 + int(rng_.next_below(12));
        }
        --timer_;
        if (!me.free() || me.airborne) return out;
        const double dist = std::abs(me.x - opp.x);
        if (dist < 0.30) {
            out.set(away(me, opp));
            return out;
        }
        int dir = dir_;
        if (me.x < 0.12) dir = 1;
        if (me.x > 0.88) dir = -1;
        if (dir > 0) out.set(codec::BTN_RIGHT);
        if (dir < 0) out.set(codec::BTN_LEFT);
        if (rng_.next_unit() < 0.008) out.set(codec::BTN_UP); // rare hop
        return out;
    }

    PolicyKind kind_;
    Rng rng_;
    int cool_ = 0;
    int stand_ = 0;
    int timer_ = 0;
    int dir_ = 0;
};

class ScriptedAgent final : public Agent {
  public:
    explicit ScriptedAgent(codec::ActionTable table) : table_(std::move(table)) {}
    ButtonVector act(const EngineState&, FighterId) override {
        if (next_ >= table_.rows.size()) return {};
        return table_.rows[next_++];
    }

  private:
    codec::ActionTable table_;
    size_t next_ = 0;
};

} // namespace

std::unique_ptr<Agent> make_policy_agent(PolicyKind kind, uint64_t seed) {
    return std::make_unique<PolicyAgent>(kind, seed);
}

std::unique_ptr<Agent> make_scripted_agent(codec::ActionTable table) {
    return std::make_unique<ScriptedAgent>(std::move(table));
}

} // namespace gwm::sim
