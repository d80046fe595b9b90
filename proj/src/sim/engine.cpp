#include "gwm/sim.hpp"

#include <algorithm>
#include <cmath>

namespace gwm::sim {

const std::array<const char*, attack_kind_count> attack_kind_names = {
    "light_punch", "medium_punch", "heavy_punch",
    "light_kick", "medium_kick", "heavy_kick",
    "grab", "special", "fireball",
};

const std::array<const char*, 16> event_type_names = {
    "attack_start", "attack_hit", "attack_block",
    "damage", "knockdown", "wakeup", "ko",
    "projectile_launch", "projectile_hit", "projectile_block",
    "crouch_start", "crouch_end", "jump_start", "land",
    "forward_step", "backward_step",
};

bool attack_kind_is_melee(AttackKind k) {
    return int(k) <= int(AttackKind::heavy_kick);
}

const AttackProfile& attack_profile(AttackKind k) {
    // startup, active, recovery, reach (centre to centre), damage, knocks_down
    static const AttackProfile profiles[attack_kind_count] = {
        {3, 5, 6, tune::reach_light, tune::dmg_light, false},    // LP
        {4, 5, 8, tune::reach_medium, tune::dmg_medium, false},  // MP
        {5, 6, 10, tune::reach_heavy, tune::dmg_heavy, true},    // HP
        {3, 5, 6, tune::reach_light, tune::dmg_light, false},    // LK
        {4, 5, 8, tune::reach_medium, tune::dmg_medium, false},  // MK
        {5, 6, 10, tune::reach_heavy, tune::dmg_heavy, true},    // HK
        {2, 2, 8, tune::reach_throw, tune::dmg_throw, true},     // grab
        {6, 6, 12, tune::reach_special, tune::dmg_special, true},// special
        {4, 1, 10, 0.0, tune::dmg_projectile, false},            // fireball (spawn frame)
    };
    return profiles[size_t(k)];
}

namespace {

AttackKind melee_kind(codec::GameVariant v, codec::Button b) {
    // AttackKind LP..HK mirrors AttackSemantic declaration order.
    return AttackKind(int(codec::attack_semantic(v, b)));
}

constexpr codec::Button k_attack_buttons[6] = {
    codec::BTN_A, codec::BTN_B, codec::BTN_C,
    codec::BTN_X, codec::BTN_Y, codec::BTN_Z,
};

double clamp_walls(double x) {
    return std::clamp(x, tune::wall_left, tune::wall_right);
}

double jump_height(int k) {
    const double t = double(k), total = double(tune::jump_frames);
    return 4.0 * tune::jump_peak * t * (total - t) / (total * total);
}

double fighter_height(const FighterState& f) {
    return (f.crouching ? 10.0 : 16.0) / 64.0;
}

} // namespace

Engine::Engine(GameVariant v) : variant_(v) { reset(); }

void Engine::reset(double player_x, double npc_x) {
    st_ = EngineState{};
    st_.fighters[0].x = player_x;
    st_.fighters[1].x = npc_x;
    st_.fighters[0].facing = npc_x >= player_x ? 1 : -1;
    st_.fighters[1].facing = -st_.fighters[0].facing;
    prev_buttons_ = {};
    walk_dir_ = {};
    events_.clear();
}

void Engine::emit(EventType t, FighterId actor, AttackKind k, int amount) {
    events_.push_back(Event{st_.frame, t, actor, k, amount, st_.distance()});
}

void Engine::step(ButtonVector player, ButtonVector npc) {
    const std::array<ButtonVector, 2> now = {player, npc};

    for (int i = 0; i < 2; ++i) {
        FighterState& f = st_.fighters[size_t(i)];
        f.blocked_this_frame = false;
        f.down_held = now[size_t(i)].get(codec::BTN_DOWN);
    }

    // timers
    for (int i = 0; i < 2; ++i) {
        FighterState& f = st_.fighters[size_t(i)];
        if (f.knocked_out) {
            f.knockdown = std::max(f.knockdown, 1); // stays down
        } else if (f.knockdown > 0) {
            if (--f.knockdown == 0) {
                f.wakeup = tune::wakeup_frames;
                emit(EventType::wakeup, FighterId(i));
            }
        } else if (f.wakeup > 0) {
            --f.wakeup;
        }
        if (f.hit_stun > 0) --f.hit_stun;
        if (f.block_stun > 0) --f.block_stun;
    }

    // new actions, then advance attacks already in flight
    std::array<bool, 2> just_started = {false, false};
    for (int i = 0; i < 2; ++i) {
        bool was_attacking = st_.fighters[size_t(i)].attacking;
        begin_actions(FighterId(i), now[size_t(i)], prev_buttons_[size_t(i)]);
        just_started[size_t(i)] = !was_attacking && st_.fighters[size_t(i)].attacking;
    }
    std::vector<PendingHit> hits;
    for (int i = 0; i < 2; ++i) {
        if (!just_started[size_t(i)]) advance_attack(FighterId(i), hits);
    }
    cur_buttons_ = now;
    for (const PendingHit& h : hits) apply_hit(h);

    // movement and posture
    for (int i = 0; i < 2; ++i) move_fighter(FighterId(i), now[size_t(i)]);
    resolve_bodies();
    update_projectiles();

    // facing follows the opponent whenever the fighter is actionable
    for (int i = 0; i < 2; ++i) {
        FighterState& f = st_.fighters[size_t(i)];
        const FighterState& o = st_.fighters[size_t(1 - i)];
        if (f.grounded() && f.free()) {
            if (o.x > f.x) f.facing = 1;
            else if (o.x < f.x) f.facing = -1;
        }
    }

    prev_buttons_ = now;
    ++st_.frame;
}

void Engine::begin_actions(FighterId fid, ButtonVector now, ButtonVector prev) {
    FighterState& f = st_.fighter(fid);
    if (!f.free()) return;

    ButtonVector edges{uint16_t(now.bits & ~prev.bits)};
    auto start_attack = [&](AttackKind k) {
        f.attacking = true;
        f.atk = k;
        f.atk_frame = 0;
        // amount flags an airborne (jumping) attack
        emit(EventType::attack_start, fid, k, f.airborne ? 1 : 0);
    };

    if (f.grounded()) {
        // chords first: grab, special, fireball
        if (now.get(codec::BTN_A) && now.get(codec::BTN_X) &&
            (edges.get(codec::BTN_A) || edges.get(codec::BTN_X))) {
            start_attack(AttackKind::grab);
            return;
        }
        if (now.get(codec::BTN_DOWN) && now.get(codec::BTN_C) && now.get(codec::BTN_Z) &&
            (edges.get(codec::BTN_C) || edges.get(codec::BTN_Z))) {
            start_attack(AttackKind::special);
            return;
        }
        if (now.get(codec::BTN_DOWN) && now.get(codec::BTN_A) && now.get(codec::BTN_B) &&
            (edges.get(codec::BTN_A) || edges.get(codec::BTN_B))) {
            int live = 0;
            for (const Projectile& p : st_.projectiles)
                if (p.owner == fid) ++live;
            if (live < tune::max_live_projectiles) start_attack(AttackKind::fireball);
            return;
        }
    }
    for (codec::Button b : k_attack_buttons) {
        if (edges.get(b)) {
            start_attack(melee_kind(variant_, b));
            return;
        }
    }
    if (f.grounded() && edges.get(codec::BTN_UP) && !now.get(codec::BTN_DOWN)) {
        f.airborne = true;
        f.jump_frame = 0;
        f.crouching = false;
        int dir = (now.get(codec::BTN_RIGHT) ? 1 : 0) - (now.get(codec::BTN_LEFT) ? 1 : 0);
        f.air_vx = tune::walk_speed * dir;
        emit(EventType::jump_start, fid);
    }
}

void Engine::advance_attack(FighterId fid, std::vector<PendingHit>& hits) {
    FighterState& f = st_.fighter(fid);
    if (!f.attacking) return;
    const AttackProfile& p = attack_profile(f.atk);
    ++f.atk_frame;
    if (f.atk_frame == p.startup) {
        // first active frame: single resolution point
        if (f.atk == AttackKind::fireball) {
            int live = 0;
            for (const Projectile& pr : st_.projectiles)
                if (pr.owner == fid) ++live;
            if (live < tune::max_live_projectiles) {
                Projectile pr;
                pr.owner = fid;
                pr.x = f.x + 0.09 * f.facing;
                pr.vx = tune::projectile_speed * f.facing;
                st_.projectiles.push_back(pr);
                emit(EventType::projectile_launch, fid, AttackKind::fireball);
            }
        } else {
            hits.push_back(PendingHit{fid, f.atk});
        }
    }
    if (f.atk_frame >= p.startup + p.active + p.recovery) {
        f.attacking = false;
        f.atk_frame = 0;
    }
}

void Engine::apply_hit(const PendingHit& h) {
    FighterState& a = st_.fighter(h.attacker);
    FighterState& d = st_.fighter(other(h.attacker));
    const AttackProfile& p = attack_profile(h.kind);

    if (d.knockdown > 0 || d.wakeup > 0 || d.knocked_out) return; // invulnerable
    const double dist = std::abs(a.x - d.x);
    if (h.kind == AttackKind::grab) {
        if (!d.grounded() || dist > p.reach) return; // whiff
    } else {
        if (dist > p.reach || std::abs(a.y - d.y) > tune::melee_y_gate) return;
    }

    const double push_dir = (d.x >= a.x) ? 1.0 : -1.0;
    if (h.kind != AttackKind::grab) {
        const ButtonVector db = cur_buttons_[size_t(other(h.attacker))];
        const bool away = (push_dir > 0) ? db.get(codec::BTN_RIGHT) : db.get(codec::BTN_LEFT);
        const bool can_block =
            d.grounded() && !d.attacking && d.hit_stun == 0 && (d.crouching || away);
        if (can_block) {
            d.block_stun = tune::block_stun;
            d.blocked_this_frame = true;
            d.x = clamp_walls(d.x + tune::pushback_block * push_dir);
            emit(EventType::attack_block, other(h.attacker), h.kind, d.crouching ? 1 : 0);
            return;
        }
    }

    // clean hit
    d.attacking = false; // interrupted
    d.atk_frame = 0;
    d.health = std::max(0, d.health - p.damage);
    d.x = clamp_walls(d.x + tune::pushback_hit * push_dir);
    emit(EventType::attack_hit, h.attacker, h.kind);
    emit(EventType::damage, other(h.attacker), h.kind, p.damage);

    const bool ko = d.health == 0;
    if (ko) {
        d.knocked_out = true;
        emit(EventType::ko, other(h.attacker), h.kind);
    }
    if (p.knocks_down || ko) {
        d.knockdown = tune::knockdown_frames;
        d.hit_stun = 0;
        if (d.airborne) {
            d.airborne = false;
            d.y = 0.0;
            d.jump_frame = 0;
            d.air_vx = 0.0;
        }
        if (d.crouching) {
            d.crouching = false;
            emit(EventType::crouch_end, other(h.attacker));
        }
        emit(EventType::knockdown, other(h.attacker), h.kind);
    } else {
        d.hit_stun = tune::hit_stun;
    }
}

void Engine::move_fighter(FighterId fid, ButtonVector now) {
    FighterState& f = st_.fighter(fid);
    const FighterState& o = st_.fighter(other(fid));

    if (f.airborne) {
        ++f.jump_frame;
        if (f.jump_frame >= tune::jump_frames) {
            f.airborne = false;
            f.y = 0.0;
            f.jump_frame = 0;
            f.air_vx = 0.0;
            emit(EventType::land, fid);
        } else {
            f.y = jump_height(f.jump_frame);
            f.x = clamp_walls(f.x + f.air_vx);
        }
        walk_dir_[size_t(fid)] = 0;
        return;
    }

    // crouch posture persists through hit/block stun but not knockdown
    const bool may_crouch =
        f.knockdown == 0 && f.wakeup == 0 && !f.knocked_out;
    const bool want_crouch = may_crouch && f.down_held;
    if (want_crouch != f.crouching) {
        f.crouching = want_crouch;
        emit(want_crouch ? EventType::crouch_start : EventType::crouch_end, fid);
    }

    int dir = 0;
    if (f.free() && !f.crouching) {
        dir = (now.get(codec::BTN_RIGHT) ? 1 : 0) - (now.get(codec::BTN_LEFT) ? 1 : 0);
        if (dir != 0) {
            f.x = clamp_walls(f.x + tune::walk_speed * dir);
            if (dir != walk_dir_[size_t(fid)]) {
                const int toward = (o.x > f.x) ? 1 : (o.x < f.x ? -1 : 0);
                // amount carries the screen direction (-1 left, +1 right)
                emit(dir == toward ? EventType::forward_step : EventType::backward_step,
                     fid, AttackKind::light_punch, dir);
            }
        }
    }
    walk_dir_[size_t(fid)] = dir;
}

void Engine::resolve_bodies() {
    FighterState& a = st_.fighters[0];
    FighterState& b = st_.fighters[1];
    if (a.airborne || b.airborne) return;
    if (a.knockdown > 0 || b.knockdown > 0 || a.knocked_out || b.knocked_out) return;
    const double gap = std::abs(a.x - b.x);
    if (gap >= tune::body_min_gap) return;

    FighterState& left = (a.x <= b.x) ? a : b;
    FighterState& right = (a.x <= b.x) ? b : a;
    const double need = tune::body_min_gap - gap;
    left.x -= need * 0.5;
    right.x += need * 0.5;
    if (left.x < tune::wall_left) {
        right.x += tune::wall_left - left.x;
        left.x = tune::wall_left;
    }
    if (right.x > tune::wall_right) {
        left.x -= right.x - tune::wall_right;
        right.x = tune::wall_right;
    }
    left.x = clamp_walls(left.x);
    right.x = clamp_walls(right.x);
}

void Engine::update_projectiles() {
    auto& ps = st_.projectiles;
    for (size_t i = 0; i < ps.size();) {
        Projectile& p = ps[i];
        p.x += p.vx;
        bool remove = p.x < -0.05 || p.x > 1.05;

        if (!remove) {
            FighterId did = other(p.owner);
            FighterState& d = st_.fighter(did);
            const bool invuln = d.knockdown > 0 || d.wakeup > 0 || d.knocked_out;
            const bool overlap_x = std::abs(p.x - d.x) <= tune::projectile_radius + tune::body_half;
            const bool overlap_y = d.y <= tune::projectile_y &&
                                   tune::projectile_y <= d.y + fighter_height(d);
            if (!invuln && overlap_x && overlap_y) {
                const double push_dir = (p.vx > 0) ? 1.0 : -1.0;
                const ButtonVector db = cur_buttons_[size_t(did)];
                const bool away = (push_dir > 0) ? db.get(codec::BTN_RIGHT) : db.get(codec::BTN_LEFT);
                const bool can_block =
                    d.grounded() && !d.attacking && d.hit_stun == 0 && (d.crouching || away);
                if (can_block) {
                    d.block_stun = tune::block_stun;
                    d.blocked_this_frame = true;
                    d.x = clamp_walls(d.x + tune::pushback_block * push_dir);
                    emit(EventType::projectile_block, did, AttackKind::fireball, d.crouching ? 1 : 0);
                } else {
                    d.attacking = false;
                    d.atk_frame = 0;
                    d.health = std::max(0, d.health - tune::dmg_projectile);
                    d.hit_stun = tune::hit_stun;
                    d.x = clamp_walls(d.x + tune::pushback_hit * push_dir);
                    emit(EventType::projectile_hit, p.owner, AttackKind::fireball);
                    emit(EventType::damage, did, AttackKind::fireball, tune::dmg_projectile);
                    if (d.health == 0) {
                        d.knocked_out = true;
                        d.knockdown = tune::knockdown_frames;
                        d.hit_stun = 0;
                        emit(EventType::ko, did, AttackKind::fireball);
                        emit(EventType::knockdown, did, AttackKind::fireball);
                    }
                }
                remove = true;
            }
        }

        if (remove) ps.erase(ps.begin() + long(i));
        else ++i;
    }
}

} // namespace gwm::sim
