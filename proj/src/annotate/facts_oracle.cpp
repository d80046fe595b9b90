#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gwm/annotate.hpp"

namespace gwm::annotate {
namespace {

bool is_punch(sim::AttackKind k) {
    return k == sim::AttackKind::light_punch || k == sim::AttackKind::medium_punch ||
           k == sim::AttackKind::heavy_punch;
}

bool is_kick(sim::AttackKind k) {
    return k == sim::AttackKind::light_kick || k == sim::AttackKind::medium_kick ||
           k == sim::AttackKind::heavy_kick;
}

double median(std::vector<double> v) {
    const size_t n = v.size();
    std::sort(v.begin(), v.end());
    return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

Trajectory boxes_to_trajectory(const std::vector<sim::PixelBox>& boxes) {
    Trajectory traj;
    traj.frames.reserve(boxes.size());
    for (const sim::PixelBox& b : boxes) {
        TrajectoryFrame f;
        if (!b.empty()) {
            const double w = double(b.x1 - b.x0 + 1);
            const double h = double(b.y1 - b.y0 + 1);
            f.valid = true;
            f.x = (b.x0 + 0.5 * (w - 1.0) + 0.5) / sim::frame_w;
            f.y = (b.y0 + 0.5 * (h - 1.0) + 0.5) / sim::frame_h;
            f.w = w / sim::frame_w;
            f.h = h / sim::frame_h;
            f.area = double(b.pixel_count) / (double(sim::frame_w) * sim::frame_h);
            f.aspect = h / w;
        }
        traj.frames.push_back(f);
    }
    return traj;
}

FactSheet observe_facts_oracle(const std::vector<sim::Event>& events,
                               const Trajectory& traj_player,
                               const Trajectory& traj_npc) {
    if (traj_player.valid_count() == 0 || traj_npc.valid_count() == 0)
        throw std::invalid_argument("observe_facts_oracle: empty trajectory");

    FactSheet fs;

    // --- Per-move facts and active tags, from npc attack_start events. ---
    std::vector<int> npc_attack_frames;       // for the pressure window
    std::vector<double> npc_attack_dist;
    int player_attacks = 0, npc_attacks = 0;
    for (const sim::Event& e : events) {
        const bool npc = e.actor == sim::FighterId::npc;
        switch (e.type) {
            case sim::EventType::attack_start: {
                (npc ? npc_attacks : player_attacks)++;
                if (!npc) break;
                npc_attack_frames.push_back(e.frame);
                npc_attack_dist.push_back(e.distance);
                const bool airborne = e.amount != 0;
                if (airborne) {
                    fs.does_jumping_attack = YesNo::yes;
                    fs.active_tags.insert(ActiveTag::jumping_attack);
                } else if (is_punch(e.kind)) {
                    fs.does_punch = YesNo::yes;
                    fs.active_tags.insert(ActiveTag::punch);
                } else if (is_kick(e.kind)) {
                    fs.does_kick = YesNo::yes;
                    fs.active_tags.insert(ActiveTag::kick);
                } else if (e.kind == sim::AttackKind::grab) {
                    fs.does_throw = YesNo::yes;
                    fs.active_tags.insert(ActiveTag::throw_grab);
                } else if (e.kind == sim::AttackKind::special) {
                    fs.does_special_melee = YesNo::yes;
                    fs.active_tags.insert(ActiveTag::special);
                }
                break;
            }
            case sim::EventType::projectile_launch:
                if (npc) {
                    fs.projectile_count =
                        fs.projectile_count == ProjectileCount::zero
                            ? ProjectileCount::one
                            : ProjectileCount::two_plus;
                    fs.active_tags.insert(ActiveTag::projectile);
                }
                break;
            case sim::EventType::crouch_start:
                if (npc) fs.active_tags.insert(ActiveTag::crouch);
                break;
            case sim::EventType::forward_step:
            case sim::EventType::backward_step:
                if (npc)
                    fs.active_tags.insert(e.amount < 0 ? ActiveTag::walk_l
                                                       : ActiveTag::walk_r);
                break;
            case sim::EventType::attack_block:
            case sim::EventType::projectile_block:
                if (npc) {
                    const bool crouched = e.amount != 0;
                    fs.passive_tags.insert(crouched ? PassiveTag::crouching_block
                                                    : PassiveTag::standing_block);
                    if (crouched) fs.crouches_guard = YesNo::yes;
                }
                break;
            case sim::EventType::damage:
                if (npc) {
                    fs.takes_damage = YesNo::yes;
                    fs.passive_tags.insert(PassiveTag::take_damage);
                    // A hit that did not floor the npc leaves it stunned.
                    const bool floored =
                        std::any_of(events.begin(), events.end(), [&](const sim::Event& k) {
                            return k.type == sim::EventType::knockdown &&
                                   k.actor == sim::FighterId::npc && k.frame == e.frame;
                        });
                    if (!floored) fs.passive_tags.insert(PassiveTag::stun);
                }
                break;
            case sim::EventType::knockdown:
                if (npc) fs.passive_tags.insert(PassiveTag::knockdown);
                break;
            case sim::EventType::wakeup:
                if (npc) fs.passive_tags.insert(PassiveTag::wake_up);
                break;
            default:
                break;
        }
    }

    // --- Engagement range: median inter-fighter distance. ---
    std::vector<double> dist;
    const size_t frames = std::min(traj_player.size(), traj_npc.size());
    for (size_t t = 0; t < frames; ++t) {
        const auto& p = traj_player.frames[t];
        const auto& n = traj_npc.frames[t];
        if (p.valid && n.valid) dist.push_back(std::abs(p.x - n.x));
    }
    if (dist.empty()) throw std::invalid_argument("observe_facts_oracle: no overlapping frames");
    const double med = median(dist);
    fs.engagement_range = med < facts::range_close ? EngagementRange::close
                          : med < facts::range_mid ? EngagementRange::mid
                                                   : EngagementRange::far;

    // --- Advances: net npc displacement projected toward the player. ---
    double toward = 0.0;
    const TrajectoryFrame* prev_p = nullptr;
    const TrajectoryFrame* prev_n = nullptr;
    for (size_t t = 0; t < frames; ++t) {
        const auto& p = traj_player.frames[t];
        const auto& n = traj_npc.frames[t];
        if (!p.valid || !n.valid) continue;
        if (prev_n != nullptr) {
            const double dir = prev_p->x > prev_n->x ? 1.0 : (prev_p->x < prev_n->x ? -1.0 : 0.0);
            toward += (n.x - prev_n->x) * dir;
        }
        prev_p = &p;
        prev_n = &n;
    }
    fs.advances = toward >= facts::advance_yes  ? Advance::yes
                  : toward <= facts::advance_no ? Advance::no
                                                : Advance::unclear;

    // --- Close-range pressure: >= 2 close npc attacks in a 40-frame window. ---
    for (size_t i = 0; i + 1 < npc_attack_frames.size() &&
                       fs.close_range_pressure == YesNo::no;
         ++i) {
        if (npc_attack_dist[i] >= facts::pressure_dist) continue;
        int in_window = 1;
        for (size_t j = i + 1; j < npc_attack_frames.size(); ++j) {
            if (npc_attack_frames[j] - npc_attack_frames[i] >= facts::pressure_window) break;
            if (npc_attack_dist[j] < facts::pressure_dist) ++in_window;
        }
        if (in_window >= facts::pressure_count) fs.close_range_pressure = YesNo::yes;
    }

    // --- Who attacks more. ---
    if (player_attacks == 0 && npc_attacks == 0)
        fs.who_attacks_more = WhoAttacksMore::neither;
    else if (player_attacks == npc_attacks)
        fs.who_attacks_more = WhoAttacksMore::both;
    else
        fs.who_attacks_more = npc_attacks > player_attacks ? WhoAttacksMore::npc
                                                           : WhoAttacksMore::player;

    return fs;
}

}  // namespace gwm::annotate
