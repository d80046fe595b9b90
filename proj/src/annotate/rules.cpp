#include <algorithm>

#include "gwm/annotate.hpp"

namespace gwm::annotate {

const std::array<const char*, 4> strategy_label_names = {
    "Offense", "Control", "Defense", "Dropped"};

StrategyLabel classify_strategy(const FactSheet& f) {
    const bool melee = f.has_melee();

    const bool offense = f.engagement_range == EngagementRange::close &&
                         f.advances == Advance::yes && melee &&
                         f.projectile_count == ProjectileCount::zero &&
                         f.close_range_pressure == YesNo::yes &&
                         f.who_attacks_more == WhoAttacksMore::npc;

    const bool control = (f.engagement_range == EngagementRange::mid ||
                          f.engagement_range == EngagementRange::far) &&
                         f.advances == Advance::no &&
                         f.projectile_count != ProjectileCount::zero && !melee &&
                         f.takes_damage == YesNo::no;

    const bool passive_movement =
        std::all_of(f.active_tags.begin(), f.active_tags.end(), [](ActiveTag t) {
            return t == ActiveTag::crouch || t == ActiveTag::walk_l ||
                   t == ActiveTag::walk_r;
        });
    const bool defense = !melee && f.projectile_count == ProjectileCount::zero &&
                         f.crouches_guard == YesNo::yes &&
                         (f.who_attacks_more == WhoAttacksMore::player ||
                          f.who_attacks_more == WhoAttacksMore::neither) &&
                         passive_movement && !f.passive_tags.empty();

    if (offense) return StrategyLabel::offense;
    if (control) return StrategyLabel::control;
    if (defense) return StrategyLabel::defense;
    return StrategyLabel::dropped;
}

}  // namespace gwm::annotate
