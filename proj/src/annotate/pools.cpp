#include <stdexcept>

#include "gwm/annotate.hpp"

namespace gwm::annotate {

const std::array<const char*, k_active_tag_count> active_tag_names = {
    "Crouch", "Walk L", "Walk R", "Punch", "Kick",
    "Jumping Attack", "Throw", "Special", "Projectile"};

const std::array<const char*, k_passive_tag_count> passive_tag_names = {
    "Standing Block", "Crouching Block", "Take Damage", "Knockback",
    "Knockdown", "Wake Up", "Stun", "Evade"};

const std::vector<std::string>& ParaphrasePools::pool_for(StrategyLabel label) const {
    switch (label) {
        case StrategyLabel::offense: return offense;
        case StrategyLabel::control: return control;
        case StrategyLabel::defense: return defense;
        default: throw std::invalid_argument("pool_for: no pool for Dropped");
    }
}

const ParaphrasePools& builtin_pools() {
    static const ParaphrasePools pools = [] {
        ParaphrasePools p;
        p.version = 1;
        p.offense = {
            "The NPC fights aggressively, closing the distance and attacking"
            " relentlessly at close range.",
            "The NPC rushes the player down, staying close and landing a constant"
            " stream of melee attacks.",
            "The NPC presses forward the whole round and overwhelms the player"
            " with close-range strikes.",
            "The NPC plays an all-out attacking style, charging in and throwing"
            " out attack after attack.",
            "The NPC hunts the player across the stage and keeps up heavy"
            " offensive pressure.",
            "The NPC commits fully to offense, advancing constantly and attacking"
            " whenever it gets close.",
            "The NPC keeps relentless forward pressure on the player, initiating"
            " almost every exchange.",
        };
        p.control = {
            "The NPC controls space from a distance, firing projectiles and"
            " refusing to approach.",
            "The NPC keeps the player away with projectiles, holding its ground"
            " at long range.",
            "The NPC plays a zoning game, staying far back and throwing"
            " projectiles to deny any approach.",
            "The NPC dominates the screen with projectiles while avoiding all"
            " close-range contact.",
            "The NPC stays out of reach and uses projectiles to dictate the pace"
            " of the match.",
        };
        p.defense = {
            "The NPC plays purely defensively, crouching and blocking instead of"
            " attacking.",
            "The NPC turtles up, guarding low and absorbing the player's attacks"
            " without retaliating.",
            "The NPC avoids all aggression, holding a guard stance and weathering"
            " the player's offense.",
            "The NPC retreats into its guard, blocking attacks and never starting"
            " an exchange of its own.",
            "The NPC stays passive, crouch-blocking the player's strikes and"
            " giving up no openings.",
            "The NPC hunkers down in a defensive crouch and lets the player's"
            " attacks bounce off its guard.",
            "The NPC concedes the initiative entirely, shielding itself and"
            " refusing to fight back.",
            "The NPC prioritizes survival, guarding against every attack rather"
            " than ever attacking.",
        };
        p.active_desc = {
            "stays low in a crouching stance",
            "walks toward the left side of the screen",
            "walks toward the right side of the screen",
            "throws punches",
            "throws kicks",
            "attacks while airborne",
            "grabs and throws the opponent",
            "uses a special melee move",
            "launches projectiles",
        };
        p.passive_desc = {
            "blocks attacks while standing",
            "blocks attacks while crouching",
            "gets hit and takes damage",
            "is pushed back by incoming hits",
            "is knocked down to the ground",
            "rises after being knocked down",
            "is briefly stunned by a hit",
            "evades incoming attacks",
        };
        return p;
    }();
    return pools;
}

}  // namespace gwm::annotate
