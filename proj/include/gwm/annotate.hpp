#pragma once

#include <array>
#include <set>
#include <string>
#include <vector>

#include "gwm/sim.hpp"
#include "gwm/trajectory.hpp"

namespace gwm::annotate {

// ---------------------------------------------------------------------------
// Stage-1 fact sheet: twelve closed-set observations about the NPC plus
// active/passive behavior tag lists drawn from fixed vocabularies.
// ---------------------------------------------------------------------------

enum class YesNo { no = 0, yes = 1 };
enum class ProjectileCount { zero = 0, one = 1, two_plus = 2 };
enum class EngagementRange { close = 0, mid = 1, far = 2 };
enum class Advance { yes = 0, no = 1, unclear = 2 };
enum class WhoAttacksMore { player = 0, npc = 1, both = 2, neither = 3 };

enum class ActiveTag {
    crouch = 0,
    walk_l,
    walk_r,
    punch,
    kick,
    jumping_attack,
    throw_grab,
    special,
    projectile,
};
inline constexpr int k_active_tag_count = 9;
extern const std::array<const char*, k_active_tag_count> active_tag_names;

enum class PassiveTag {
    standing_block = 0,
    crouching_block,
    take_damage,
    knockback,
    knockdown,
    wake_up,
    stun,
    evade,
};
inline constexpr int k_passive_tag_count = 8;
extern const std::array<const char*, k_passive_tag_count> passive_tag_names;

struct FactSheet {
    YesNo does_punch = YesNo::no;
    YesNo does_kick = YesNo::no;
    YesNo does_jumping_attack = YesNo::no;
    YesNo does_throw = YesNo::no;
    YesNo does_special_melee = YesNo::no;
    ProjectileCount projectile_count = ProjectileCount::zero;
    EngagementRange engagement_range = EngagementRange::far;
    Advance advances = Advance::unclear;
    YesNo takes_damage = YesNo::no;
    YesNo close_range_pressure = YesNo::no;
    YesNo crouches_guard = YesNo::no;
    WhoAttacksMore who_attacks_more = WhoAttacksMore::neither;
    std::set<ActiveTag> active_tags;
    std::set<PassiveTag> passive_tags;

    bool has_melee() const {
        return does_punch == YesNo::yes || does_kick == YesNo::yes ||
               does_jumping_attack == YesNo::yes || does_throw == YesNo::yes ||
               does_special_melee == YesNo::yes;
    }
};

// Oracle thresholds (numeric stand-ins for Stage-1 judgments).
namespace facts {
inline constexpr double range_close = 0.25;   // median distance < close
inline constexpr double range_mid = 0.50;     // < mid; else far
inline constexpr double advance_yes = 0.05;   // net toward-player displacement
inline constexpr double advance_no = -0.02;
inline constexpr double pressure_dist = 0.25; // attack distance that counts
inline constexpr int pressure_window = 40;    // frames
inline constexpr int pressure_count = 2;      // attacks within the window
}  // namespace facts

// Computes the fact sheet from the clip's event log and both characters'
// trajectories. Throws std::invalid_argument on empty trajectories.
FactSheet observe_facts_oracle(const std::vector<sim::Event>& events,
                               const Trajectory& traj_player,
                               const Trajectory& traj_npc);

// Ground-truth trajectory straight from engine pixel boxes (normalized by
// the frame dimensions; empty boxes become invalid frames).
Trajectory boxes_to_trajectory(const std::vector<sim::PixelBox>& boxes);

// ---------------------------------------------------------------------------
// Stage-2 rule engine.
// ---------------------------------------------------------------------------

enum class StrategyLabel { offense = 0, control = 1, defense = 2, dropped = 3 };
extern const std::array<const char*, 4> strategy_label_names;

StrategyLabel classify_strategy(const FactSheet& facts);

// ---------------------------------------------------------------------------
// Paraphrase pools and prompt assembly.
// ---------------------------------------------------------------------------

struct ParaphrasePools {
    int version = 0;
    std::vector<std::string> offense;
    std::vector<std::string> control;
    std::vector<std::string> defense;
    std::array<std::string, k_active_tag_count> active_desc;
    std::array<std::string, k_passive_tag_count> passive_desc;

    const std::vector<std::string>& pool_for(StrategyLabel label) const;
};

// The versioned pools shipped with the repo.
const ParaphrasePools& builtin_pools();

struct PromptClause {
    std::string tag;
    std::string description;
};

struct NpcPrompt {
    std::vector<PromptClause> active;
    std::vector<PromptClause> passive;
    std::string strategy_category;     // "Offense" | "Control" | "Defense"
    std::string strategy_description;  // pool entry chosen by md5(clip_relpath)
    size_t pool_index = 0;

    // Flattened conditioning text, byte-deterministic.
    std::string text() const;
};

// Picks strategy_description via (big-endian 128-bit MD5 of clip_relpath)
// mod pool size. Throws on Dropped label or empty pool.
NpcPrompt assemble_prompt(const FactSheet& facts, StrategyLabel label,
                          const std::string& clip_relpath,
                          const ParaphrasePools& pools);

// Player-centric baseline prompt: scene plus both characters' actions in
// event order, no strategy clause.
std::string vanilla_prompt(const std::vector<sim::Event>& events, codec::GameVariant variant);

// ---------------------------------------------------------------------------
// Composed clip annotation + prompt.json serialization.
// ---------------------------------------------------------------------------

struct ClipAnnotation {
    FactSheet facts;
    StrategyLabel label = StrategyLabel::dropped;
    NpcPrompt prompt;  // meaningful only when label != dropped
    std::string vanilla;
};

ClipAnnotation annotate_clip_oracle(const std::vector<sim::Event>& events,
                                    const Trajectory& traj_player,
                                    const Trajectory& traj_npc,
                                    codec::GameVariant variant,
                                    const std::string& clip_relpath,
                                    const ParaphrasePools& pools);

// Strict closed-set (de)serialization. Parsing rejects out-of-vocabulary
// values instead of coercing them.
std::string facts_to_json(const FactSheet& facts);
FactSheet facts_from_json(const std::string& json_text);

std::string prompt_json(const ClipAnnotation& ann);
ClipAnnotation parse_prompt_json(const std::string& json_text);

// ---------------------------------------------------------------------------
// External annotator endpoint (Stage-1 over the wire). POSTs
// {clip_id, frames_ref, schema_version} and expects the FactSheet JSON back.
// ---------------------------------------------------------------------------

inline constexpr int k_facts_schema_version = 1;

struct ExternalConfig {
    std::string host = "127.0.0.1";
    int port = 0;
    std::string path = "/annotate";
    int max_in_flight = 4;  // concurrent requests across observe_many
    int max_retries = 2;    // extra attempts on transient failures
    int timeout_ms = 5000;
};

struct ExternalResult {
    bool ok = false;
    FactSheet facts;
    std::string error;         // transport / status / schema reason
    std::string raw_response;  // body kept for diagnosis on failure
};

class ExternalAnnotator {
  public:
    explicit ExternalAnnotator(ExternalConfig cfg) : cfg_(std::move(cfg)) {}

    ExternalResult observe_facts(const std::string& clip_id,
                                 const std::string& frames_ref) const;

    // Runs all requests with at most cfg.max_in_flight in flight; results
    // line up with the (clip_id, frames_ref) inputs.
    std::vector<ExternalResult> observe_many(
        const std::vector<std::pair<std::string, std::string>>& clips) const;

  private:
    ExternalConfig cfg_;
};

}  // namespace gwm::annotate
