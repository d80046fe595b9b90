#pragma once
// Deterministic two-fighter arena: fixed-point-free f64 physics on a unit
// stage, frame-data driven attacks, blocking, throws, projectiles, knockdowns,
// and a 64x48 renderer with per-fighter colour keys.  Everything is integer
// frame counts and exact double arithmetic — stepping twice from the same
// state and inputs yields byte-identical frames.

#include "gwm/codec.hpp"
#include "gwm/frames.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

namespace gwm::sim {

using codec::ButtonVector;
using codec::GameVariant;

// ---------------------------------------------------------------- tuning ---
// Arena x in [0,1] (left→right), y = height above ground in arena units.
namespace tune {
inline constexpr double wall_left = 0.06;
inline constexpr double wall_right = 0.94;
inline constexpr double spawn_player_x = 0.30;
inline constexpr double spawn_npc_x = 0.70;
inline constexpr double walk_speed = 0.010;
inline constexpr int jump_frames = 24;      // airborne duration
inline constexpr double jump_peak = 0.25;   // apex height
inline constexpr double body_half = 0.055;  // collision half-width
inline constexpr double body_min_gap = 0.115;
inline constexpr double melee_y_gate = 0.15;

inline constexpr int start_health = 100;
inline constexpr int hit_stun = 10;
inline constexpr int block_stun = 6;
inline constexpr int knockdown_frames = 30;
inline constexpr int wakeup_frames = 10;
inline constexpr double pushback_hit = 0.02;
inline constexpr double pushback_block = 0.012;

// reach is measured between fighter centres
inline constexpr double reach_light = 0.135;
inline constexpr double reach_medium = 0.175;
inline constexpr double reach_heavy = 0.215;
inline constexpr double reach_throw = 0.125;
inline constexpr double reach_special = 0.24;
inline constexpr int dmg_light = 4, dmg_medium = 7, dmg_heavy = 10;
inline constexpr int dmg_throw = 8, dmg_special = 10, dmg_projectile = 6;

inline constexpr double projectile_speed = 0.015;
inline constexpr double projectile_radius = 0.05;
inline constexpr double projectile_y = 0.15625; // shoulder height (10 px)
inline constexpr int max_live_projectiles = 2;  // per owner
} // namespace tune

// ------------------------------------------------------------- entities ---
enum class FighterId : int { player = 0, npc = 1 };
inline FighterId other(FighterId f) {
    return f == FighterId::player ? FighterId::npc : FighterId::player;
}

enum class AttackKind : int {
    light_punch = 0, medium_punch, heavy_punch,
    light_kick, medium_kick, heavy_kick,
    grab, special, fireball,
};
inline constexpr int attack_kind_count = 9;
extern const std::array<const char*, attack_kind_count> attack_kind_names;
bool attack_kind_is_melee(AttackKind k); // LP..HK (grab/special counted separately)

struct AttackProfile {
    int startup, active, recovery;
    double reach;
    int damage;
    bool knocks_down;
};
const AttackProfile& attack_profile(AttackKind k);

enum class EventType : int {
    attack_start = 0, attack_hit, attack_block,
    damage, knockdown, wakeup, ko,
    projectile_launch, projectile_hit, projectile_block,
    crouch_start, crouch_end, jump_start, land,
    forward_step, backward_step,
};
extern const std::array<const char*, 16> event_type_names;

struct Event {
    int frame = 0;
    EventType type{};
    FighterId actor{};        // who did / suffered it (damage: the one damaged)
    AttackKind kind{};        // valid for attack_* / projectile hits
    int amount = 0;           // damage: points; blocks: crouched flag;
                              // attack_start: airborne flag; steps: screen dir
    double distance = 0.0;    // |player.x - npc.x| when it happened
};

struct FighterState {
    double x = 0.0, y = 0.0;
    int facing = 1;        // +1 looks right
    int health = tune::start_health;
    bool crouching = false;
    bool airborne = false;
    int jump_frame = 0;    // 1..jump_frames while airborne
    double air_vx = 0.0;   // fixed at takeoff

    bool attacking = false;
    AttackKind atk{};
    int atk_frame = 0;     // frames since attack_start (0 = just started)

    int hit_stun = 0, block_stun = 0, knockdown = 0, wakeup = 0;
    bool knocked_out = false;
    bool blocked_this_frame = false; // set when a block connects (render pose)

    bool down_held = false; // DOWN from the live controller (pose bookkeeping)

    bool grounded() const { return !airborne; }
    bool incapacitated() const {
        return hit_stun > 0 || block_stun > 0 || knockdown > 0 || wakeup > 0 || knocked_out;
    }
    // free to start moves / walk
    bool free() const { return !attacking && !incapacitated(); }
};

struct Projectile {
    FighterId owner{};
    double x = 0.0, y = tune::projectile_y;
    double vx = 0.0;
};

struct EngineState {
    int frame = 0; // frames simulated so far
    std::array<FighterState, 2> fighters{};
    std::vector<Projectile> projectiles;

    const FighterState& fighter(FighterId f) const { return fighters[size_t(f)]; }
    FighterState& fighter(FighterId f) { return fighters[size_t(f)]; }
    double distance() const { return std::abs(fighters[0].x - fighters[1].x); }
};

// --------------------------------------------------------------- engine ---
class Engine {
  public:
    explicit Engine(GameVariant v);

    // Fresh round at the given spawn columns.
    void reset(double player_x = tune::spawn_player_x, double npc_x = tune::spawn_npc_x);

    // Advance one frame with both controllers.
    void step(ButtonVector player, ButtonVector npc);

    const EngineState& state() const { return st_; }
    EngineState& mutable_state() { return st_; } // fixtures restore recorded states
    GameVariant variant() const { return variant_; }

    const std::vector<Event>& events() const { return events_; }
    void clear_events() { events_.clear(); }

  private:
    struct PendingHit {
        FighterId attacker;
        AttackKind kind;
    };

    void begin_actions(FighterId f, ButtonVector now, ButtonVector prev);
    void advance_attack(FighterId f, std::vector<PendingHit>& hits);
    void apply_hit(const PendingHit& h);
    void move_fighter(FighterId f, ButtonVector now);
    void resolve_bodies();
    void update_projectiles();
    void emit(EventType t, FighterId actor, AttackKind k = AttackKind::light_punch, int amount = 0);

    GameVariant variant_;
    EngineState st_;
    std::array<ButtonVector, 2> prev_buttons_{};
    std::array<ButtonVector, 2> cur_buttons_{};
    std::array<int, 2> walk_dir_{};    // -1/0/+1 last frame, for step events
    std::vector<Event> events_;
};

// ------------------------------------------------------------- renderer ---
inline constexpr int frame_w = 64;
inline constexpr int frame_h = 48;
inline constexpr int ground_row = 43; // feet rest here; floor starts below

struct Rgb {
    uint8_t r, g, b;
};
namespace palette {
inline constexpr Rgb sky{28, 28, 36};
inline constexpr Rgb floor{52, 48, 44};
inline constexpr Rgb player{40, 80, 255};
inline constexpr Rgb npc{255, 80, 40};
inline constexpr Rgb projectile{255, 240, 60};
} // namespace palette

struct PixelBox {
    int x0 = 0, y0 = 0, x1 = -1, y1 = -1; // inclusive; empty when x1 < x0
    int pixel_count = 0;
    bool empty() const { return pixel_count == 0; }
};

struct RenderResult {
    Frame frame;
    PixelBox player_box, npc_box; // exact key-colour pixels surviving occlusion
};

// Fixed draw order background → projectiles → npc → player, then the boxes
// are recovered by scanning for the exact key colours, so whatever the
// renderer reports is by definition what a colour-keyed segmenter can see.
RenderResult render(const EngineState& st);

// ------------------------------------------------------------- policies ---
enum class PolicyKind : int { offense = 0, control, defense, // npc strategies
                              light_spar, wander, aggress,   // player partners
                              idle, scripted };
extern const std::array<const char*, 8> policy_kind_names;

class Agent {
  public:
    virtual ~Agent() = default;
    virtual ButtonVector act(const EngineState& st, FighterId self) = 0;
};

// Seeded stateful policy agent; see policy.cpp for the behaviour table.
std::unique_ptr<Agent> make_policy_agent(PolicyKind kind, uint64_t seed);
// Plays back a fixed button table (noop past the end).
std::unique_ptr<Agent> make_scripted_agent(codec::ActionTable table);
// The sparring partner paired with each npc strategy when recording.
PolicyKind partner_for(PolicyKind npc_policy);

// -------------------------------------------------------------- episode ---
struct EpisodeResult {
    GameVariant variant{};
    std::vector<Frame> frames;            // one per simulated frame
    std::vector<PixelBox> player_boxes, npc_boxes;
    codec::ActionTable player_actions, npc_actions;
    std::vector<Event> events;
    std::vector<EngineState> states;      // post-step snapshot per frame
};

// Steps `frames` times from the engine's current state.  The engine's event
// log is cleared first; frames/actions/states all have length `frames`.
EpisodeResult run_episode(Engine& eng, Agent& player, Agent& npc, int frames);

} // namespace gwm::sim
