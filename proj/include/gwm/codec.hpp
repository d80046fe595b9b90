#pragma once
// Controller encoding shared by the engine, the recorder and the world model:
// a 12-bit button word (10 usable), per-variant attack button semantics, the
// 13-entry behaviour vocabulary with its edge/hold expansion, and the action
// table container with max-pool temporal downsampling and CSV round-trip.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gwm::codec {

enum class GameVariant { game1, game2 };

inline const char* variant_name(GameVariant v) {
    return v == GameVariant::game1 ? "game1" : "game2";
}
std::optional<GameVariant> variant_from_name(std::string_view name);

// Bit positions in the controller word.  R1/R2 exist on the pad but are never
// bound to anything; only the first ten bits carry gameplay.
enum Button : int {
    BTN_UP = 0, BTN_DOWN, BTN_LEFT, BTN_RIGHT,
    BTN_A, BTN_B, BTN_C, BTN_X, BTN_Y, BTN_Z,
    BTN_R1, BTN_R2,
};
inline constexpr int button_count = 12;
inline constexpr int usable_button_count = 10;
extern const std::array<const char*, button_count> button_names;

struct ButtonVector {
    uint16_t bits = 0;

    bool get(Button b) const { return (bits >> b) & 1u; }
    void set(Button b, bool on = true) {
        if (on) bits |= uint16_t(1u << b);
        else bits &= uint16_t(~(1u << b));
    }
    bool any() const { return bits != 0; }
    bool operator==(const ButtonVector&) const = default;
};

inline ButtonVector operator|(ButtonVector a, ButtonVector b) {
    return ButtonVector{uint16_t(a.bits | b.bits)};
}

// Strength/limb meaning of the six attack buttons.  The two game variants
// wire the same physical pad to different moves, which is exactly the
// discrepancy the per-variant action conditioning has to absorb.
enum class AttackSemantic { LP, MP, HP, LK, MK, HK };
extern const std::array<const char*, 6> attack_semantic_names;

AttackSemantic attack_semantic(GameVariant v, Button attack_button);
Button attack_button(GameVariant v, AttackSemantic s);
inline bool is_attack_button(Button b) { return b >= BTN_A && b <= BTN_Z; }

// Discrete behaviour vocabulary used for annotation and benchmark truth.
enum class Behavior : int {
    noop = 0,
    walk_left, walk_right, jump, crouch,
    light_punch, medium_punch, heavy_punch,
    light_kick, medium_kick, heavy_kick,
    jump_right, jump_left,
};
inline constexpr int behavior_count = 13;
extern const std::array<const char*, behavior_count> behavior_names;
std::optional<Behavior> behavior_from_name(std::string_view name);

inline bool is_attack_behavior(Behavior b) {
    return int(b) >= int(Behavior::light_punch) && int(b) <= int(Behavior::heavy_kick);
}
// Attack behaviours carry their semantic directly (LP..HK in declaration order).
AttackSemantic behavior_attack_semantic(Behavior b);
Behavior attack_behavior(AttackSemantic s);

// Expand a behaviour into a `frames`-long button block.  Directions are held
// for the whole block (walks, crouch, and the horizontal half of the diagonal
// jumps); UP and the attack buttons are single-frame edges at block start.
std::vector<ButtonVector> behavior_buttons(GameVariant v, Behavior b, int frames);

struct ActionTable {
    std::vector<ButtonVector> rows;

    size_t frames() const { return rows.size(); }
    void append(ButtonVector bv) { rows.push_back(bv); }
    bool operator==(const ActionTable&) const = default;
};

// Temporal max-pool of T rows into f rows.  Bin i covers source rows
// [floor(i*T/f), ceil((i+1)*T/f)); when f does not divide T neighbouring bins
// overlap by design, so no pressed button can fall into a crack.  Per-bit max
// over a bin is bitwise OR.
ActionTable pool_actions(const ActionTable& in, int f);

// The 10 usable bits as doubles, in bit order — the model's per-frame action
// feature.
std::array<double, usable_button_count> usable_bits(ButtonVector bv);

// CSV with header "frame,UP,...,R2" and one 0/1 row per frame.
void write_actions_csv(std::ostream& os, const ActionTable& t);
// Throws std::runtime_error on malformed input.
ActionTable read_actions_csv(std::istream& is);

} // namespace gwm::codec
