#include "gwm/codec.hpp"

#include <stdexcept>

namespace gwm::codec {

const std::array<const char*, behavior_count> behavior_names = {
    "No-op",
    "Walk Left", "Walk Right", "Jump", "Crouch",
    "Light Punch", "Medium Punch", "Heavy Punch",
    "Light Kick", "Medium Kick", "Heavy Kick",
    "Jump Right", "Jump Left",
};

std::optional<Behavior> behavior_from_name(std::string_view name) {
    for (int i = 0; i < behavior_count; ++i)
        if (name == behavior_names[i]) return Behavior(i);
    return std::nullopt;
}

AttackSemantic behavior_attack_semantic(Behavior b) {
    if (!is_attack_behavior(b)) throw std::invalid_argument("not an attack behaviour");
    return AttackSemantic(int(b) - int(Behavior::light_punch));
}

Behavior attack_behavior(AttackSemantic s) {
    return Behavior(int(Behavior::light_punch) + int(s));
}

std::vector<ButtonVector> behavior_buttons(GameVariant v, Behavior b, int frames) {
    if (frames < 1) throw std::invalid_argument("frames < 1");
    std::vector<ButtonVector> out(static_cast<size_t>(frames));
    ButtonVector held, edge;
    switch (b) {
        case Behavior::noop: break;
        case Behavior::walk_left: held.set(BTN_LEFT); break;
        case Behavior::walk_right: held.set(BTN_RIGHT); break;
        case Behavior::crouch: held.set(BTN_DOWN); break;
        case Behavior::jump: edge.set(BTN_UP); break;
        case Behavior::jump_right:
            edge.set(BTN_UP);
            held.set(BTN_RIGHT);
            break;
        case Behavior::jump_left:
            edge.set(BTN_UP);
            held.set(BTN_LEFT);
            break;
        default:
            edge.set(attack_button(v, behavior_attack_semantic(b)));
            break;
    }
    for (auto& row : out) row = held;
    out[0] = out[0] | edge;
    return out;
}

} // namespace gwm::codec
