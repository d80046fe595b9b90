#include "gwm/codec.hpp"

#include <stdexcept>

namespace gwm::codec {

const std::array<const char*, button_count> button_names = {
    "UP", "DOWN", "LEFT", "RIGHT", "A", "B", "C", "X", "Y", "Z", "R1", "R2",
};

const std::array<const char*, 6> attack_semantic_names = {
    "LP", "MP", "HP", "LK", "MK", "HK",
};

std::optional<GameVariant> variant_from_name(std::string_view name) {
    if (name == "game1") return GameVariant::game1;
    if (name == "game2") return GameVariant::game2;
    return std::nullopt;
}

namespace {

// Pad wiring per variant, indexed by Button - BTN_A.
constexpr AttackSemantic k_game1_map[6] = {
    AttackSemantic::LK, AttackSemantic::MK, AttackSemantic::HK, // A B C
    AttackSemantic::LP, AttackSemantic::MP, AttackSemantic::HP, // X Y Z
};
constexpr AttackSemantic k_game2_map[6] = {
    AttackSemantic::LP, AttackSemantic::LK, AttackSemantic::MK, // A B C
    AttackSemantic::HP, AttackSemantic::MP, AttackSemantic::HK, // X Y Z
};

} // namespace

AttackSemantic attack_semantic(GameVariant v, Button b) {
    if (!is_attack_button(b)) throw std::invalid_argument("not an attack button");
    const auto& map = (v == GameVariant::game1) ? k_game1_map : k_game2_map;
    return map[b - BTN_A];
}

Button attack_button(GameVariant v, AttackSemantic s) {
    const auto& map = (v == GameVariant::game1) ? k_game1_map : k_game2_map;
    for (int i = 0; i < 6; ++i)
        if (map[i] == s) return Button(BTN_A + i);
    throw std::logic_error("semantic not wired"); // unreachable: maps are bijective
}

} // namespace gwm::codec
