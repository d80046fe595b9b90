#include "gwm/sim.hpp"

#include <cmath>

// 64x48 sprite renderer.  Fighters are flat colour-keyed silhouettes: 7x16
// standing, 7x10 crouched, 13x4 lying.  Attack limbs extend from the facing
// edge during active frames with length scaled by strength, so every move has
// a distinct silhouette a template matcher can pick up.  Draw order is fixed
// (background, projectiles, npc, player) and the reported per-fighter boxes
// are recovered from the finished frame by exact key-colour scan — they are
// the occlusion-aware ground truth the segmenter is tested against.

namespace gwm::sim {
namespace {

int iround(double v) { return int(std::lround(v)); }

void fill_rect(Frame& f, int x0, int y0, int x1, int y1, Rgb c) {
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            f.put(x, y, c.r, c.g, c.b);
}

struct Limb {
    int row_top, row_bot; // relative to feet row (positive = up)
    int length;
};

// limb rows measured in pixels above the feet
Limb melee_limb(AttackKind k, bool crouching) {
    const int strength = int(k) % 3; // 0 light, 1 medium, 2 heavy
    const int len = 5 + 4 * strength;
    const bool punch = int(k) < 3;
    if (punch) {
        if (crouching) return {strength == 2 ? 6 : 5, 4, len};
        return {strength == 2 ? 11 : 10, 9, len};
    }
    // kicks land low; heavier kicks ride higher
    if (crouching) return {strength + 1, strength == 0 ? 0 : 1, len};
    switch (strength) {
        case 0: return {1, 0, len};
        case 1: return {3, 2, len};
        default: return {5, 3, len};
    }
}

void draw_fighter(Frame& fr, const FighterState& f, Rgb c) {
    const int col = iround(f.x * 63.0);
    const int feet = ground_row - iround(f.y * 64.0);

    if (f.knockdown > 0 || f.knocked_out) {
        fill_rect(fr, col - 6, feet - 3, col + 6, feet, c); // lying
        return;
    }

    const bool low = f.crouching || f.wakeup > 0; // waking = rising from the floor
    const int height = low ? 10 : 16;
    const int top = feet - (height - 1);
    // head (3 wide) over torso (7 wide)
    fill_rect(fr, col - 1, top, col + 1, top + 2, c);
    fill_rect(fr, col - 3, top + 3, col + 3, feet, c);

    const int front = col + f.facing * 4;
    if (f.block_stun > 0 || f.blocked_this_frame) {
        // guard bar held in front of the body
        const int g0 = low ? feet - 5 : feet - 10;
        const int g1 = low ? feet - 2 : feet - 5;
        fill_rect(fr, front, g0, front, g1, c);
    }

    if (f.attacking) {
        const AttackProfile& p = attack_profile(f.atk);
        const bool active = f.atk_frame >= p.startup && f.atk_frame < p.startup + p.active;
        const bool startup = f.atk_frame < p.startup;
        auto arm = [&](int r_top, int r_bot, int len) {
            const int x0 = f.facing > 0 ? front : front - len + 1;
            const int x1 = f.facing > 0 ? front + len - 1 : front;
            fill_rect(fr, x0, feet - r_top, x1, feet - r_bot, c);
        };
        switch (f.atk) {
            case AttackKind::grab:
                if (active || startup) {
                    arm(10, 9, 4);
                    arm(7, 6, 4);
                }
                break;
            case AttackKind::special:
                if (active) arm(11, 8, 13);
                break;
            case AttackKind::fireball:
                arm(10, 9, 4);
                break;
            default: {
                Limb l = melee_limb(f.atk, low);
                if (active) arm(l.row_top, l.row_bot, l.length);
                else if (startup) arm(l.row_top, l.row_bot, 2); // wind-up stub
                break;
            }
        }
    }
}

PixelBox scan_key(const Frame& fr, Rgb key) {
    PixelBox box;
    box.x0 = fr.w;
    box.y0 = fr.h;
    for (int y = 0; y < fr.h; ++y) {
        for (int x = 0; x < fr.w; ++x) {
            const uint8_t* p = fr.px(x, y);
            if (p[0] == key.r && p[1] == key.g && p[2] == key.b) {
                box.x0 = std::min(box.x0, x);
                box.y0 = std::min(box.y0, y);
                box.x1 = std::max(box.x1, x);
                box.y1 = std::max(box.y1, y);
                ++box.pixel_count;
            }
        }
    }
    if (box.pixel_count == 0) box = PixelBox{};
    return box;
}

} // namespace

RenderResult render(const EngineState& st) {
    RenderResult out;
    out.frame = Frame(frame_w, frame_h);
    Frame& fr = out.frame;

    fill_rect(fr, 0, 0, frame_w - 1, ground_row, palette::sky);
    fill_rect(fr, 0, ground_row + 1, frame_w - 1, frame_h - 1, palette::floor);

    for (const Projectile& p : st.projectiles) {
        const int col = iround(p.x * 63.0);
        const int row = ground_row - iround(p.y * 64.0);
        fill_rect(fr, col - 1, row - 1, col + 1, row + 1, palette::projectile);
    }

    draw_fighter(fr, st.fighter(FighterId::npc), palette::npc);
    draw_fighter(fr, st.fighter(FighterId::player), palette::player);

    out.player_box = scan_key(fr, palette::player);
    out.npc_box = scan_key(fr, palette::npc);
    return out;
}

} // namespace gwm::sim
