#include "gwm/eval.hpp"

namespace gwm::eval {
namespace {

double key_dist2(const uint8_t* px, sim::Rgb key) {
    const double dr = double(px[0]) - double(key.r);
    const double dg = double(px[1]) - double(key.g);
    const double db = double(px[2]) - double(key.b);
    return dr * dr + dg * dg + db * db;
}

void grow_bbox(Mask& m, int x, int y) {
    if (m.count == 1) {
        m.x0 = m.x1 = x;
        m.y0 = m.y1 = y;
        return;
    }
    if (x < m.x0) m.x0 = x;
    if (x > m.x1) m.x1 = x;
    if (y < m.y0) m.y0 = y;
    if (y > m.y1) m.y1 = y;
}

}  // namespace

Mask segment_character(const Frame& f, sim::Rgb key, sim::Rgb rival) {
    Mask m;
    m.frame_w = f.w;
    m.frame_h = f.h;
    m.on.assign(size_t(f.w) * size_t(f.h), 0);
    const double lim = k_key_distance * k_key_distance;
    for (int y = 0; y < f.h; ++y) {
        for (int x = 0; x < f.w; ++x) {
            const uint8_t* px = f.px(x, y);
            const double dk = key_dist2(px, key);
            if (dk > lim || dk >= key_dist2(px, rival)) continue;
            m.on[size_t(y) * size_t(f.w) + size_t(x)] = 1;
            ++m.count;
            grow_bbox(m, x, y);
        }
    }
    return m;
}

SegmentedClip segment_characters(const std::vector<Frame>& frames) {
    SegmentedClip seg;
    seg.player.reserve(frames.size());
    seg.npc.reserve(frames.size());
    for (const Frame& f : frames) {
        seg.player.push_back(segment_character(f, sim::palette::player, sim::palette::npc));
        seg.npc.push_back(segment_character(f, sim::palette::npc, sim::palette::player));
    }
    return seg;
}

Mask segment_projectile(const Frame& f) {
    Mask m;
    m.frame_w = f.w;
    m.frame_h = f.h;
    m.on.assign(size_t(f.w) * size_t(f.h), 0);
    const double lim = k_key_distance * k_key_distance;
    for (int y = 0; y < f.h; ++y) {
        for (int x = 0; x < f.w; ++x) {
            const uint8_t* px = f.px(x, y);
            const double dk = key_dist2(px, sim::palette::projectile);
            if (dk > lim) continue;
            if (dk >= key_dist2(px, sim::palette::player)) continue;
            if (dk >= key_dist2(px, sim::palette::npc)) continue;
            m.on[size_t(y) * size_t(f.w) + size_t(x)] = 1;
            ++m.count;
            grow_bbox(m, x, y);
        }
    }
    return m;
}

}  // namespace gwm::eval
