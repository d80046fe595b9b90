#include "gwm/eval.hpp"

#include <algorithm>
#include <cmath>

namespace gwm::eval {
namespace {

// Rebase a mask to its own bbox.
Mask crop(const Mask& m) {
    Mask out;
    out.frame_w = std::max(0, m.box_w());
    out.frame_h = std::max(0, m.box_h());
    out.on.assign(size_t(out.frame_w) * size_t(out.frame_h), 0);
    out.count = m.count;
    out.x0 = 0;
    out.y0 = 0;
    out.x1 = out.frame_w - 1;
    out.y1 = out.frame_h - 1;
    for (int y = 0; y < out.frame_h; ++y)
        for (int x = 0; x < out.frame_w; ++x)
            out.on[size_t(y) * size_t(out.frame_w) + size_t(x)] =
                m.on[size_t(m.y0 + y) * size_t(m.frame_w) + size_t(m.x0 + x)];
    return out;
}

// Crop, then mirror so the heavier column side (the extended limb) points
// right — poses are matched up to facing.
Mask canonical(const Mask& m) {
    Mask c = crop(m);
    double moment = 0.0;
    const double mid = 0.5 * double(c.frame_w - 1);
    for (int y = 0; y < c.frame_h; ++y)
        for (int x = 0; x < c.frame_w; ++x)
            if (c.at(x, y)) moment += double(x) - mid;
    if (moment >= 0.0) return c;
    Mask flipped = c;
    for (int y = 0; y < c.frame_h; ++y)
        for (int x = 0; x < c.frame_w; ++x)
            flipped.on[size_t(y) * size_t(c.frame_w) + size_t(x)] =
                c.on[size_t(y) * size_t(c.frame_w) + size_t(c.frame_w - 1 - x)];
    return flipped;
}

// Render the standing pose at the first active frame of each attack; the
// idle opponent shares the exact position so the player silhouette (drawn
// last) is all that survives the colour keying.
Mask pose_template(codec::AttackSemantic s) {
    sim::EngineState st;
    sim::FighterState& p = st.fighter(sim::FighterId::player);
    sim::FighterState& n = st.fighter(sim::FighterId::npc);
    p.x = 0.5;
    p.facing = 1;
    p.attacking = true;
    p.atk = sim::AttackKind(int(s));
    p.atk_frame = sim::attack_profile(p.atk).startup;
    n.x = p.x;
    n.facing = 1;
    const sim::RenderResult r = sim::render(st);
    return canonical(segment_character(r.frame, sim::palette::player, sim::palette::npc));
}

}  // namespace

const std::array<Mask, 6>& attack_templates() {
    static const std::array<Mask, 6> tpls = [] {
        std::array<Mask, 6> t;
        for (int s = 0; s < 6; ++s) t[size_t(s)] = pose_template(codec::AttackSemantic(s));
        return t;
    }();
    return tpls;
}

double template_correlation(const Mask& observed, const Mask& tpl) {
    if (observed.count == 0 || tpl.count == 0) return 0.0;
    const Mask a = canonical(observed);
    const Mask b = canonical(tpl);
    // Binary masks anchored bottom-left: correlation reduces to
    // |A ∩ B| / sqrt(|A| |B|).
    const int ow = std::min(a.frame_w, b.frame_w);
    const int oh = std::min(a.frame_h, b.frame_h);
    int inter = 0;
    for (int dy = 0; dy < oh; ++dy)
        for (int dx = 0; dx < ow; ++dx)
            if (a.at(dx, a.frame_h - 1 - dy) && b.at(dx, b.frame_h - 1 - dy)) ++inter;
    return double(inter) / std::sqrt(double(a.count) * double(b.count));
}

AttackClip classify_attack(const std::vector<Mask>& character) {
    const auto& tpls = attack_templates();
    AttackClip clip;
    clip.frames.resize(character.size());
    for (size_t t = 0; t < character.size(); ++t) {
        const Mask& m = character[t];
        if (!m.valid()) continue;
        AttackFrame& af = clip.frames[t];

        std::array<double, 6> corr{};
        double cmax = -1.0;
        for (int k = 0; k < 6; ++k) {
            corr[size_t(k)] = template_correlation(m, tpls[size_t(k)]);
            cmax = std::max(cmax, corr[size_t(k)]);
        }
        double z = 0.0;
        for (int k = 0; k < 6; ++k) {
            af.probs[size_t(k)] = std::exp((corr[size_t(k)] - cmax) / k_attack_temperature);
            z += af.probs[size_t(k)];
        }
        for (int k = 0; k < 6; ++k) {
            af.probs[size_t(k)] /= z;
            if (af.best_class < 0 || af.probs[size_t(k)] > af.best_p) {
                af.best_class = k;
                af.best_p = af.probs[size_t(k)];
                af.best_corr = corr[size_t(k)];
            }
        }
        af.active = af.best_p > k_attack_active_p;
        if (af.active && af.best_p > clip.confidence) {
            clip.noop = false;
            clip.pred = codec::AttackSemantic(af.best_class);
            clip.confidence = af.best_p;
            clip.pred_frame = int(t);
        }
    }
    return clip;
}

AttackClip classify_attack(const std::vector<Frame>& frames) {
    std::vector<Mask> masks;
    masks.reserve(frames.size());
    for (const Frame& f : frames)
        masks.push_back(segment_character(f, sim::palette::player, sim::palette::npc));
    return classify_attack(masks);
}

}  // namespace gwm::eval
