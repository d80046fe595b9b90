#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "gwm/eval.hpp"

namespace gwm::eval {
namespace {

constexpr double k_standing_aspect = 16.0 / 7.0;  // renderer's upright silhouette
constexpr int k_min_projectile_pixels = 3;

bool transient_status(int status) { return status >= 500; }

double mean_x(const Trajectory& t) {
    double sum = 0.0;
    size_t n = 0;
    for (const auto& f : t.frames)
        if (f.valid) {
            sum += f.x;
            ++n;
        }
    return n ? sum / double(n) : 0.5;
}

RefereeVerdict parse_verdict(const std::string& body) {
    const nlohmann::json j = nlohmann::json::parse(body);
    if (!j.is_object()) throw std::runtime_error("verdict schema: not an object");
    const auto str = [&](const char* field) {
        if (!j.contains(field) || !j.at(field).is_string())
            throw std::runtime_error(std::string("verdict schema: missing string field '") +
                                     field + "'");
        return j.at(field).get<std::string>();
    };
    RefereeVerdict v;
    v.npc_side = str("npc_side");
    if (v.npc_side != "left" && v.npc_side != "right")
        throw std::runtime_error("verdict schema: npc_side must be 'left' or 'right'");
    if (!j.contains("npc_visible") || !j.at("npc_visible").is_boolean())
        throw std::runtime_error("verdict schema: missing boolean field 'npc_visible'");
    v.npc_visible = j.at("npc_visible").get<bool>();
    const std::string cat = str("category");
    bool known = false;
    for (int i = 0; i < 3; ++i) {
        if (cat == annotate::strategy_label_names[size_t(i)]) {
            v.category = annotate::StrategyLabel(i);
            known = true;
        }
    }
    if (!known)
        throw std::runtime_error("verdict schema: category '" + cat +
                                 "' is out of vocabulary");
    v.reason = str("category_reason");
    str("scene_description");  // required, content unchecked
    return v;
}

}  // namespace

RefereeVerdict referee_strategy(const Trajectory& player, const Trajectory& npc,
                                const Detections& det, const RefereeConfig& cfg) {
    RefereeVerdict v;
    const size_t n = std::min(player.size(), npc.size());

    const size_t npc_valid = npc.valid_count();
    v.npc_visible = !npc.empty() &&
                    double(npc.size() - npc_valid) / double(npc.size()) <= cfg.invisible_frac;
    v.npc_side = mean_x(npc) < mean_x(player) ? "left" : "right";

    if (!v.npc_visible || npc_valid < 3 || player.valid_count() < 3) {
        v.reason = "npc not visible for enough of the clip";
        return v;  // dropped
    }

    // 1. Any NPC projectile decides immediately.
    if (!det.projectile_frames.empty()) {
        v.category = annotate::StrategyLabel::control;
        v.reason = "npc launches projectiles";
        return v;
    }

    // Frames where both characters are tracked carry the spatial rules.
    std::vector<size_t> both;
    for (size_t t = 0; t < n; ++t)
        if (player.frames[t].valid && npc.frames[t].valid) both.push_back(t);
    if (both.empty()) {
        v.category = annotate::StrategyLabel::dropped;
        v.reason = "characters never tracked together";
        return v;
    }

    // 2. Sustained crouching at range, clear of both walls.
    const double aspect_lim = cfg.crouch_aspect_factor * k_standing_aspect;
    size_t crouch_zoning = 0;
    for (size_t t : both) {
        const TrajectoryFrame& nf = npc.frames[t];
        if (nf.aspect >= aspect_lim) continue;
        if (std::abs(player.frames[t].x - nf.x) <= cfg.zone_distance) continue;
        if (nf.x < cfg.edge_margin || nf.x > 1.0 - cfg.edge_margin) continue;
        ++crouch_zoning;
    }
    if (double(crouch_zoning) >= cfg.crouch_frac * double(npc_valid)) {
        v.category = annotate::StrategyLabel::control;
        v.reason = "npc crouches at range away from the walls";
        return v;
    }

    // 3. Net advance of the npc itself toward the player, or repeated close
    //    attacks.  The npc's own displacement is what counts: a shrinking gap
    //    driven by the player closing in must not read as npc aggression.
    const TrajectoryFrame& p0 = player.frames[both.front()];
    const TrajectoryFrame& n0 = npc.frames[both.front()];
    const TrajectoryFrame& n1 = npc.frames[both.back()];
    const double dir = p0.x > n0.x ? 1.0 : -1.0;
    const double advance = (n1.x - n0.x) * dir;

    int close_attacks = 0;
    for (int f : det.attack_frames) {
        if (f < 0 || size_t(f) >= n) continue;
        if (!player.frames[size_t(f)].valid || !npc.frames[size_t(f)].valid) continue;
        if (std::abs(player.frames[size_t(f)].x - npc.frames[size_t(f)].x) <
            cfg.close_attack_dist)
            ++close_attacks;
    }
    if (advance >= cfg.advance || close_attacks >= cfg.close_attacks) {
        v.category = annotate::StrategyLabel::offense;
        v.reason = advance >= cfg.advance ? "npc pushes toward the player"
                                          : "npc attacks repeatedly at close range";
        return v;
    }

    // 4. Nothing aggressive or zoning: holding ground.
    v.category = annotate::StrategyLabel::defense;
    v.reason = "npc holds its ground without projectiles or pressure";
    return v;
}

Detections detections_from_events(const std::vector<sim::Event>& events, int init_frame) {
    Detections det;
    for (const sim::Event& e : events) {
        if (e.actor != sim::FighterId::npc) continue;
        const int clip_frame = e.frame - init_frame + 1;  // render follows the step
        if (e.type == sim::EventType::projectile_launch)
            det.projectile_frames.push_back(clip_frame);
        else if (e.type == sim::EventType::attack_start)
            det.attack_frames.push_back(clip_frame);
    }
    return det;
}

Detections detections_from_frames(const std::vector<Frame>& frames, const SegmentedClip& seg) {
    Detections det;

    // Projectiles: a blob of key-coloured pixels appearing where there was
    // none, close to the npc and closer to it than to the player (launch
    // offset is well under the attribution radius).
    bool prev_present = false;
    for (size_t t = 0; t < frames.size(); ++t) {
        const Mask pj = segment_projectile(frames[t]);
        const bool present = pj.count >= k_min_projectile_pixels;
        if (present && !prev_present) {
            const double cx = (pj.x0 + 0.5 * pj.box_w()) / double(pj.frame_w);
            const Mask& nm = seg.npc[t];
            const Mask& pm = seg.player[t];
            if (nm.valid()) {
                const double nx = (nm.x0 + 0.5 * nm.box_w()) / double(nm.frame_w);
                const double dn = std::abs(cx - nx);
                bool npc_owned = dn <= 0.20;
                if (npc_owned && pm.valid()) {
                    const double px = (pm.x0 + 0.5 * pm.box_w()) / double(pm.frame_w);
                    npc_owned = dn < std::abs(cx - px);
                }
                if (npc_owned) det.projectile_frames.push_back(int(t));
            }
        }
        prev_present = present;
    }

    // Attacks: runs of attack-active npc frames collapse to their starts.
    // The absolute-correlation floor keeps guard poses (confidently matched
    // to their least-bad template, but far from all of them) out of the
    // detection stream.
    const AttackClip ac = classify_attack(seg.npc);
    bool prev_active = false;
    for (size_t t = 0; t < ac.frames.size(); ++t) {
        const bool active =
            ac.frames[t].active && ac.frames[t].best_corr >= k_detection_min_corr;
        if (active && !prev_active) det.attack_frames.push_back(int(t));
        prev_active = active;
    }
    return det;
}

const std::string& referee_prompt_a() {
    static const std::string p =
        "You are shown a short side-view clip of a two-character fighting game: the"
        " player's character and an NPC inside a walled arena. Judge only the NPC.\n"
        "\n"
        "First note which half of the screen the NPC occupies for most of the clip"
        " (left or right). If the NPC is absent from most frames — for example the"
        " round is already over — set npc_visible to false.\n"
        "\n"
        "Then assign exactly one category by walking these rules in order and"
        " stopping at the first that fires:\n"
        "1. The NPC launches a projectile at any point: Control. A projectile"
        " thrown by the player never counts.\n"
        "2. The NPC spends much of the clip crouched while keeping clear distance"
        " from the player and staying away from both arena walls: Control.\n"
        "3. The NPC closes distance toward the player over the clip, or throws two"
        " or more separate attacks from close range: Offense.\n"
        "4. None of the above: Defense.\n"
        "\n"
        "Answer with one JSON object and nothing else:\n"
        "{\"npc_side\": \"left\" or \"right\", \"npc_visible\": true or false,"
        " \"category\": \"Offense\" or \"Control\" or \"Defense\","
        " \"category_reason\": one sentence, \"scene_description\": one sentence}";
    return p;
}

const std::string& referee_prompt_b() {
    static const std::string p =
        "Task: classify the NPC's fighting strategy in a short 2D fighting-game"
        " clip. Two characters stand on a flat stage between two walls; one is the"
        " player's character, the other is the NPC. Ignore the player's behaviour"
        " except where a rule mentions it.\n"
        "\n"
        "Step 1 — visibility. Count roughly how many frames show the NPC. If it is"
        " missing from most of them (round finished, character off-screen), report"
        " npc_visible = false; otherwise true.\n"
        "Step 2 — side. Report the half of the screen where the NPC spends most of"
        " the clip: \"left\" or \"right\".\n"
        "Step 3 — category. Check each rule below in order; the FIRST rule that"
        " matches decides, later rules must then be ignored.\n"
        "  Rule 1: any projectile leaves the NPC during the clip -> \"Control\"."
        " (A projectile coming from the player's character does not trigger this"
        " rule.)\n"
        "  Rule 2: the NPC stays crouched for a large part of the clip while far"
        " from the player AND not pressed against either wall -> \"Control\".\n"
        "  Rule 3: the NPC itself advances toward the player over the clip, or it"
        " performs at least two distinct attacks while near the player ->"
        " \"Offense\".\n"
        "  Rule 4: otherwise -> \"Defense\".\n"
        "Step 4 — output. Emit exactly one JSON object with these five keys and no"
        " other text:\n"
        "{\"npc_side\": \"left\"|\"right\", \"npc_visible\": true|false,"
        " \"category\": \"Offense\"|\"Control\"|\"Defense\","
        " \"category_reason\": \"<one sentence>\","
        " \"scene_description\": \"<one sentence>\"}\n"
        "The category value must be exactly one of the three strings above; never"
        " invent another label.";
    return p;
}

ExternalVerdict ExternalReferee::judge(const std::string& clip_id,
                                       const std::string& frames_ref) const {
    nlohmann::ordered_json req;
    req["clip_id"] = clip_id;
    req["frames_ref"] = frames_ref;
    req["prompt_variant"] = cfg_.prompt_variant;
    req["prompt"] = cfg_.prompt_variant == "B" ? referee_prompt_b() : referee_prompt_a();
    const std::string body = req.dump();

    ExternalVerdict out;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        httplib::Client client(cfg_.host, cfg_.port);
        client.set_connection_timeout(0, cfg_.timeout_ms * 1000);
        client.set_read_timeout(0, cfg_.timeout_ms * 1000);

        auto res = client.Post(cfg_.path, body, "application/json");
        if (!res) {
            out.error = "transport: " + httplib::to_string(res.error());
            continue;  // transient: retry
        }
        out.raw_response = res->body;
        if (res->status != 200) {
            out.error = "status " + std::to_string(res->status);
            if (transient_status(res->status)) continue;
            return out;  // permanent http failure
        }
        try {
            out.verdict = parse_verdict(res->body);
        } catch (const std::exception& e) {
            out.error = e.what();  // schema violation: never retried
            return out;
        }
        out.ok = true;
        out.error.clear();
        return out;
    }
    return out;  // retries exhausted
}

std::vector<ExternalVerdict> ExternalReferee::judge_many(
    const std::vector<std::pair<std::string, std::string>>& clips) const {
    std::vector<ExternalVerdict> results(clips.size());
    const int workers =
        int(std::min<size_t>(size_t(std::max(1, cfg_.max_in_flight)), clips.size()));
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(size_t(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (size_t i = next.fetch_add(1); i < clips.size(); i = next.fetch_add(1))
                results[i] = judge(clips[i].first, clips[i].second);
        });
    }
    for (auto& t : pool) t.join();
    return results;
}

}  // namespace gwm::eval
