#include "gwm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "gwm/rng.hpp"

namespace gwm::eval {
namespace {

constexpr int k_states_per_variant = 10;
constexpr int k_clip_rows = 40;
constexpr int k_conditions_per_category = 33;
constexpr uint64_t k_curation_attempt_cap = 4000;

const std::array<codec::Button, 10> k_bench_keys = {
    codec::BTN_LEFT, codec::BTN_RIGHT, codec::BTN_UP, codec::BTN_DOWN,
    codec::BTN_A,    codec::BTN_B,     codec::BTN_C,  codec::BTN_X,
    codec::BTN_Y,    codec::BTN_Z,
};

bool is_direction(codec::Button b) {
    return b == codec::BTN_LEFT || b == codec::BTN_RIGHT || b == codec::BTN_UP ||
           b == codec::BTN_DOWN;
}

MoveKey move_key_for(codec::Button b) {
    switch (b) {
        case codec::BTN_LEFT: return MoveKey::left;
        case codec::BTN_RIGHT: return MoveKey::right;
        case codec::BTN_UP: return MoveKey::up;
        default: return MoveKey::down;
    }
}

std::vector<Mask> player_masks(const std::vector<Frame>& frames) {
    std::vector<Mask> masks;
    masks.reserve(frames.size());
    for (const Frame& f : frames)
        masks.push_back(segment_character(f, sim::palette::player, sim::palette::npc));
    return masks;
}

sim::PolicyKind policy_for(annotate::StrategyLabel label) {
    switch (label) {
        case annotate::StrategyLabel::offense: return sim::PolicyKind::offense;
        case annotate::StrategyLabel::control: return sim::PolicyKind::control;
        case annotate::StrategyLabel::defense: return sim::PolicyKind::defense;
        default: throw std::invalid_argument("no policy for Dropped");
    }
}

std::string ordinal_id(const char* prefix, int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%03d", prefix, i);
    return buf;
}

}  // namespace

std::vector<BenchState> action_benchmark_states(codec::GameVariant v, uint64_t seed) {
    // Two states per distance band, found by rejection-sampling spawn columns.
    // Constraints keep every single-key run expressive: enough gap that a walk
    // registers past the body push, enough wall clearance on the player side.
    static constexpr double bands[6] = {0.16, 0.28, 0.40, 0.55, 0.70, 0.85};
    Rng rng(derive_seed(seed, "action_states"));
    std::vector<BenchState> out;
    out.reserve(k_states_per_variant);
    for (int band = 0; band < 5; ++band) {
        for (int slot = 0; slot < 2; ++slot) {
            for (;;) {
                const double px = 0.20 + 0.60 * rng.next_unit();
                const double nx = 0.09 + 0.82 * rng.next_unit();
                const double dist = std::abs(px - nx);
                if (dist < bands[band] || dist >= bands[band + 1]) continue;
                sim::Engine eng(v);
                eng.reset(px, nx);
                BenchState bs;
                bs.state = eng.state();
                bs.init = sim::render(bs.state).frame;
                bs.distance = dist;
                out.push_back(std::move(bs));
                break;
            }
        }
    }
    return out;
}

codec::ActionTable single_key_actions(codec::GameVariant v, codec::Button key, int frames) {
    codec::Behavior b;
    switch (key) {
        case codec::BTN_LEFT: b = codec::Behavior::walk_left; break;
        case codec::BTN_RIGHT: b = codec::Behavior::walk_right; break;
        case codec::BTN_UP: b = codec::Behavior::jump; break;
        case codec::BTN_DOWN: b = codec::Behavior::crouch; break;
        default: b = codec::attack_behavior(codec::attack_semantic(v, key)); break;
    }
    codec::ActionTable t;
    constexpr int block = 10;  // one decision per block: re-press, or keep holding
    for (int done = 0; done < frames; done += block) {
        for (const codec::ButtonVector& row :
             codec::behavior_buttons(v, b, std::min(block, frames - done)))
            t.append(row);
    }
    return t;
}

ClipGenerator simulator_oracle_generator(codec::GameVariant v) {
    return [v](const BenchState& init, const codec::ActionTable& actions, uint64_t) {
        sim::Engine eng(v);
        eng.mutable_state() = init.state;
        std::vector<Frame> out;
        out.reserve(actions.rows.size() + 1);
        out.push_back(sim::render(eng.state()).frame);
        for (const codec::ButtonVector& row : actions.rows) {
            eng.step(row, {});
            out.push_back(sim::render(eng.state()).frame);
        }
        return out;
    };
}

ActionBenchmarkReport run_action_benchmark(const ClipGenerator& generate,
                                           codec::GameVariant v, uint64_t bench_seed) {
    const std::vector<BenchState> states = action_benchmark_states(v, bench_seed);
    ActionBenchmarkReport rep;
    rep.rows.reserve(states.size() * k_bench_keys.size());
    int move_pass = 0, att_pass = 0;
    uint64_t run_idx = 0;
    for (size_t si = 0; si < states.size(); ++si) {
        for (const codec::Button key : k_bench_keys) {
            const uint64_t run_seed = derive_seed(bench_seed, "action_run", run_idx++);
            const codec::ActionTable actions = single_key_actions(v, key, k_clip_rows);
            const std::vector<Frame> frames = generate(states[si], actions, run_seed);
            const std::vector<Mask> masks = player_masks(frames);

            RunRow row;
            row.run_id = ordinal_id("run", int(run_idx - 1));
            row.condition = std::string("s") + std::to_string(si) + "_" +
                            codec::button_names[size_t(key)];
            if (is_direction(key)) {
                const MoveKey mk = move_key_for(key);
                const MoveScore ms = score_movement(extract_trajectory(masks), mk);
                row.truth = move_key_names[size_t(mk)];
                row.valid = ms.valid;
                row.prediction = !ms.valid ? "invalid" : ms.pass ? row.truth : "none";
                row.pass = ms.valid && ms.pass;
                ++rep.move_total;
                if (row.valid) ++rep.move_valid;
                if (row.pass) ++move_pass;
            } else {
                const codec::AttackSemantic truth = codec::attack_semantic(v, key);
                const AttackClip ac = classify_attack(masks);
                row.truth = codec::attack_semantic_names[size_t(truth)];
                row.valid = std::any_of(masks.begin(), masks.end(),
                                        [](const Mask& m) { return m.valid(); });
                row.prediction = ac.noop ? "noop" : codec::attack_semantic_names[size_t(ac.pred)];
                row.pass = row.valid && !ac.noop && ac.pred == truth;
                ++rep.att_total;
                if (row.valid) ++rep.att_valid;
                if (row.pass) ++att_pass;
            }
            rep.rows.push_back(std::move(row));
        }
    }
    rep.move_acc = rep.move_valid ? 100.0 * move_pass / rep.move_valid : 0.0;
    rep.att_acc = rep.att_valid ? 100.0 * att_pass / rep.att_valid : 0.0;
    return rep;
}

namespace {

// One curation attempt: roll the scripted matchup, keep it only when the
// oracle annotation AND the vision referee both recover the generating
// category — benchmark truth has to be unambiguous under either reading.
bool make_condition(codec::GameVariant v, annotate::StrategyLabel label, uint64_t rollout_seed,
                    int ordinal, StrategyCondition& cond) {
    const sim::PolicyKind policy = policy_for(label);
    Rng rng(derive_seed(rollout_seed, "spawn"));
    const double u1 = rng.next_unit(), u2 = rng.next_unit();
    const bool flip = rng.next_below(2) == 1;
    double px = 0.0, nx = 0.0;
    switch (policy) {
        case sim::PolicyKind::offense:  // close enough to reach within the clip
            px = 0.30 + 0.06 * u1;
            nx = 0.56 + 0.12 * u2;
            break;
        case sim::PolicyKind::control:  // far spawn: the opening projectile is live
            px = 0.12 + 0.12 * u1;
            nx = 0.78 + 0.10 * u2;
            break;
        default:  // defense: room to back into the corner
            px = 0.34 + 0.10 * u1;
            nx = 0.62 + 0.12 * u2;
            break;
    }
    if (flip) {
        px = 1.0 - px;
        nx = 1.0 - nx;
    }

    sim::Engine eng(v);
    eng.reset(px, nx);
    const sim::EngineState init_state = eng.state();
    auto player = sim::make_policy_agent(sim::partner_for(policy),
                                         derive_seed(rollout_seed, "partner"));
    auto npc = sim::make_policy_agent(policy, derive_seed(rollout_seed, "npc"));
    const sim::EpisodeResult ep = sim::run_episode(eng, *player, *npc, k_clip_rows);

    const Trajectory tp = annotate::boxes_to_trajectory(ep.player_boxes);
    const Trajectory tn = annotate::boxes_to_trajectory(ep.npc_boxes);
    if (tp.valid_count() == 0 || tn.valid_count() == 0) return false;
    const annotate::FactSheet facts = annotate::observe_facts_oracle(ep.events, tp, tn);
    if (annotate::classify_strategy(facts) != label) return false;

    std::vector<Frame> clip;
    clip.reserve(ep.frames.size() + 1);
    clip.push_back(sim::render(init_state).frame);
    for (const Frame& f : ep.frames) clip.push_back(f);
    const SegmentedClip seg = segment_characters(clip);
    const RefereeVerdict verdict =
        referee_strategy(extract_trajectory(seg.player), extract_trajectory(seg.npc),
                         detections_from_frames(clip, seg), RefereeConfig{});
    if (verdict.category != label) return false;

    cond.id = ordinal_id(sim::policy_kind_names[size_t(policy)], ordinal);
    cond.truth = label;
    cond.rollout_seed = rollout_seed;
    cond.init_state = init_state;
    cond.init = std::move(clip.front());
    cond.player_actions = ep.player_actions;
    cond.prompt = annotate::assemble_prompt(facts, label, cond.id, annotate::builtin_pools());
    cond.vanilla = annotate::vanilla_prompt(ep.events, v);
    return true;
}

}  // namespace

std::vector<StrategyCondition> strategy_benchmark_conditions(codec::GameVariant v,
                                                             uint64_t bench_seed) {
    static constexpr std::array<annotate::StrategyLabel, 3> cats = {
        annotate::StrategyLabel::offense,
        annotate::StrategyLabel::control,
        annotate::StrategyLabel::defense,
    };
    static constexpr std::array<const char*, 3> stages = {"cond_offense", "cond_control",
                                                          "cond_defense"};
    std::vector<StrategyCondition> out;
    out.reserve(3 * k_conditions_per_category);
    for (size_t c = 0; c < cats.size(); ++c) {
        int kept = 0;
        for (uint64_t attempt = 0; kept < k_conditions_per_category; ++attempt) {
            if (attempt >= k_curation_attempt_cap)
                throw std::runtime_error(std::string("condition curation stalled: ") +
                                         stages[c]);
            StrategyCondition cond;
            if (make_condition(v, cats[c], derive_seed(bench_seed, stages[c], attempt), kept,
                               cond)) {
                out.push_back(std::move(cond));
                ++kept;
            }
        }
    }
    return out;
}

StrategyGenerator simulator_strategy_generator(codec::GameVariant v) {
    return [v](const StrategyCondition& cond, uint64_t) {
        sim::Engine eng(v);
        eng.mutable_state() = cond.init_state;
        auto player = sim::make_scripted_agent(cond.player_actions);
        auto npc = sim::make_policy_agent(policy_for(cond.truth),
                                          derive_seed(cond.rollout_seed, "npc"));
        sim::EpisodeResult ep =
            sim::run_episode(eng, *player, *npc, int(cond.player_actions.rows.size()));
        std::vector<Frame> out;
        out.reserve(ep.frames.size() + 1);
        out.push_back(sim::render(cond.init_state).frame);
        for (Frame& f : ep.frames) out.push_back(std::move(f));
        return out;
    };
}

StrategyBenchmarkReport run_strategy_benchmark(const StrategyGenerator& generate,
                                               const std::vector<StrategyCondition>& conditions,
                                               const StrategyGenerator* reference,
                                               const RefereeConfig& cfg) {
    StrategyBenchmarkReport rep;
    rep.rows.reserve(conditions.size());
    int pass = 0;
    for (const StrategyCondition& cond : conditions) {
        const uint64_t run_seed = derive_seed(cond.rollout_seed, "bench_run");
        const std::vector<Frame> frames = generate(cond, run_seed);
        ++rep.total;

        RunRow row;
        row.run_id = cond.id;
        row.condition = cond.id;
        row.truth = annotate::strategy_label_names[size_t(cond.truth)];
        if (frames.size() >= 3) {
            const SegmentedClip seg = segment_characters(frames);
            const RefereeVerdict verdict =
                referee_strategy(extract_trajectory(seg.player), extract_trajectory(seg.npc),
                                 detections_from_frames(frames, seg), cfg);
            row.prediction = annotate::strategy_label_names[size_t(verdict.category)];
            row.valid = verdict.category != annotate::StrategyLabel::dropped;
            row.pass = row.valid && verdict.category == cond.truth;
        } else {
            row.prediction = annotate::strategy_label_names[size_t(
                annotate::StrategyLabel::dropped)];
        }
        if (row.valid) ++rep.valid;
        else ++rep.invalid;
        if (row.pass) ++pass;

        if (reference != nullptr && !frames.empty()) {
            rep.ssim_mean += ssim(frames, (*reference)(cond, run_seed));
            ++rep.ssim_clips;
        }
        rep.rows.push_back(std::move(row));
    }
    rep.accuracy = rep.valid ? 100.0 * pass / rep.valid : 0.0;
    if (rep.ssim_clips > 0) rep.ssim_mean /= rep.ssim_clips;
    return rep;
}

}  // namespace gwm::eval
