#pragma once
// Three-axis benchmark: player action following (Move-Acc / Att-Acc), NPC
// strategy following (deterministic referee + optional external endpoint),
// and visual quality (windowed SSIM).  Everything downstream of raw frames —
// colour-key segmentation, trajectory extraction, template attack scoring,
// the referee decision order, and the two benchmark grids — lives here.

#include "gwm/annotate.hpp"
#include "gwm/codec.hpp"
#include "gwm/frames.hpp"
#include "gwm/sim.hpp"
#include "gwm/trajectory.hpp"

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace gwm::eval {

// ---------------------------------------------------------------- masks ---
// A pixel belongs to a character when its colour lies within k_key_distance
// (Euclidean RGB) of that character's key AND strictly closer to it than to
// the rival key.  Simulator renders use the exact keys, so there the masks
// are exact.  Frames with fewer than k_min_mask_pixels matches are invalid.
inline constexpr double k_key_distance = 48.0;
inline constexpr int k_min_mask_pixels = 10;

struct Mask {
    int frame_w = 0, frame_h = 0;
    std::vector<uint8_t> on;  // frame_w * frame_h, 0/1
    int count = 0;
    int x0 = 0, y0 = 0, x1 = -1, y1 = -1;  // tight bbox, inclusive

    bool valid() const { return count >= k_min_mask_pixels; }
    bool at(int x, int y) const { return on[size_t(y) * size_t(frame_w) + size_t(x)] != 0; }
    int box_w() const { return x1 - x0 + 1; }
    int box_h() const { return y1 - y0 + 1; }
};

Mask segment_character(const Frame& f, sim::Rgb key, sim::Rgb rival);

struct SegmentedClip {
    std::vector<Mask> player, npc;
};
SegmentedClip segment_characters(const std::vector<Frame>& frames);

// Projectile pixels: within k_key_distance of the projectile key and strictly
// closer to it than to either fighter key.  No minimum-count rule; callers
// threshold as needed.
Mask segment_projectile(const Frame& f);

// ----------------------------------------------------------- trajectory ---
// Per-frame bbox geometry in frame-normalized units, then a 5-frame rolling
// median over x, y, w, h (centered window, truncated at the ends, invalid
// frames excluded; an invalid frame stays invalid).  aspect is the pixel
// ratio box_h/box_w recomputed from the smoothed extents; area is the raw
// mask-pixel fraction.
inline constexpr int k_median_window = 5;
Trajectory extract_trajectory(const std::vector<Mask>& masks);

// ------------------------------------------------------------- movement ---
enum class MoveKey : int { left = 0, right, up, down };
extern const std::array<const char*, 4> move_key_names;

struct MoveThresholds {
    double left = -0.025;
    double right = 0.025;
    double up_peak = -0.030;
    double down_h_ratio = 0.85;
    double down_y = 0.010;
};

struct MoveScore {
    bool valid = false;  // >= 3 valid frames
    bool pass = false;
};

// Initial (x0, y0, h0) = per-field median of the first three valid frames;
// end values from the last valid frame; mid values = median over the middle
// third of valid frames; UP is peak-only (min over all valid frames).
MoveScore score_movement(const Trajectory& traj, MoveKey key, const MoveThresholds& th = {});

// --------------------------------------------------------------- attack ---
// Per-frame 6-way scores: normalized correlation between the character mask
// and the renderer's six standing attack-pose silhouettes (facing
// canonicalized, masks anchored bottom-left on a shared canvas), softmaxed
// at a fixed temperature.  Frames whose best probability exceeds
// k_attack_active_p are attack-active; the clip prediction is the class of
// the single most confident active frame, or noop when none qualify.
inline constexpr double k_attack_temperature = 0.02;
inline constexpr double k_attack_active_p = 0.7;
// The softmax is a margin measure: a pose far from every template can still
// concentrate mass on its least-bad match (a crouch block reads as a low
// kick).  Vision-path attack *detections* therefore also require this
// absolute correlation floor; true attack poses match their template near
// 1.0 while guard and idle silhouettes stay below 0.6.
inline constexpr double k_detection_min_corr = 0.7;

const std::array<Mask, 6>& attack_templates();  // AttackSemantic order
double template_correlation(const Mask& observed, const Mask& tpl);

struct AttackFrame {
    std::array<double, 6> probs{};
    int best_class = -1;  // argmax, -1 on empty mask
    double best_p = 0.0;
    double best_corr = 0.0;  // canonical correlation of the argmax template
    bool active = false;
};

struct AttackClip {
    std::vector<AttackFrame> frames;
    bool noop = true;
    codec::AttackSemantic pred{};  // meaningful when !noop
    double confidence = 0.0;
    int pred_frame = -1;
};

AttackClip classify_attack(const std::vector<Mask>& character);
AttackClip classify_attack(const std::vector<Frame>& frames);  // player mask path

// -------------------------------------------------------------- referee ---
// Deterministic realization of the referee decision order (first match wins):
//   1. any NPC projectile                                    -> Control
//   2. extended crouch at distance, away from both edges     -> Control
//   3. NPC advance >= `advance` toward the player, OR
//      >= `close_attacks` attacks at distance < close_attack -> Offense
//   4. otherwise                                             -> Defense
struct RefereeConfig {
    double crouch_aspect_factor = 0.75;  // of the standing aspect
    double crouch_frac = 0.40;           // fraction of valid frames crouched
    double zone_distance = 0.30;         // rule-2 minimum distance
    double edge_margin = 0.15;           // rule-2 clearance from arena edges
    double advance = 0.08;               // rule-3 net NPC motion toward player
    double close_attack_dist = 0.18;     // rule-3 attack distance bound
    int close_attacks = 2;               // rule-3 attack count
    double invisible_frac = 0.30;        // npc invalid fraction -> not visible
};

struct Detections {
    std::vector<int> projectile_frames;  // NPC projectile appearances
    std::vector<int> attack_frames;      // distinct NPC attack starts
};

struct RefereeVerdict {
    std::string npc_side;  // "left" | "right"
    bool npc_visible = false;
    annotate::StrategyLabel category = annotate::StrategyLabel::dropped;
    std::string reason;
};

RefereeVerdict referee_strategy(const Trajectory& player, const Trajectory& npc,
                                const Detections& det, const RefereeConfig& cfg = {});

// Ground-truth detections from the engine event log.  Event frames are
// absolute engine frames; `init_frame` is the engine frame of the clip's
// context frame, so a step event at engine frame f lands at clip index
// f - init_frame + 1.
Detections detections_from_events(const std::vector<sim::Event>& events, int init_frame = 0);
// Vision-path detections: projectile blobs attributed by spawn proximity to
// the NPC, attack starts from runs of attack-active NPC frames whose best
// template match also clears k_detection_min_corr.
Detections detections_from_frames(const std::vector<Frame>& frames, const SegmentedClip& seg);

// The two referee prompt texts shipped as fixtures for external endpoints.
const std::string& referee_prompt_a();
const std::string& referee_prompt_b();

// External referee endpoint: POSTs {clip_id, frames_ref, prompt_variant} and
// expects the strict verdict JSON back.  Transport errors, non-JSON bodies,
// or out-of-schema values invalidate the sample (ok = false) — never guessed.
struct RefereeEndpointConfig {
    std::string host = "127.0.0.1";
    int port = 0;
    std::string path = "/referee";
    std::string prompt_variant = "A";  // "A" | "B"
    int max_in_flight = 4;
    int max_retries = 2;
    int timeout_ms = 5000;
};

struct ExternalVerdict {
    bool ok = false;
    RefereeVerdict verdict;
    std::string error;
    std::string raw_response;
};

class ExternalReferee {
  public:
    explicit ExternalReferee(RefereeEndpointConfig cfg) : cfg_(std::move(cfg)) {}

    ExternalVerdict judge(const std::string& clip_id, const std::string& frames_ref) const;
    std::vector<ExternalVerdict> judge_many(
        const std::vector<std::pair<std::string, std::string>>& clips) const;

  private:
    RefereeEndpointConfig cfg_;
};

// ----------------------------------------------------------------- ssim ---
// Mean SSIM over 11x11 Gaussian windows (sigma 1.5) fully inside the frame,
// on Rec.601 luma, K1=0.01, K2=0.03, dynamic range 255.  Videos of unequal
// length are compared over the first min(Ta, Tb) frames; unequal spatial
// dimensions are an error.
double ssim_frame(const Frame& a, const Frame& b);
double ssim(const std::vector<Frame>& a, const std::vector<Frame>& b);

// ------------------------------------------------------------ benchmark ---
// One row per run, mirroring the report.csv columns.
struct RunRow {
    std::string run_id;
    std::string condition;
    std::string prediction;
    std::string truth;
    bool valid = false;
    bool pass = false;
};

// Ten deterministic initial states per variant: grounded, actionable
// fighters at varied distances with enough wall clearance that every
// single-key run can express its displacement.
struct BenchState {
    sim::EngineState state;
    Frame init;
    double distance = 0.0;
};
std::vector<BenchState> action_benchmark_states(codec::GameVariant v, uint64_t seed);

// 40-row single-key table: directions held, UP/attacks edge-pressed at the
// start of each 10-frame block.
codec::ActionTable single_key_actions(codec::GameVariant v, codec::Button key, int frames = 40);

// Generates the 41-frame rollout for one run (frame 0 = the init frame).
using ClipGenerator = std::function<std::vector<Frame>(const BenchState& init,
                                                       const codec::ActionTable& actions,
                                                       uint64_t run_seed)>;

// Replays the engine itself (idle NPC) — the ground-truth generator.
ClipGenerator simulator_oracle_generator(codec::GameVariant v);

struct ActionBenchmarkReport {
    double move_acc = 0.0, att_acc = 0.0;  // percentages over valid runs
    int move_valid = 0, move_total = 0;
    int att_valid = 0, att_total = 0;
    std::vector<RunRow> rows;
};

ActionBenchmarkReport run_action_benchmark(const ClipGenerator& generate,
                                           codec::GameVariant v, uint64_t bench_seed);

// One curated strategy condition: a scripted NPC rollout whose oracle
// annotation recovers the generating category, packaged with everything a
// generator needs (init frame/state, player action rows, both prompt forms).
struct StrategyCondition {
    std::string id;
    annotate::StrategyLabel truth{};
    uint64_t rollout_seed = 0;
    sim::EngineState init_state;
    Frame init;
    codec::ActionTable player_actions;  // 40 rows
    annotate::NpcPrompt prompt;
    std::string vanilla;
};

// 99 conditions, 33 per category, deterministically curated under the seed.
std::vector<StrategyCondition> strategy_benchmark_conditions(codec::GameVariant v,
                                                             uint64_t bench_seed);

using StrategyGenerator =
    std::function<std::vector<Frame>(const StrategyCondition& cond, uint64_t run_seed)>;

// Replays the condition's scripted rollout — ground truth for loop-closure
// checks and the SSIM reference.
StrategyGenerator simulator_strategy_generator(codec::GameVariant v);

struct StrategyBenchmarkReport {
    double accuracy = 0.0;  // percentage over valid verdicts
    int valid = 0, total = 0, invalid = 0;
    double ssim_mean = 0.0;  // vs reference, when a reference generator is given
    int ssim_clips = 0;
    std::vector<RunRow> rows;
};

StrategyBenchmarkReport run_strategy_benchmark(const StrategyGenerator& generate,
                                               const std::vector<StrategyCondition>& conditions,
                                               const StrategyGenerator* reference = nullptr,
                                               const RefereeConfig& cfg = {});

// ---------------------------------------------------------------- report ---
struct MetricsReport {
    std::string model_name;
    ActionBenchmarkReport action;
    StrategyBenchmarkReport strategy;
    std::vector<double> rho_per_block;  // transfer diagnostics
    double rho_bar = 0.0;
    double cosine_mean = 0.0;
    double delta_norm = 0.0;
};

}  // namespace gwm::eval
