#pragma once
// Experiment orchestration: flat key=value configuration, the on-disk clip
// dataset, and the seven commands (record, annotate, train, transfer, eval,
// analyze, report) behind the gwm binary.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "gwm/annotate.hpp"
#include "gwm/eval.hpp"
#include "gwm/wm.hpp"

namespace gwm::pipeline {

// ------------------------------------------------------------------ errors --
// Thrown by commands, mapped to process exit codes by the CLI.
struct UsageError : std::runtime_error {  // exit 1
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {  // exit 2
    using std::runtime_error::runtime_error;
};
struct EndpointError : std::runtime_error {  // exit 3
    using std::runtime_error::runtime_error;
};

// ------------------------------------------------------------------ config --
// One `key = value` pair per line; '#' starts a comment; blank lines ignored;
// later assignments win.  text() renders the canonical (sorted, normalized)
// form — the form echoed into every output directory so artifacts carry the
// exact effective configuration.
struct Config {
    std::map<std::string, std::string> kv;

    bool has(const std::string& key) const { return kv.count(key) != 0; }
    void set(const std::string& key, const std::string& value) { kv[key] = value; }

    std::string str(const std::string& key, const std::string& def) const;
    int64_t i64(const std::string& key, int64_t def) const;       // DataError on junk
    uint64_t u64(const std::string& key, uint64_t def) const;     // DataError on junk
    double f64(const std::string& key, double def) const;         // DataError on junk
    bool flag(const std::string& key, bool def) const;            // true/false/1/0

    std::string text() const;
};

Config parse_config(const std::string& text);      // DataError on malformed lines
Config load_config(const std::string& path);       // DataError when unreadable
void save_text(const std::string& path, const std::string& text);

// Typed experiment view over the flat keys (defaults shown in config.cpp's
// key table).  Every randomized stage derives its seed from
// (seed, stage name, item index); the benchmark namespace is separate from
// the recording namespace, so eval conditions are held out by construction.
struct Experiment {
    uint64_t seed = 1;
    std::vector<codec::GameVariant> variants;  // dataset.variants
    int episodes_per_policy = 40;              // dataset.episodes_per_policy
    int episode_frames = 300;                  // dataset.episode_frames
    int discard_frames = 100;                  // dataset.discard_frames (5 s at 20 fps)
    int clip_frames = 40;                      // dataset.clip_frames
    std::string annotate_mode = "oracle";      // annotate.mode: oracle | external
    annotate::ExternalConfig endpoint;         // annotate.host/.port/...
    wm::ModelConfig model;                     // model.*
    double sched_b0 = 0.004, sched_b1 = 0.30;  // sched.b0 / sched.b1
    int train_steps = 600;                     // train.steps
    int train_batch = 8;                       // train.batch
    double train_lr = 2e-3;                    // train.lr
};
Experiment experiment_from(const Config& cfg);  // DataError on bad values

// ----------------------------------------------------------------- dataset --
// Layout: <root>/<variant>/<policy>/<clip_id>/{frames.bin, actions.csv,
// prompt.json, events.json} plus a meta.json sidecar per clip and one
// manifest.json at the root.  frames.bin is raw RGB24 frames concatenated;
// meta.json carries width/height/frame_count/fps.  Event frames are
// clip-relative: frame r is the step that produced clip row r.
inline constexpr int k_dataset_fps = 20;

struct ClipRecord {
    std::string clip_id;  // "clip_000"
    std::string variant;  // "game1"
    std::string policy;   // generating NPC policy (fixture metadata)
    std::string relpath;  // "<variant>/<policy>/<clip_id>", forward slashes
    int frames = 0;
    std::string label;    // annotation outcome; "" until annotated
};

struct Manifest {
    int episodes = 0;
    int skipped_episodes = 0;  // too short to yield a clip
    int annotated = 0;         // clips with a prompt.json
    int unannotated = 0;       // external-mode failures (clip kept, no prompt)
    int dropped = 0;
    std::map<std::string, int> per_strategy;  // label name -> count
    std::vector<ClipRecord> records;

    int clips() const { return int(records.size()); }
};

std::string manifest_json(const Manifest& m);
Manifest parse_manifest(const std::string& json_text);  // DataError on schema

struct StoredClip {
    ClipRecord record;
    std::vector<Frame> frames;
    codec::ActionTable actions;            // player rows, one per frame
    std::vector<sim::Event> events;        // clip-relative frames
    std::vector<sim::PixelBox> player_boxes, npc_boxes;
};

void write_clip(const std::string& root, const StoredClip& clip);  // no prompt.json
StoredClip read_clip(const std::string& root, const ClipRecord& rec);

// Records every (variant, policy, episode) rollout and segments it into
// clips: the first discard_frames are dropped, the remainder is cut into
// clip_frames-sized windows, and short episodes contribute nothing (counted
// in the manifest).  Returns the written manifest.
Manifest build_dataset(const Experiment& exp, const std::string& root);

// Annotates every manifest record (stage 1 facts from the stored ground
// truth boxes in oracle mode, or the external endpoint; stage 2 rules;
// prompt assembly keyed by md5 of relpath) and rewrites the manifest with
// strategy counts.  External failures isolate to the clip.
Manifest annotate_dataset(const Config& cfg, const std::string& root);

// --------------------------------------------------------------- commands --
// Each command reads its inputs from `cfg` keys, writes its artifacts under
// `out`, and echoes cfg.text() to <out>/config.echo.  Missing prerequisites
// raise DataError naming the artifact.
void cmd_record(const Config& cfg, const std::string& out);
void cmd_annotate(const Config& cfg, const std::string& out);
void cmd_train(const Config& cfg, const std::string& out);
void cmd_transfer(const Config& cfg, const std::string& out);
void cmd_eval(const Config& cfg, const std::string& out);
void cmd_analyze(const Config& cfg, const std::string& out);
void cmd_report(const Config& cfg, const std::string& out);

// Training-item construction shared by train and eval probes: the clip's
// first frame stands in for the context frame (temporal_factor copies), so
// item pooling and sampling-time pooling are bit-identical.
wm::TrainItem clip_train_item(const std::vector<Frame>& clip_frames,
                              const codec::ActionTable& actions,
                              const std::vector<int>& prompt_tokens,
                              const wm::ModelConfig& cfg);

// ------------------------------------------------------------------- cli ---
// gwm <command> [--config <file>] [--seed <u64>] [--out <dir>] [key=value...]
// Exit codes: 0 success, 1 usage, 2 data error, 3 endpoint error.
int run_cli(int argc, const char* const* argv);

}  // namespace gwm::pipeline
