#include "gwm/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gwm/rng.hpp"

namespace gwm::pipeline {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

constexpr std::array<sim::PolicyKind, 3> k_dataset_policies = {
    sim::PolicyKind::offense, sim::PolicyKind::control, sim::PolicyKind::defense};

std::string read_text(const std::string& path, const char* what) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError(std::string(what) + " not found: " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

codec::GameVariant variant_from(const std::string& name) {
    if (name == "game1") return codec::GameVariant::game1;
    if (name == "game2") return codec::GameVariant::game2;
    throw DataError("manifest: unknown variant '" + name + "'");
}

template <typename Names>
int index_of(const Names& names, const std::string& value, const char* what) {
    for (size_t i = 0; i < names.size(); ++i)
        if (value == names[i]) return int(i);
    throw DataError(std::string("events.json: unknown ") + what + " '" + value + "'");
}

ordered_json boxes_json(const std::vector<sim::PixelBox>& boxes) {
    ordered_json arr = ordered_json::array();
    for (const sim::PixelBox& b : boxes)
        arr.push_back({b.x0, b.y0, b.x1, b.y1, b.pixel_count});
    return arr;
}

std::vector<sim::PixelBox> boxes_from(const nlohmann::json& arr) {
    std::vector<sim::PixelBox> boxes;
    for (const auto& row : arr) {
        if (!row.is_array() || row.size() != 5)
            throw DataError("events.json: malformed box row");
        sim::PixelBox b;
        b.x0 = row[0].get<int>();
        b.y0 = row[1].get<int>();
        b.x1 = row[2].get<int>();
        b.y1 = row[3].get<int>();
        b.pixel_count = row[4].get<int>();
        boxes.push_back(b);
    }
    return boxes;
}

// Spawn jitter per generating policy (mirrors the benchmark curation ranges
// so recorded engagements land in each archetype's native distance band).
void spawn_positions(sim::PolicyKind policy, Rng& rng, double& px, double& nx) {
    const double u1 = rng.next_unit(), u2 = rng.next_unit();
    const bool flip = rng.next_below(2) == 1;
    switch (policy) {
        case sim::PolicyKind::offense:
            px = 0.30 + 0.06 * u1;
            nx = 0.56 + 0.12 * u2;
            break;
        case sim::PolicyKind::control:
            px = 0.12 + 0.12 * u1;
            nx = 0.78 + 0.10 * u2;
            break;
        default:
            px = 0.34 + 0.10 * u1;
            nx = 0.62 + 0.12 * u2;
            break;
    }
    if (flip) {
        px = 1.0 - px;
        nx = 1.0 - nx;
    }
}

void write_meta(const std::string& dir, int frames) {
    ordered_json j;
    j["width"] = sim::frame_w;
    j["height"] = sim::frame_h;
    j["frame_count"] = frames;
    j["fps"] = k_dataset_fps;
    save_text(dir + "/meta.json", j.dump(2) + "\n");
}

}  // namespace

std::string manifest_json(const Manifest& m) {
    ordered_json j;
    j["episodes"] = m.episodes;
    j["skipped_episodes"] = m.skipped_episodes;
    j["clips"] = m.clips();
    j["annotated"] = m.annotated;
    j["unannotated"] = m.unannotated;
    j["dropped"] = m.dropped;
    ordered_json per = ordered_json::object();
    for (const auto& [label, count] : m.per_strategy) per[label] = count;
    j["per_strategy"] = per;
    ordered_json records = ordered_json::array();
    for (const ClipRecord& r : m.records)
        records.push_back({{"clip_id", r.clip_id},
                           {"variant", r.variant},
                           {"policy", r.policy},
                           {"relpath", r.relpath},
                           {"frames", r.frames},
                           {"label", r.label}});
    j["records"] = records;
    return j.dump(2) + "\n";
}

Manifest parse_manifest(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("manifest: invalid json: ") + e.what());
    }
    Manifest m;
    try {
        m.episodes = j.at("episodes").get<int>();
        m.skipped_episodes = j.at("skipped_episodes").get<int>();
        m.annotated = j.at("annotated").get<int>();
        m.unannotated = j.at("unannotated").get<int>();
        m.dropped = j.at("dropped").get<int>();
        for (const auto& [label, count] : j.at("per_strategy").items())
            m.per_strategy[label] = count.get<int>();
        for (const auto& r : j.at("records")) {
            ClipRecord rec;
            rec.clip_id = r.at("clip_id").get<std::string>();
            rec.variant = r.at("variant").get<std::string>();
            rec.policy = r.at("policy").get<std::string>();
            rec.relpath = r.at("relpath").get<std::string>();
            rec.frames = r.at("frames").get<int>();
            rec.label = r.at("label").get<std::string>();
            m.records.push_back(std::move(rec));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("manifest: schema: ") + e.what());
    }
    if (int(j.at("clips").get<int>()) != m.clips())
        throw DataError("manifest: clip count disagrees with records");
    return m;
}

void write_clip(const std::string& root, const StoredClip& clip) {
    const std::string dir = root + "/" + clip.record.relpath;
    fs::create_directories(dir);
    write_frames_bin(dir + "/frames.bin", clip.frames);
    write_meta(dir, int(clip.frames.size()));

    std::ostringstream csv;
    codec::write_actions_csv(csv, clip.actions);
    save_text(dir + "/actions.csv", csv.str());

    ordered_json ev;
    ordered_json events = ordered_json::array();
    for (const sim::Event& e : clip.events)
        events.push_back(
            {{"frame", e.frame},
             {"type", sim::event_type_names[size_t(e.type)]},
             {"actor", e.actor == sim::FighterId::player ? "player" : "npc"},
             {"kind", sim::attack_kind_names[size_t(e.kind)]},
             {"amount", e.amount},
             {"distance", e.distance}});
    ev["events"] = events;
    ev["player_boxes"] = boxes_json(clip.player_boxes);
    ev["npc_boxes"] = boxes_json(clip.npc_boxes);
    save_text(dir + "/events.json", ev.dump(2) + "\n");
}

StoredClip read_clip(const std::string& root, const ClipRecord& rec) {
    const std::string dir = root + "/" + rec.relpath;
    StoredClip clip;
    clip.record = rec;

    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(read_text(dir + "/meta.json", "meta.json"));
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("meta.json: invalid json: ") + e.what());
    }
    const int w = meta.at("width").get<int>();
    const int h = meta.at("height").get<int>();
    clip.frames = read_frames_bin(dir + "/frames.bin", w, h);
    if (int(clip.frames.size()) != meta.at("frame_count").get<int>())
        throw DataError("frames.bin frame count disagrees with meta.json: " + dir);

    std::istringstream csv(read_text(dir + "/actions.csv", "actions.csv"));
    clip.actions = codec::read_actions_csv(csv);

    nlohmann::json ev;
    try {
        ev = nlohmann::json::parse(read_text(dir + "/events.json", "events.json"));
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("events.json: invalid json: ") + e.what());
    }
    try {
        for (const auto& r : ev.at("events")) {
            sim::Event e;
            e.frame = r.at("frame").get<int>();
            e.type = sim::EventType(
                index_of(sim::event_type_names, r.at("type").get<std::string>(), "event type"));
            const std::string actor = r.at("actor").get<std::string>();
            if (actor != "player" && actor != "npc")
                throw DataError("events.json: unknown actor '" + actor + "'");
            e.actor = actor == "player" ? sim::FighterId::player : sim::FighterId::npc;
            e.kind = sim::AttackKind(
                index_of(sim::attack_kind_names, r.at("kind").get<std::string>(), "attack kind"));
            e.amount = r.at("amount").get<int>();
            e.distance = r.at("distance").get<double>();
            clip.events.push_back(e);
        }
        clip.player_boxes = boxes_from(ev.at("player_boxes"));
        clip.npc_boxes = boxes_from(ev.at("npc_boxes"));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("events.json: schema: ") + e.what());
    }
    return clip;
}

Manifest build_dataset(const Experiment& exp, const std::string& root) {
    fs::create_directories(root);
    Manifest man;
    for (const codec::GameVariant v : exp.variants) {
        const std::string vname = codec::variant_name(v);
        for (const sim::PolicyKind policy : k_dataset_policies) {
            const std::string pname = sim::policy_kind_names[size_t(policy)];
            const std::string stage = "record_" + vname + "_" + pname;
            int written = 0;
            for (int e = 0; e < exp.episodes_per_policy; ++e) {
                const uint64_t ep_seed = derive_seed(exp.seed, stage, uint64_t(e));
                Rng spawn(derive_seed(ep_seed, "spawn"));
                double px = 0.0, nx = 0.0;
                spawn_positions(policy, spawn, px, nx);

                sim::Engine eng(v);
                eng.reset(px, nx);
                auto player =
                    sim::make_policy_agent(sim::partner_for(policy), derive_seed(ep_seed, "player"));
                auto npc = sim::make_policy_agent(policy, derive_seed(ep_seed, "npc"));
                const sim::EpisodeResult ep = sim::run_episode(eng, *player, *npc, exp.episode_frames);
                ++man.episodes;

                const int usable = exp.episode_frames - exp.discard_frames;
                const int n_clips = usable > 0 ? usable / exp.clip_frames : 0;
                if (n_clips == 0) {
                    ++man.skipped_episodes;
                    continue;
                }
                for (int c = 0; c < n_clips; ++c) {
                    const int s = exp.discard_frames + c * exp.clip_frames;
                    StoredClip clip;
                    char id[16];
                    std::snprintf(id, sizeof id, "clip_%03d", written);
                    clip.record.clip_id = id;
                    clip.record.variant = vname;
                    clip.record.policy = pname;
                    clip.record.relpath = vname + "/" + pname + "/" + id;
                    clip.record.frames = exp.clip_frames;
                    clip.frames.assign(ep.frames.begin() + s,
                                       ep.frames.begin() + s + exp.clip_frames);
                    for (int t = 0; t < exp.clip_frames; ++t)
                        clip.actions.append(ep.player_actions.rows[size_t(s + t)]);
                    for (sim::Event e2 : ep.events) {
                        if (e2.frame < s || e2.frame >= s + exp.clip_frames) continue;
                        e2.frame -= s;
                        clip.events.push_back(e2);
                    }
                    clip.player_boxes.assign(ep.player_boxes.begin() + s,
                                             ep.player_boxes.begin() + s + exp.clip_frames);
                    clip.npc_boxes.assign(ep.npc_boxes.begin() + s,
                                          ep.npc_boxes.begin() + s + exp.clip_frames);
                    write_clip(root, clip);
                    man.records.push_back(clip.record);
                    ++written;
                }
            }
        }
    }
    save_text(root + "/manifest.json", manifest_json(man));
    return man;
}

Manifest annotate_dataset(const Config& cfg, const std::string& root) {
    const Experiment exp = experiment_from(cfg);
    Manifest man = parse_manifest(
        read_text(root + "/manifest.json", "manifest.json (run record first)"));
    const annotate::ParaphrasePools& pools = annotate::builtin_pools();

    // External mode resolves all fact sheets up front (bounded concurrency);
    // oracle mode reads the stored ground-truth boxes per clip.
    std::vector<annotate::ExternalResult> external;
    if (exp.annotate_mode == "external") {
        annotate::ExternalAnnotator client(exp.endpoint);
        std::vector<std::pair<std::string, std::string>> requests;
        requests.reserve(man.records.size());
        for (const ClipRecord& rec : man.records)
            requests.emplace_back(rec.relpath, rec.relpath + "/frames.bin");
        external = client.observe_many(requests);
        bool any_ok = external.empty();
        for (const annotate::ExternalResult& r : external)
            if (r.ok || r.error.rfind("transport", 0) != 0) any_ok = true;
        if (!any_ok)
            throw EndpointError("annotate: endpoint unreachable: " + external.front().error);
    }

    man.annotated = 0;
    man.unannotated = 0;
    man.dropped = 0;
    man.per_strategy.clear();
    for (size_t i = 0; i < man.records.size(); ++i) {
        ClipRecord& rec = man.records[i];
        const StoredClip clip = read_clip(root, rec);
        const codec::GameVariant v = variant_from(rec.variant);

        annotate::ClipAnnotation ann;
        if (exp.annotate_mode == "oracle") {
            const Trajectory tp = annotate::boxes_to_trajectory(clip.player_boxes);
            const Trajectory tn = annotate::boxes_to_trajectory(clip.npc_boxes);
            ann = annotate::annotate_clip_oracle(clip.events, tp, tn, v, rec.relpath, pools);
        } else {
            const annotate::ExternalResult& r = external[i];
            if (!r.ok) {  // clip-level isolation: keep the clip, skip the prompt
                rec.label = "";
                ++man.unannotated;
                continue;
            }
            ann.facts = r.facts;
            ann.label = annotate::classify_strategy(ann.facts);
            ann.vanilla = annotate::vanilla_prompt(clip.events, v);
            if (ann.label != annotate::StrategyLabel::dropped)
                ann.prompt = annotate::assemble_prompt(ann.facts, ann.label, rec.relpath, pools);
        }

        save_text(root + "/" + rec.relpath + "/prompt.json", annotate::prompt_json(ann) + "\n");
        rec.label = annotate::strategy_label_names[size_t(ann.label)];
        ++man.annotated;
        if (ann.label == annotate::StrategyLabel::dropped)
            ++man.dropped;
        else
            ++man.per_strategy[rec.label];
    }
    save_text(root + "/manifest.json", manifest_json(man));
    return man;
}

}  // namespace gwm::pipeline
