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

codec::GameVariant variant_from(const std::string& name) {
    if (name == "game1") return codec::GameVariant::game1;
    if (name == "game2") return codec::GameVariant::game2;
    throw DataError("unknown variant '" + name + "'");
}

std::string read_text(const std::string& path, const std::string& what) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError(what + " not found: " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

void echo_config(const Config& cfg, const std::string& out) {
    fs::create_directories(out);
    save_text(out + "/config.echo", cfg.text());
}

std::string dataset_root(const Config& cfg, const std::string& out) {
    return cfg.str("dataset.dir", out + "/dataset");
}

wm::Model load_model(const std::string& path, const std::string& what,
                     const wm::ModelConfig* expect, wm::CheckpointInfo* info = nullptr) {
    if (path.empty()) throw DataError(what + ": checkpoint path not configured");
    if (!fs::exists(path)) throw DataError(what + " checkpoint not found: " + path);
    try {
        return wm::load_checkpoint(path, info, expect);
    } catch (const std::exception& e) {
        throw DataError(what + " checkpoint unreadable: " + path + ": " + e.what());
    }
}

bool is_ca_projection(const std::string& name) {
    for (const char* sfx : {".ca_q", ".ca_k", ".ca_v", ".ca_o"})
        if (name.size() >= std::string_view(sfx).size() &&
            name.compare(name.size() - std::string_view(sfx).size(), std::string::npos, sfx) == 0)
            return true;
    return false;
}

// Prompt tokens used when a benchmark clip has no annotation of its own:
// the vanilla path gets the empty-scene caption, the strategy path a bare
// defense prompt (the least behaviour-inducing category).
std::vector<int> neutral_tokens(const std::string& mode, codec::GameVariant v,
                                const wm::ModelConfig& mcfg) {
    if (mode == "vanilla")
        return wm::tokenize_vanilla(annotate::vanilla_prompt({}, v), mcfg);
    const annotate::NpcPrompt p = annotate::assemble_prompt(
        annotate::FactSheet{}, annotate::StrategyLabel::defense, "action_bench",
        annotate::builtin_pools());
    return wm::tokenize_prompt(p, mcfg);
}

std::string prompt_mode(const Config& cfg, const char* key) {
    const std::string mode = cfg.str(key, "strategy");
    if (mode != "strategy" && mode != "vanilla")
        throw DataError(std::string("config: ") + key + " must be strategy or vanilla, got '" +
                        mode + "'");
    return mode;
}

ordered_json rows_json(const std::vector<eval::RunRow>& rows) {
    ordered_json arr = ordered_json::array();
    for (const eval::RunRow& r : rows)
        arr.push_back({{"run_id", r.run_id},
                       {"condition", r.condition},
                       {"prediction", r.prediction},
                       {"truth", r.truth},
                       {"valid", r.valid},
                       {"pass", r.pass}});
    return arr;
}

}  // namespace

wm::TrainItem clip_train_item(const std::vector<Frame>& clip_frames,
                              const codec::ActionTable& actions,
                              const std::vector<int>& prompt_tokens,
                              const wm::ModelConfig& cfg) {
    const int want = (cfg.latent_frames - 1) * cfg.temporal_factor;
    if (int(clip_frames.size()) != want)
        throw DataError("train item: clip has " + std::to_string(clip_frames.size()) +
                        " frames, model expects " + std::to_string(want));
    if (actions.rows.size() != clip_frames.size())
        throw DataError("train item: action rows != frame count");

    std::vector<Frame> padded;
    padded.reserve(clip_frames.size() + size_t(cfg.temporal_factor));
    for (int i = 0; i < cfg.temporal_factor; ++i) padded.push_back(clip_frames[0]);
    padded.insert(padded.end(), clip_frames.begin(), clip_frames.end());

    codec::ActionTable shifted;
    for (int i = 0; i < cfg.temporal_factor; ++i) shifted.append({});
    for (const codec::ButtonVector& row : actions.rows) shifted.append(row);

    wm::TrainItem item;
    item.latent = wm::encode_frames(padded, cfg);
    item.pooled = wm::pooled_player_actions(shifted, cfg);
    item.prompt = prompt_tokens;
    return item;
}

void cmd_record(const Config& cfg, const std::string& out) {
    const Experiment exp = experiment_from(cfg);
    const std::string root = dataset_root(cfg, out);
    echo_config(cfg, out);
    const Manifest man = build_dataset(exp, root);
    std::printf("record: %d episodes -> %d clips (%d episodes too short) under %s\n",
                man.episodes, man.clips(), man.skipped_episodes, root.c_str());
}

void cmd_annotate(const Config& cfg, const std::string& out) {
    const std::string root = dataset_root(cfg, out);
    echo_config(cfg, out);
    const Manifest man = annotate_dataset(cfg, root);
    std::printf("annotate: %d clips -> %d annotated (%d dropped, %d unannotated)\n",
                man.clips(), man.annotated, man.dropped, man.unannotated);
    for (const auto& [label, count] : man.per_strategy)
        std::printf("annotate:   %s: %d\n", label.c_str(), count);
}

void cmd_train(const Config& cfg, const std::string& out) {
    const Experiment exp = experiment_from(cfg);
    const std::string root = dataset_root(cfg, out);
    const std::string mode = prompt_mode(cfg, "train.mode");
    const std::string vname = cfg.str("train.variant", "game1");
    variant_from(vname);  // validate
    const std::string name = cfg.str("train.name", mode + "_" + vname);

    const Manifest man = parse_manifest(
        read_text(root + "/manifest.json", "manifest.json (run record first)"));

    std::vector<wm::TrainItem> items;
    for (const ClipRecord& rec : man.records) {
        if (rec.variant != vname) continue;
        if (rec.label.empty()) continue;  // external-mode failure: unusable
        if (mode == "strategy" && rec.label == "Dropped") continue;
        const StoredClip clip = read_clip(root, rec);
        const annotate::ClipAnnotation ann = annotate::parse_prompt_json(read_text(
            root + "/" + rec.relpath + "/prompt.json", "prompt.json (run annotate first)"));
        const std::vector<int> tokens = mode == "strategy"
                                            ? wm::tokenize_prompt(ann.prompt, exp.model)
                                            : wm::tokenize_vanilla(ann.vanilla, exp.model);
        items.push_back(clip_train_item(clip.frames, clip.actions, tokens, exp.model));
    }
    if (items.empty())
        throw DataError("train: no usable " + mode + " clips for variant " + vname +
                        " under " + root);

    wm::Model model(exp.model, derive_seed(exp.seed, "model_" + mode + "_" + vname));
    const wm::DiffusionSchedule sched =
        wm::DiffusionSchedule::linear(exp.model.diffusion_steps, exp.sched_b0, exp.sched_b1);
    wm::AdamOpt opt;
    opt.lr = exp.train_lr;
    Rng rng(derive_seed(exp.seed, "train_" + mode + "_" + vname));

    echo_config(cfg, out);
    std::vector<std::pair<long, double>> losses;
    losses.reserve(size_t(exp.train_steps));
    for (int step = 0; step < exp.train_steps; ++step) {
        std::vector<wm::TrainItem> batch;
        batch.reserve(size_t(exp.train_batch));
        for (int b = 0; b < exp.train_batch; ++b)
            batch.push_back(items[size_t(rng.next_below(items.size()))]);
        const double loss = wm::training_step(model, sched, batch, opt, rng);
        losses.emplace_back(step, loss);
    }

    const std::string ckpt = out + "/" + name + ".gwmc";
    wm::save_checkpoint(ckpt, model, exp.seed, uint64_t(exp.train_steps));
    wm::write_loss_csv(out + "/" + name + "_loss.csv", losses);
    std::printf("train: %zu items, %d steps -> %s (final loss %.6f)\n", items.size(),
                exp.train_steps, ckpt.c_str(),
                losses.empty() ? 0.0 : losses.back().second);
}

void cmd_transfer(const Config& cfg, const std::string& out) {
    const Experiment exp = experiment_from(cfg);
    const std::string name = cfg.str("transfer.name", "transfer");
    wm::CheckpointInfo target_info;
    const wm::Model target = load_model(cfg.str("transfer.target", ""), "transfer: target",
                                        &exp.model, &target_info);
    const wm::Model source =
        load_model(cfg.str("transfer.source", ""), "transfer: source", &exp.model);

    wm::Model composed = [&] {
        try {
            return wm::swap_cross_attention(target, source);
        } catch (const std::invalid_argument& e) {
            throw DataError(std::string("transfer: ") + e.what());
        }
    }();

    // Bit-exact partition audit: every parameter must equal exactly one donor.
    int swapped = 0, backbone = 0;
    for (const wm::Param& p : composed.params()) {
        const bool from_source = is_ca_projection(p.name);
        const wm::Param& donor = from_source ? source.param(p.name) : target.param(p.name);
        if (p.t.data != donor.t.data)
            throw DataError("transfer: audit mismatch at " + p.name);
        (from_source ? swapped : backbone) += 1;
    }

    echo_config(cfg, out);
    const std::string ckpt = out + "/" + name + ".gwmc";
    wm::save_checkpoint(ckpt, composed, target_info.train_seed, target_info.train_steps);

    ordered_json audit;
    audit["target"] = cfg.str("transfer.target", "");
    audit["source"] = cfg.str("transfer.source", "");
    audit["swapped_params"] = swapped;
    audit["backbone_params"] = backbone;
    audit["bit_exact"] = true;
    save_text(out + "/" + name + "_audit.json", audit.dump(2) + "\n");
    std::printf("transfer: %d cross-attention params from source, %d backbone params "
                "from target -> %s\n",
                swapped, backbone, ckpt.c_str());
}

void cmd_eval(const Config& cfg, const std::string& out) {
    const Experiment exp = experiment_from(cfg);
    const std::string name = cfg.str("eval.name", "model");
    const std::string mode = prompt_mode(cfg, "eval.prompt_mode");
    const codec::GameVariant v = variant_from(cfg.str("eval.variant", "game1"));
    const uint64_t bench_seed = cfg.u64("eval.bench_seed", derive_seed(exp.seed, "bench"));

    wm::Model model =
        load_model(cfg.str("eval.checkpoint", ""), "eval: " + name, &exp.model);
    const wm::DiffusionSchedule sched =
        wm::DiffusionSchedule::linear(exp.model.diffusion_steps, exp.sched_b0, exp.sched_b1);
    echo_config(cfg, out);

    ordered_json j;
    j["model"] = name;
    j["checkpoint"] = cfg.str("eval.checkpoint", "");
    j["variant"] = codec::variant_name(v);
    j["prompt_mode"] = mode;
    j["bench_seed"] = bench_seed;

    if (cfg.flag("eval.action", true)) {
        const std::vector<int> tokens = neutral_tokens(mode, v, exp.model);
        const eval::ClipGenerator gen = [&](const eval::BenchState& bs,
                                            const codec::ActionTable& actions,
                                            uint64_t run_seed) {
            return wm::sample_video(model, sched, bs.init, actions, tokens, run_seed);
        };
        const eval::ActionBenchmarkReport rep = eval::run_action_benchmark(gen, v, bench_seed);
        j["action"] = {{"move_acc", rep.move_acc},
                       {"att_acc", rep.att_acc},
                       {"move_valid", rep.move_valid},
                       {"move_total", rep.move_total},
                       {"att_valid", rep.att_valid},
                       {"att_total", rep.att_total},
                       {"rows", rows_json(rep.rows)}};
        std::printf("eval %s: Move-Acc %.1f  Att-Acc %.1f\n", name.c_str(), rep.move_acc,
                    rep.att_acc);
    }

    const std::vector<eval::StrategyCondition> conditions =
        eval::strategy_benchmark_conditions(v, bench_seed);
    if (cfg.flag("eval.strategy", true)) {
        const eval::StrategyGenerator gen = [&](const eval::StrategyCondition& cond,
                                                uint64_t run_seed) {
            const std::vector<int> tokens = mode == "strategy"
                                                ? wm::tokenize_prompt(cond.prompt, exp.model)
                                                : wm::tokenize_vanilla(cond.vanilla, exp.model);
            return wm::sample_video(model, sched, cond.init, cond.player_actions, tokens,
                                    run_seed);
        };
        const eval::StrategyGenerator reference = eval::simulator_strategy_generator(v);
        const bool want_ssim = cfg.flag("eval.ssim", true);
        const eval::StrategyBenchmarkReport rep =
            eval::run_strategy_benchmark(gen, conditions, want_ssim ? &reference : nullptr);
        j["strategy"] = {{"accuracy", rep.accuracy}, {"valid", rep.valid},
                         {"total", rep.total},       {"invalid", rep.invalid},
                         {"ssim_mean", rep.ssim_mean}, {"ssim_clips", rep.ssim_clips},
                         {"rows", rows_json(rep.rows)}};
        std::printf("eval %s: referee accuracy %.1f over %d valid (ssim %.4f)\n",
                    name.c_str(), rep.accuracy, rep.valid, rep.ssim_mean);
    }

    // Pathway-energy probe: forward the replay of a few benchmark conditions
    // at the mid noise level and average rho per block.
    const int probes = int(std::min<size_t>(8, conditions.size()));
    if (probes > 0) {
        const eval::StrategyGenerator reference = eval::simulator_strategy_generator(v);
        std::vector<double> rho(size_t(exp.model.num_blocks), 0.0);
        for (int p = 0; p < probes; ++p) {
            const eval::StrategyCondition& cond = conditions[size_t(p)];
            const std::vector<Frame> replay =
                reference(cond, derive_seed(cond.rollout_seed, "bench_run"));
            const std::vector<Frame> body(replay.begin() + 1, replay.end());
            const std::vector<int> tokens = mode == "strategy"
                                                ? wm::tokenize_prompt(cond.prompt, exp.model)
                                                : wm::tokenize_vanilla(cond.vanilla, exp.model);
            const wm::TrainItem item =
                clip_train_item(body, cond.player_actions, tokens, exp.model);
            wm::Workspace ws;
            model.forward(item.latent, exp.model.diffusion_steps / 2, &item.pooled,
                          item.prompt, &ws);
            for (int b = 0; b < exp.model.num_blocks; ++b)
                rho[size_t(b)] += wm::pathway_energy(ws, b).rho / double(probes);
        }
        double rho_bar = 0.0;
        for (const double r : rho) rho_bar += r / double(exp.model.num_blocks);
        j["rho_per_block"] = rho;
        j["rho_bar"] = rho_bar;
    }

    save_text(out + "/metrics_" + name + ".json", j.dump(2) + "\n");
}

void cmd_analyze(const Config& cfg, const std::string& out) {
    const Experiment exp = experiment_from(cfg);
    const codec::GameVariant v = variant_from(cfg.str("analyze.variant", "game2"));
    const uint64_t bench_seed = cfg.u64("eval.bench_seed", derive_seed(exp.seed, "bench"));
    wm::Model vanilla =
        load_model(cfg.str("analyze.vanilla", ""), "analyze: vanilla", &exp.model);
    wm::Model transfer =
        load_model(cfg.str("analyze.transfer", ""), "analyze: transfer", &exp.model);
    echo_config(cfg, out);

    const std::vector<eval::StrategyCondition> conditions =
        eval::strategy_benchmark_conditions(v, bench_seed);
    const eval::StrategyGenerator reference = eval::simulator_strategy_generator(v);
    const int probes = int(std::min<size_t>(8, conditions.size()));
    if (probes == 0) throw DataError("analyze: no benchmark conditions");

    std::vector<double> rho_vanilla(size_t(exp.model.num_blocks), 0.0);
    std::vector<double> rho_transfer(size_t(exp.model.num_blocks), 0.0);
    double cosine = 0.0, delta = 0.0;
    for (int p = 0; p < probes; ++p) {
        const eval::StrategyCondition& cond = conditions[size_t(p)];
        const std::vector<Frame> replay =
            reference(cond, derive_seed(cond.rollout_seed, "bench_run"));
        const std::vector<Frame> body(replay.begin() + 1, replay.end());
        // Matched inputs: both models see the strategy prompt so the cosine
        // isolates what the swapped projections do with the same stream.
        const wm::TrainItem item = clip_train_item(
            body, cond.player_actions, wm::tokenize_prompt(cond.prompt, exp.model), exp.model);
        wm::Workspace wa, wb;
        vanilla.forward(item.latent, exp.model.diffusion_steps / 2, &item.pooled, item.prompt,
                        &wa);
        transfer.forward(item.latent, exp.model.diffusion_steps / 2, &item.pooled, item.prompt,
                         &wb);
        for (int b = 0; b < exp.model.num_blocks; ++b) {
            rho_vanilla[size_t(b)] += wm::pathway_energy(wa, b).rho / double(probes);
            rho_transfer[size_t(b)] += wm::pathway_energy(wb, b).rho / double(probes);
            const wm::DirectionSimilarity ds = wm::ca_direction_similarity(
                wa.blocks[size_t(b)].ca_out, wb.blocks[size_t(b)].ca_out);
            cosine += ds.cosine / double(probes * exp.model.num_blocks);
            delta += ds.delta_norm / double(probes * exp.model.num_blocks);
        }
    }

    ordered_json j;
    j["variant"] = codec::variant_name(v);
    j["probes"] = probes;
    j["rho_vanilla"] = rho_vanilla;
    j["rho_transfer"] = rho_transfer;
    j["ca_cosine_mean"] = cosine;
    j["ca_delta_norm_mean"] = delta;
    save_text(out + "/analysis.json", j.dump(2) + "\n");
    std::printf("analyze: ca cosine %.4f, delta norm %.4f over %d probes\n", cosine, delta,
                probes);
}

void cmd_report(const Config& cfg, const std::string& out) {
    struct Row {
        const char* name;
        const char* key;
    };
    constexpr Row rows[] = {{"vanilla", "report.vanilla"},
                            {"base", "report.base"},
                            {"transfer", "report.transfer"}};
    echo_config(cfg, out);

    std::ostringstream md;
    md << "# benchmark summary\n\n";
    md << "| model | Move-Acc | Att-Acc | Referee-Acc | SSIM |\n";
    md << "|---|---|---|---|---|\n";
    char line[256];
    for (const Row& row : rows) {
        const std::string path = cfg.str(row.key, "");
        if (path.empty())
            throw DataError(std::string("report: ") + row.key +
                            " (metrics json from eval) is required");
        nlohmann::json m;
        try {
            m = nlohmann::json::parse(read_text(path, std::string("report: metrics for '") +
                                                          row.name + "' (run eval first)"));
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError("report: invalid metrics json " + path + ": " + e.what());
        }
        if (!m.contains("action") || !m.contains("strategy"))
            throw DataError("report: " + path + " lacks action/strategy sections");
        std::snprintf(line, sizeof line, "| %s | %.1f | %.1f | %.1f | %.4f |\n", row.name,
                      m["action"]["move_acc"].get<double>(),
                      m["action"]["att_acc"].get<double>(),
                      m["strategy"]["accuracy"].get<double>(),
                      m["strategy"]["ssim_mean"].get<double>());
        md << line;
    }
    md << "\nReferee accuracy is the deterministic-referee agreement with each "
          "condition's generating category over the 99 curated benchmark rollouts; "
          "SSIM compares generated clips with the simulator replay.\n";
    save_text(out + "/report.md", md.str());
    std::printf("report: wrote %s/report.md\n", out.c_str());
}

}  // namespace gwm::pipeline
