#include "gwm/pipeline.hpp"

#include <cstdio>
#include <functional>

#include <CLI11.hpp>

namespace gwm::pipeline {
namespace {

struct SubSpec {
    const char* name;
    const char* blurb;
    void (*fn)(const Config&, const std::string&);
};

constexpr SubSpec k_subcommands[] = {
    {"record", "run scripted episodes and write the clip dataset", &cmd_record},
    {"annotate", "attach facts, strategy labels and prompts to recorded clips",
     &cmd_annotate},
    {"train", "train a vanilla or strategy model on annotated clips", &cmd_train},
    {"transfer", "compose a checkpoint by swapping in donor cross-attention",
     &cmd_transfer},
    {"eval", "run the action and strategy benchmarks for a checkpoint", &cmd_eval},
    {"analyze", "compare pathway energy and attention directions of two checkpoints",
     &cmd_analyze},
    {"report", "render the summary table from eval metrics", &cmd_report},
};

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"game world-model workbench"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out = "out";
    uint64_t seed = 0;
    std::vector<std::string> overrides;
    for (const SubSpec& spec : k_subcommands) {
        CLI::App* sub = app.add_subcommand(spec.name, spec.blurb);
        sub->add_option("--config", config_path, "flat key=value config file");
        sub->add_option("--seed", seed, "override the experiment seed");
        sub->add_option("--out", out, "output directory (default: out)");
        sub->add_option("overrides", overrides, "key=value config overrides");
    }

    try {
        app.parse(argc, const_cast<char**>(argv));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    CLI::App* picked = app.get_subcommands().front();

    try {
        Config cfg;
        if (!config_path.empty()) cfg = load_config(config_path);
        for (const std::string& ov : overrides) {
            const size_t eq = ov.find('=');
            if (eq == std::string::npos || eq == 0)
                throw UsageError("override must be key=value, got '" + ov + "'");
            cfg.set(ov.substr(0, eq), ov.substr(eq + 1));
        }
        if (picked->count("--seed") > 0) cfg.set("seed", std::to_string(seed));
        cfg.set("out", out);

        for (const SubSpec& spec : k_subcommands)
            if (picked->get_name() == spec.name) {
                spec.fn(cfg, out);
                return 0;
            }
        throw UsageError("unknown command " + picked->get_name());
    } catch (const UsageError& e) {
        std::fprintf(stderr, "gwm: %s\n", e.what());
        return 1;
    } catch (const EndpointError& e) {
        std::fprintf(stderr, "gwm: %s\n", e.what());
        return 3;
    } catch (const DataError& e) {
        std::fprintf(stderr, "gwm: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "gwm: %s\n", e.what());
        return 2;
    }
}

}  // namespace gwm::pipeline
