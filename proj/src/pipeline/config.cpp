#include "gwm/pipeline.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace gwm::pipeline {
namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

template <typename T>
T parse_number(const std::string& key, const std::string& raw) {
    const std::string v = trim(raw);
    T out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size())
        throw DataError("config: key '" + key + "' is not a number: '" + raw + "'");
    return out;
}

codec::GameVariant variant_from(const std::string& name) {
    if (name == "game1") return codec::GameVariant::game1;
    if (name == "game2") return codec::GameVariant::game2;
    throw DataError("config: unknown variant '" + name + "'");
}

}  // namespace

std::string Config::str(const std::string& key, const std::string& def) const {
    const auto it = kv.find(key);
    return it == kv.end() ? def : it->second;
}

int64_t Config::i64(const std::string& key, int64_t def) const {
    const auto it = kv.find(key);
    return it == kv.end() ? def : parse_number<int64_t>(key, it->second);
}

uint64_t Config::u64(const std::string& key, uint64_t def) const {
    const auto it = kv.find(key);
    return it == kv.end() ? def : parse_number<uint64_t>(key, it->second);
}

double Config::f64(const std::string& key, double def) const {
    const auto it = kv.find(key);
    if (it == kv.end()) return def;
    const std::string v = trim(it->second);
    size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || v.empty())
        throw DataError("config: key '" + key + "' is not a number: '" + it->second + "'");
    return out;
}

bool Config::flag(const std::string& key, bool def) const {
    const auto it = kv.find(key);
    if (it == kv.end()) return def;
    const std::string v = trim(it->second);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw DataError("config: key '" + key + "' is not a flag: '" + it->second + "'");
}

std::string Config::text() const {
    std::ostringstream os;
    for (const auto& [k, v] : kv) os << k << " = " << v << "\n";
    return os.str();
}

Config parse_config(const std::string& text) {
    Config cfg;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw DataError("config: line " + std::to_string(lineno) +
                            " is not 'key = value': '" + stripped + "'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty())
            throw DataError("config: line " + std::to_string(lineno) + " has an empty key");
        cfg.kv[key] = value;
    }
    return cfg;
}

Config load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("config: cannot open: " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_config(buf.str());
}

void save_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open for write: " + path);
    os << text;
    if (!os) throw DataError("write failed: " + path);
}

Experiment experiment_from(const Config& cfg) {
    Experiment exp;
    exp.seed = cfg.u64("seed", exp.seed);

    std::istringstream vs(cfg.str("dataset.variants", "game1,game2"));
    std::string name;
    while (std::getline(vs, name, ',')) {
        const std::string t = trim(name);
        if (!t.empty()) exp.variants.push_back(variant_from(t));
    }
    if (exp.variants.empty()) throw DataError("config: dataset.variants is empty");

    exp.episodes_per_policy = int(cfg.i64("dataset.episodes_per_policy", exp.episodes_per_policy));
    exp.episode_frames = int(cfg.i64("dataset.episode_frames", exp.episode_frames));
    exp.discard_frames = int(cfg.i64("dataset.discard_frames", exp.discard_frames));
    exp.clip_frames = int(cfg.i64("dataset.clip_frames", exp.clip_frames));
    if (exp.episodes_per_policy < 0 || exp.episode_frames <= 0 || exp.discard_frames < 0)
        throw DataError("config: dataset sizes must be non-negative");

    exp.annotate_mode = cfg.str("annotate.mode", exp.annotate_mode);
    if (exp.annotate_mode != "oracle" && exp.annotate_mode != "external")
        throw DataError("config: annotate.mode must be oracle or external, got '" +
                        exp.annotate_mode + "'");
    exp.endpoint.host = cfg.str("annotate.host", exp.endpoint.host);
    exp.endpoint.port = int(cfg.i64("annotate.port", exp.endpoint.port));
    exp.endpoint.path = cfg.str("annotate.path", exp.endpoint.path);
    exp.endpoint.max_in_flight = int(cfg.i64("annotate.max_in_flight", exp.endpoint.max_in_flight));
    exp.endpoint.max_retries = int(cfg.i64("annotate.max_retries", exp.endpoint.max_retries));
    exp.endpoint.timeout_ms = int(cfg.i64("annotate.timeout_ms", exp.endpoint.timeout_ms));

    wm::ModelConfig& m = exp.model;
    m.num_blocks = int(cfg.i64("model.blocks", m.num_blocks));
    m.channels = int(cfg.i64("model.channels", m.channels));
    m.heads = int(cfg.i64("model.heads", m.heads));
    m.latent_frames = int(cfg.i64("model.latent_frames", m.latent_frames));
    m.prompt_dim = int(cfg.i64("model.prompt_dim", m.prompt_dim));
    m.diffusion_steps = int(cfg.i64("model.diffusion_steps", m.diffusion_steps));
    m.sample_steps = int(cfg.i64("model.sample_steps", m.sample_steps));
    if (m.channels <= 0 || m.heads <= 0 || m.channels % m.heads != 0)
        throw DataError("config: model.channels must be a positive multiple of model.heads");
    if (exp.clip_frames + m.temporal_factor != m.latent_frames * m.temporal_factor)
        throw DataError("config: dataset.clip_frames must equal (model.latent_frames - 1) * " +
                        std::to_string(m.temporal_factor));

    exp.sched_b0 = cfg.f64("sched.b0", exp.sched_b0);
    exp.sched_b1 = cfg.f64("sched.b1", exp.sched_b1);
    exp.train_steps = int(cfg.i64("train.steps", exp.train_steps));
    exp.train_batch = int(cfg.i64("train.batch", exp.train_batch));
    exp.train_lr = cfg.f64("train.lr", exp.train_lr);
    if (exp.train_steps < 0 || exp.train_batch <= 0 || exp.train_lr <= 0.0)
        throw DataError("config: train.steps/batch/lr out of range");
    return exp;
}

}  // namespace gwm::pipeline
