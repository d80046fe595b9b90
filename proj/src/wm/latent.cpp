// Frame <-> latent codec, prompt tokenizers, and the pooled-action feature.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>

#include "gwm/wm.hpp"

namespace gwm::wm {
namespace {

// Fixed 3 -> C orthonormal lift shared by every model.  Seeded independently
// of any model seed so datasets, checkpoints, and transferred models all
// speak the same latent space; orthonormal columns make the transpose an
// exact inverse on the pooled colours.
std::vector<double> make_lift(int channels) {
    if (channels < 3) throw std::invalid_argument("latent lift: channels must be >= 3");
    Rng rng(derive_seed(0x746e656d616cull, "latent_lift"));
    std::vector<double> cols(size_t(channels) * 3, 0.0);  // row-major [C][3]
    for (int k = 0; k < 3; ++k) {
        for (int i = 0; i < channels; ++i) cols[size_t(i) * 3 + k] = rng.next_gaussian();
        for (int j = 0; j < k; ++j) {
            double d = 0.0;
            for (int i = 0; i < channels; ++i)
                d += cols[size_t(i) * 3 + j] * cols[size_t(i) * 3 + k];
            for (int i = 0; i < channels; ++i)
                cols[size_t(i) * 3 + k] -= d * cols[size_t(i) * 3 + j];
        }
        double n2 = 0.0;
        for (int i = 0; i < channels; ++i) {
            const double v = cols[size_t(i) * 3 + k];
            n2 += v * v;
        }
        if (n2 <= 1e-12) throw std::logic_error("latent lift: degenerate column");
        const double inv = 1.0 / std::sqrt(n2);
        for (int i = 0; i < channels; ++i) cols[size_t(i) * 3 + k] *= inv;
    }
    return cols;
}

const std::vector<double>& lift_matrix(int channels) {
    static std::mutex mu;
    static std::map<int, std::vector<double>> cache;
    std::lock_guard<std::mutex> lock(mu);
    std::vector<double>& m = cache[channels];
    if (m.empty()) m = make_lift(channels);
    return m;
}

int active_tag_id(const std::string& tag) {
    for (int i = 0; i < annotate::k_active_tag_count; ++i)
        if (tag == annotate::active_tag_names[size_t(i)]) return k_tok_active_base + i;
    throw std::invalid_argument("tokenize_prompt: unknown active tag '" + tag + "'");
}

int passive_tag_id(const std::string& tag) {
    for (int i = 0; i < annotate::k_passive_tag_count; ++i)
        if (tag == annotate::passive_tag_names[size_t(i)]) return k_tok_passive_base + i;
    throw std::invalid_argument("tokenize_prompt: unknown passive tag '" + tag + "'");
}

}  // namespace

Tensor encode_frames(const std::vector<Frame>& frames, const ModelConfig& cfg) {
    const int fw = cfg.latent_w * cfg.spatial_factor;
    const int fh = cfg.latent_h * cfg.spatial_factor;
    if (frames.empty()) throw std::invalid_argument("encode_frames: empty clip");
    if (int(frames.size()) % cfg.temporal_factor != 0)
        throw std::invalid_argument("encode_frames: frame count " +
                                    std::to_string(frames.size()) +
                                    " not divisible by temporal factor " +
                                    std::to_string(cfg.temporal_factor));
    for (const Frame& fr : frames)
        if (fr.w != fw || fr.h != fh)
            throw std::invalid_argument("encode_frames: frame size mismatch");

    const int f = int(frames.size()) / cfg.temporal_factor;
    const int sf = cfg.spatial_factor;
    const double scale = 1.0 / (double(cfg.temporal_factor) * double(sf) * double(sf));
    const std::vector<double>& lift = lift_matrix(cfg.channels);

    Tensor out({f, cfg.latent_h, cfg.latent_w, cfg.channels});
    for (int fi = 0; fi < f; ++fi)
        for (int y = 0; y < cfg.latent_h; ++y)
            for (int x = 0; x < cfg.latent_w; ++x) {
                double rgb[3] = {0.0, 0.0, 0.0};
                for (int t = fi * cfg.temporal_factor; t < (fi + 1) * cfg.temporal_factor; ++t) {
                    const Frame& fr = frames[size_t(t)];
                    for (int py = y * sf; py < (y + 1) * sf; ++py)
                        for (int px = x * sf; px < (x + 1) * sf; ++px) {
                            const uint8_t* p = fr.px(px, py);
                            rgb[0] += p[0];
                            rgb[1] += p[1];
                            rgb[2] += p[2];
                        }
                }
                for (double& v : rgb) v = v * scale / 127.5 - 1.0;
                double* cell =
                    out.data.data() +
                    ((size_t(fi) * size_t(cfg.latent_h) + size_t(y)) * size_t(cfg.latent_w) +
                     size_t(x)) *
                        size_t(cfg.channels);
                for (int c = 0; c < cfg.channels; ++c)
                    cell[c] = lift[size_t(c) * 3 + 0] * rgb[0] + lift[size_t(c) * 3 + 1] * rgb[1] +
                              lift[size_t(c) * 3 + 2] * rgb[2];
            }
    return out;
}

std::vector<Frame> decode_latent(const Tensor& latent, const ModelConfig& cfg) {
    if (latent.shape.size() != 4 || latent.dim(1) != cfg.latent_h ||
        latent.dim(2) != cfg.latent_w || latent.dim(3) != cfg.channels)
        throw std::invalid_argument("decode_latent: latent shape mismatch");

    const int f = latent.dim(0);
    const int sf = cfg.spatial_factor;
    const int fw = cfg.latent_w * sf;
    const int fh = cfg.latent_h * sf;
    const std::vector<double>& lift = lift_matrix(cfg.channels);

    std::vector<Frame> out;
    out.reserve(size_t(f) * size_t(cfg.temporal_factor));
    for (int fi = 0; fi < f; ++fi) {
        Frame frame(fw, fh);
        for (int y = 0; y < cfg.latent_h; ++y)
            for (int x = 0; x < cfg.latent_w; ++x) {
                const double* cell =
                    latent.data.data() +
                    ((size_t(fi) * size_t(cfg.latent_h) + size_t(y)) * size_t(cfg.latent_w) +
                     size_t(x)) *
                        size_t(cfg.channels);
                uint8_t px[3];
                for (int k = 0; k < 3; ++k) {
                    double v = 0.0;
                    for (int c = 0; c < cfg.channels; ++c) v += lift[size_t(c) * 3 + k] * cell[c];
                    const double raw = (v + 1.0) * 127.5;
                    px[k] = uint8_t(std::llround(std::min(255.0, std::max(0.0, raw))));
                }
                for (int py = y * sf; py < (y + 1) * sf; ++py)
                    for (int pxx = x * sf; pxx < (x + 1) * sf; ++pxx)
                        frame.put(pxx, py, px[0], px[1], px[2]);
            }
        for (int t = 0; t < cfg.temporal_factor; ++t) out.push_back(frame);
    }
    return out;
}

std::vector<int> tokenize_prompt(const annotate::NpcPrompt& prompt, const ModelConfig& cfg) {
    if (cfg.prompt_vocab <= k_tok_word_base)
        throw std::invalid_argument("tokenize_prompt: prompt vocabulary too small");
    int cat = -1;
    for (int i = 0; i < 3; ++i)
        if (prompt.strategy_category == annotate::strategy_label_names[size_t(i)]) cat = i;
    if (cat < 0)
        throw std::invalid_argument("tokenize_prompt: unknown strategy category '" +
                                    prompt.strategy_category + "'");
    std::vector<int> ids{k_tok_category_base + cat};
    for (const annotate::PromptClause& cl : prompt.active) ids.push_back(active_tag_id(cl.tag));
    for (const annotate::PromptClause& cl : prompt.passive) ids.push_back(passive_tag_id(cl.tag));
    if (int(ids.size()) > cfg.max_prompt_tokens) ids.resize(size_t(cfg.max_prompt_tokens));
    return ids;
}

std::vector<int> tokenize_vanilla(const std::string& text, const ModelConfig& cfg) {
    const int span = cfg.prompt_vocab - k_tok_word_base;
    if (span <= 0) throw std::invalid_argument("tokenize_vanilla: prompt vocabulary too small");
    std::vector<int> ids{k_tok_vanilla_marker};
    std::string word;
    const auto flush = [&] {
        if (word.empty()) return;
        ids.push_back(k_tok_word_base + int(hash_tag(word) % uint64_t(span)));
        word.clear();
    };
    for (const char ch : text) {
        const unsigned char u = static_cast<unsigned char>(ch);
        if (std::isalnum(u))
            word.push_back(char(std::tolower(u)));
        else
            flush();
    }
    flush();
    if (int(ids.size()) > cfg.max_prompt_tokens) ids.resize(size_t(cfg.max_prompt_tokens));
    return ids;
}

Tensor pooled_player_actions(const codec::ActionTable& table, const ModelConfig& cfg) {
    if (int(table.frames()) != cfg.clip_frames())
        throw std::invalid_argument("pooled_player_actions: expected " +
                                    std::to_string(cfg.clip_frames()) + " action rows, got " +
                                    std::to_string(table.frames()));
    const codec::ActionTable binned = codec::pool_actions(table, cfg.latent_frames);
    Tensor out({cfg.latent_frames, cfg.buttons});
    // Row 0 stays zero: the clean init frame carries no action conditioning.
    for (int i = 1; i < cfg.latent_frames; ++i) {
        const std::array<double, codec::usable_button_count> bits =
            codec::usable_bits(binned.rows[size_t(i)]);
        for (int k = 0; k < cfg.buttons && k < int(bits.size()); ++k)
            out.data[size_t(i) * size_t(cfg.buttons) + size_t(k)] = bits[size_t(k)];
    }
    return out;
}

}  // namespace gwm::wm
