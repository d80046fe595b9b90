// "GWMC" v1 checkpoint: config echo, seeds, then raw f64 parameter data in
// construction order.  Everything little-endian.

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "gwm/wm.hpp"

namespace gwm::wm {
namespace {

void put_u32(std::ostream& os, uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = char((v >> (8 * i)) & 0xff);
    os.write(b, 4);
}

void put_u64(std::ostream& os, uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = char((v >> (8 * i)) & 0xff);
    os.write(b, 8);
}

void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<uint64_t>(v)); }

uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("checkpoint: truncated");
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(b[i]) << (8 * i);
    return v;
}

uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("checkpoint: truncated");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

void put_cfg(std::ostream& os, const ModelConfig& c) {
    for (const int v : {c.num_blocks, c.channels, c.heads, c.latent_h, c.latent_w,
                        c.latent_frames, c.buttons, c.prompt_vocab, c.prompt_dim,
                        c.max_prompt_tokens, c.ffn_mult, c.diffusion_steps, c.sample_steps,
                        c.temporal_factor, c.spatial_factor})
        put_u32(os, uint32_t(v));
}

ModelConfig get_cfg(std::istream& is) {
    ModelConfig c;
    for (int* const f : {&c.num_blocks, &c.channels, &c.heads, &c.latent_h, &c.latent_w,
                         &c.latent_frames, &c.buttons, &c.prompt_vocab, &c.prompt_dim,
                         &c.max_prompt_tokens, &c.ffn_mult, &c.diffusion_steps, &c.sample_steps,
                         &c.temporal_factor, &c.spatial_factor})
        *f = int(int32_t(get_u32(is)));
    return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model, uint64_t train_seed,
                     uint64_t train_steps) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
    os.write("GWMC", 4);
    put_u32(os, 1);
    put_cfg(os, model.cfg());
    put_u64(os, model.init_seed());
    put_u64(os, train_seed);
    put_u64(os, train_steps);
    for (const Param& p : model.params())
        for (const double v : p.t.data) put_f64(os, v);
    os.flush();
    if (!os) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

Model load_checkpoint(const std::string& path, CheckpointInfo* info,
                      const ModelConfig* expect_cfg) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "GWMC", 4) != 0)
        throw std::runtime_error("checkpoint: bad magic");
    const uint32_t version = get_u32(is);
    if (version != 1)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    const ModelConfig cfg = get_cfg(is);
    const uint64_t init_seed = get_u64(is);
    const uint64_t train_seed = get_u64(is);
    const uint64_t train_steps = get_u64(is);
    if (expect_cfg && !(cfg == *expect_cfg))
        throw std::runtime_error("checkpoint: config mismatch");

    Model model(cfg, init_seed);
    for (Param& p : model.params())
        for (double& v : p.t.data) v = get_f64(is);
    is.peek();
    if (!is.eof()) throw std::runtime_error("checkpoint: trailing bytes");
    if (info) *info = CheckpointInfo{cfg, train_seed, train_steps};
    return model;
}

void write_loss_csv(const std::string& path,
                    const std::vector<std::pair<long, double>>& rows) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("loss csv: cannot open '" + path + "'");
    os << "step,loss\n" << std::setprecision(17);
    for (const auto& [step, loss] : rows) os << step << "," << loss << "\n";
    os.flush();
    if (!os) throw std::runtime_error("loss csv: write failed for '" + path + "'");
}

}  // namespace gwm::wm
