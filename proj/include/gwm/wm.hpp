#pragma once
// Toy action-conditioned diffusion transformer over simulator clips: fixed
// pooling frame codec, DiT blocks with per-block bias-free action injection
// and prompt cross-attention, hand-rolled reverse-mode gradients, DDPM-style
// training, subsequence ancestral sampling, cross-attention transfer, and the
// pathway-energy / direction-similarity diagnostics.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gwm/annotate.hpp"
#include "gwm/codec.hpp"
#include "gwm/frames.hpp"
#include "gwm/rng.hpp"
#include "gwm/tensor.hpp"

namespace gwm::wm {

struct ModelConfig {
    int num_blocks = 4;
    int channels = 64;         // C
    int heads = 4;
    int latent_h = 6;          // h (48 / spatial_factor)
    int latent_w = 8;          // w (64 / spatial_factor)
    int latent_frames = 11;    // f (clip frames / temporal_factor)
    int buttons = 10;          // K
    int prompt_vocab = 64;
    int prompt_dim = 64;
    int max_prompt_tokens = 48;
    int ffn_mult = 4;
    int diffusion_steps = 50;  // N training noise levels
    int sample_steps = 30;     // reverse steps at sampling
    int temporal_factor = 4;   // T_v
    int spatial_factor = 8;

    int tokens() const { return latent_frames * latent_h * latent_w; }   // L
    int frame_tokens() const { return latent_h * latent_w; }
    int head_dim() const { return channels / heads; }
    int clip_frames() const { return latent_frames * temporal_factor; }
    bool operator==(const ModelConfig&) const = default;
};

// ------------------------------------------------------------ frame codec --
// Average-pool T x (48x64) RGB frames by temporal_factor and spatial_factor,
// then lift the 3 colour channels to C with a fixed seeded orthonormal map.
// Result shape [f, h, w, C]; throws when T is not divisible by the factor.
Tensor encode_frames(const std::vector<Frame>& frames, const ModelConfig& cfg);

// Nearest-neighbour inverse; pixel values clamped to [0,255].
// [f, h, w, C] -> f * temporal_factor frames.
std::vector<Frame> decode_latent(const Tensor& latent, const ModelConfig& cfg);

// ------------------------------------------------------- prompt tokenizer --
// Closed-vocabulary ids: 0 reserved for the vanilla marker, 1..3 strategy
// categories, then active and passive tags; vanilla words hash into the
// remaining id range. Strategy sequences always start with the category id.
inline constexpr int k_tok_vanilla_marker = 0;
inline constexpr int k_tok_category_base = 1;
inline constexpr int k_tok_active_base = 4;
inline constexpr int k_tok_passive_base = 13;
inline constexpr int k_tok_word_base = 21;
std::vector<int> tokenize_prompt(const annotate::NpcPrompt& prompt,
                                 const ModelConfig& cfg);
std::vector<int> tokenize_vanilla(const std::string& text, const ModelConfig& cfg);

// Pool a player action table to [f, K] rows of usable-bit features.
// Row 0 is cleared: the clean init frame carries no action conditioning.
Tensor pooled_player_actions(const codec::ActionTable& table, const ModelConfig& cfg);

// -------------------------------------------------------------- the model --
struct Param {
    std::string name;
    Tensor t;  // t.grad allocated for trainable params
    bool trainable = true;
};

// Per-block activations captured by forward for backward and diagnostics.
struct BlockTrace {
    Tensor x_in;        // block input, pre action bias [L,C]
    Tensor bias_rows;   // E_l(a) per latent frame [f,C] (empty when skipped)
    Tensor x_bias;      // after action add [L,C]
    Tensor ln1_hat;     // normalized inputs and per-token 1/std
    std::vector<double> ln1_rstd;
    Tensor q, k, v;     // split heads [H, L, d]
    Tensor sa_probs;    // [H, L, L]
    Tensor sa_cat;      // merged heads [L, C]
    Tensor sa_out;      // residual contribution of self-attention [L,C]
    Tensor x_sa;
    Tensor ln2_hat;
    std::vector<double> ln2_rstd;
    Tensor ca_q;        // [H, L, d]
    Tensor ca_k, ca_v;  // [H, P, d]
    Tensor ca_probs;    // [H, L, P]
    Tensor ca_cat;      // [L, C]
    Tensor ca_out;      // residual contribution of cross-attention [L,C]
    Tensor x_ca;
    Tensor ln3_hat;
    std::vector<double> ln3_rstd;
    Tensor ffn_pre;     // [L, 4C] pre-activation
    Tensor ffn_act;     // [L, 4C]
    Tensor ffn_out;     // residual contribution of the ffn [L,C]
    Tensor x_out;
};

struct Workspace {
    Tensor x0;                  // tokens + positional + time embedding
    std::vector<double> t_sin;  // sinusoidal timestep vector [C]
    std::vector<int> prompt;    // token ids
    Tensor prompt_x;            // gathered embeddings [P, prompt_dim]
    Tensor pooled;              // action rows [f,K] when the pathway is active
    std::vector<BlockTrace> blocks;
    Tensor lnf_hat;
    std::vector<double> lnf_rstd;
    Tensor pred;                // [L, C]
    bool has_action = false;
};

class Model {
  public:
    Model(ModelConfig cfg, uint64_t seed);

    const ModelConfig& cfg() const { return cfg_; }
    uint64_t init_seed() const { return seed_; }

    std::vector<Param>& params() { return params_; }
    const std::vector<Param>& params() const { return params_; }
    Param& param(const std::string& name);
    const Param& param(const std::string& name) const;

    // x: [L, C] latent tokens; t: noise level; pooled: [f, K] action rows or
    // null to skip the action pathway entirely; prompt: non-empty token ids.
    Tensor forward(const Tensor& x, int t, const Tensor* pooled,
                   const std::vector<int>& prompt, Workspace* ws) const;

    // Accumulates parameter gradients for the captured pass; returns d(x).
    Tensor backward(const Tensor& dpred, const Workspace& ws);

    void zero_grads();

  private:
    ModelConfig cfg_;
    uint64_t seed_ = 0;
    std::vector<Param> params_;
};

// --------------------------------------------------------------- training --
struct DiffusionSchedule {
    std::vector<double> beta, alpha_bar;  // per noise level

    // Linear betas from b0 to b1 over n levels (defaults in pipeline config).
    static DiffusionSchedule linear(int n, double b0, double b1);
    int levels() const { return int(beta.size()); }
};

struct TrainItem {
    Tensor latent;            // [f,h,w,C] clip latent (viewed as [L,C])
    Tensor pooled;            // [f,K]
    std::vector<int> prompt;  // token ids
};

struct AdamOpt {
    double lr = 3e-4, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double clip_norm = 1.0;
    long step = 0;
    std::vector<std::vector<double>> m, v;  // per trainable param, lazily sized
};

// Mean noise-prediction MSE over all tokens except the clean frame-0 rows;
// noise level and noise drawn from noise_seed so losses are replayable. When
// accumulate_grads, parameter gradients are added (not reset).
double item_loss(Model& model, const DiffusionSchedule& sched, const TrainItem& item,
                 uint64_t noise_seed, bool accumulate_grads);

// Sum-squared-error twin of item_loss used by the finite-difference check
// (larger per-coordinate gradients keep the numerics honest).
double probe_loss(Model& model, const DiffusionSchedule& sched, const TrainItem& item,
                  uint64_t noise_seed, bool accumulate_grads);

// One optimizer step over the batch; returns the mean loss. Throws
// std::runtime_error when the loss is not finite. Deterministic given rng.
double training_step(Model& model, const DiffusionSchedule& sched,
                     const std::vector<TrainItem>& batch, AdamOpt& opt, Rng& rng);

// --------------------------------------------------------------- sampling --
// actions must hold (f-1)*temporal_factor rows (the frames to generate);
// returns 1 + (f-1)*temporal_factor frames, the untouched init frame first.
// Deterministic per seed.
std::vector<Frame> sample_video(Model& model, const DiffusionSchedule& sched,
                                const Frame& init_frame,
                                const codec::ActionTable& actions,
                                const std::vector<int>& prompt_tokens,
                                uint64_t seed);

// ------------------------------------------------------------- checkpoint --
void save_checkpoint(const std::string& path, const Model& model,
                     uint64_t train_seed, uint64_t train_steps);
struct CheckpointInfo {
    ModelConfig cfg;
    uint64_t train_seed = 0;
    uint64_t train_steps = 0;
};
// Throws std::runtime_error on bad magic/version/shape; when expect_cfg is
// given the stored config must equal it.
Model load_checkpoint(const std::string& path, CheckpointInfo* info = nullptr,
                      const ModelConfig* expect_cfg = nullptr);

void write_loss_csv(const std::string& path,
                    const std::vector<std::pair<long, double>>& rows);

// ---------------------------------------------------------------- analysis --
// Copy of `target` whose per-block cross-attention projections (ca_q, ca_k,
// ca_v, ca_o) are taken bit-exactly from `source`; everything else keeps the
// target's bits. Throws std::invalid_argument naming the first mismatching
// block when shapes disagree.
Model swap_cross_attention(const Model& target, const Model& source);

struct PathwayEnergy {
    double sa = 0.0, ca = 0.0, ffn = 0.0;  // squared Frobenius norms
    double rho = 0.0;                      // ca / (sa + ca + ffn)
    bool degenerate = false;               // all three norms zero
};
PathwayEnergy pathway_energy(const Workspace& ws, int block);

struct DirectionSimilarity {
    double cosine = 0.0;     // token-averaged
    double delta_norm = 0.0; // ||a - b||_F
    int zero_tokens = 0;     // excluded from the average
};
DirectionSimilarity ca_direction_similarity(const Tensor& a, const Tensor& b);

struct GradCheck {
    double max_rel_err = 0.0;
    std::string worst_coord;
    bool finite = true;
};
// Central differences (step 1e-5) against the analytic gradients of
// probe_loss on >= coords_per_group coordinates of every parameter group.
GradCheck gradient_check(Model& model, const DiffusionSchedule& sched,
                         const TrainItem& probe, int coords_per_group,
                         uint64_t seed);
// Finite-difference derivative of probe_loss wrt one named coordinate.
double fd_probe(Model& model, const DiffusionSchedule& sched, const TrainItem& probe,
                const std::string& param, long index, uint64_t seed);

}  // namespace gwm::wm
