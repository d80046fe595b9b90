// Noise schedule, denoising objective, optimizer step, and the ancestral
// subsequence sampler.

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "gwm/wm.hpp"

namespace gwm::wm {
namespace {

// Shared core of item_loss / probe_loss.  The probe variant uses the
// unnormalized sum of squares: its per-coordinate gradients are O(1), which
// keeps central differences well clear of cancellation noise.
double masked_loss(Model& model, const DiffusionSchedule& sched, const TrainItem& item,
                   uint64_t noise_seed, bool accumulate_grads, bool mean) {
    const ModelConfig& cfg = model.cfg();
    const int L = cfg.tokens();
    const int c = cfg.channels;
    const int ft = cfg.frame_tokens();
    if (item.latent.numel() != long(L) * c)
        throw std::invalid_argument("item_loss: latent shape mismatch");
    if (L <= ft) throw std::invalid_argument("item_loss: no prediction targets");

    Rng rng(noise_seed);
    const int t = int(rng.next_below(uint64_t(sched.levels())));
    const double ab = sched.alpha_bar[size_t(t)];
    const double sig_a = std::sqrt(ab);
    const double sig_n = std::sqrt(1.0 - ab);

    Tensor noised({L, c}), eps({L, c});
    for (int i = 0; i < L; ++i) {
        const bool clean = i < ft;  // frame 0 is the init conditioning, never noised
        for (int j = 0; j < c; ++j) {
            const size_t idx = size_t(i) * size_t(c) + size_t(j);
            const double e = rng.next_gaussian();
            eps.data[idx] = e;
            noised.data[idx] =
                clean ? item.latent.data[idx] : sig_a * item.latent.data[idx] + sig_n * e;
        }
    }

    Workspace ws;
    model.forward(noised, t, &item.pooled, item.prompt, &ws);

    const double denom = mean ? double(long(L - ft) * c) : 1.0;
    double loss = 0.0;
    Tensor dpred({L, c});  // frame-0 rows stay zero: masked out of the objective
    for (int i = ft; i < L; ++i)
        for (int j = 0; j < c; ++j) {
            const size_t idx = size_t(i) * size_t(c) + size_t(j);
            const double diff = ws.pred.data[idx] - eps.data[idx];
            loss += diff * diff;
            dpred.data[idx] = 2.0 * diff / denom;
        }
    loss /= denom;
    if (accumulate_grads) model.backward(dpred, ws);
    return loss;
}

}  // namespace

DiffusionSchedule DiffusionSchedule::linear(int n, double b0, double b1) {
    if (n < 1) throw std::invalid_argument("schedule: need at least one level");
    if (!(b0 > 0.0) || b1 < b0 || b1 >= 1.0)
        throw std::invalid_argument("schedule: betas must satisfy 0 < b0 <= b1 < 1");
    DiffusionSchedule s;
    s.beta.resize(size_t(n));
    s.alpha_bar.resize(size_t(n));
    double ab = 1.0;
    for (int i = 0; i < n; ++i) {
        s.beta[size_t(i)] = (n == 1) ? b0 : b0 + (b1 - b0) * double(i) / double(n - 1);
        ab *= 1.0 - s.beta[size_t(i)];
        s.alpha_bar[size_t(i)] = ab;
    }
    return s;
}

double item_loss(Model& model, const DiffusionSchedule& sched, const TrainItem& item,
                 uint64_t noise_seed, bool accumulate_grads) {
    return masked_loss(model, sched, item, noise_seed, accumulate_grads, /*mean=*/true);
}

double probe_loss(Model& model, const DiffusionSchedule& sched, const TrainItem& item,
                  uint64_t noise_seed, bool accumulate_grads) {
    return masked_loss(model, sched, item, noise_seed, accumulate_grads, /*mean=*/false);
}

double training_step(Model& model, const DiffusionSchedule& sched,
                     const std::vector<TrainItem>& batch, AdamOpt& opt, Rng& rng) {
    if (batch.empty()) throw std::invalid_argument("training_step: empty batch");

    model.zero_grads();
    double loss = 0.0;
    for (const TrainItem& item : batch)
        loss += item_loss(model, sched, item, rng.next_u64(), /*accumulate_grads=*/true);
    loss /= double(batch.size());
    if (!std::isfinite(loss)) throw std::runtime_error("training_step: non-finite loss");

    // Average the accumulated gradients, then clip by global norm.
    const double inv_b = 1.0 / double(batch.size());
    double n2 = 0.0;
    for (Param& p : model.params()) {
        if (!p.trainable) continue;
        for (double& g : p.t.grad) g *= inv_b;
        n2 += sq_norm(p.t.grad.data(), p.t.grad.size());
    }
    if (!std::isfinite(n2)) throw std::runtime_error("training_step: non-finite gradient");
    double scale = 1.0;
    if (opt.clip_norm > 0.0 && n2 > opt.clip_norm * opt.clip_norm)
        scale = opt.clip_norm / std::sqrt(n2);

    if (opt.m.empty()) {
        for (const Param& p : model.params()) {
            if (!p.trainable) continue;
            opt.m.emplace_back(p.t.data.size(), 0.0);
            opt.v.emplace_back(p.t.data.size(), 0.0);
        }
    }

    opt.step += 1;
    const double bc1 = 1.0 - std::pow(opt.beta1, double(opt.step));
    const double bc2 = 1.0 - std::pow(opt.beta2, double(opt.step));
    size_t ti = 0;
    for (Param& p : model.params()) {
        if (!p.trainable) continue;
        if (ti >= opt.m.size() || opt.m[ti].size() != p.t.data.size())
            throw std::invalid_argument("training_step: optimizer state belongs to another model");
        std::vector<double>& m = opt.m[ti];
        std::vector<double>& v = opt.v[ti];
        ++ti;
        for (size_t i = 0; i < p.t.data.size(); ++i) {
            const double g = p.t.grad[i] * scale;
            m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g;
            v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g * g;
            p.t.data[i] -= opt.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + opt.eps);
        }
    }
    return loss;
}

std::vector<Frame> sample_video(Model& model, const DiffusionSchedule& sched,
                                const Frame& init_frame, const codec::ActionTable& actions,
                                const std::vector<int>& prompt_tokens, uint64_t seed) {
    const ModelConfig& cfg = model.cfg();
    const int L = cfg.tokens();
    const int c = cfg.channels;
    const int ft = cfg.frame_tokens();
    const int want = (cfg.latent_frames - 1) * cfg.temporal_factor;
    if (int(actions.frames()) != want)
        throw std::invalid_argument("sample_video: expected " + std::to_string(want) +
                                    " action rows, got " + std::to_string(actions.frames()));

    // The init frame occupies latent frame 0, so its action bin is zero-padded.
    codec::ActionTable padded;
    padded.rows.assign(size_t(cfg.temporal_factor), codec::ButtonVector{});
    padded.rows.insert(padded.rows.end(), actions.rows.begin(), actions.rows.end());
    const Tensor pooled = pooled_player_actions(padded, cfg);

    const std::vector<Frame> init_clip(size_t(cfg.temporal_factor), init_frame);
    const Tensor init_lat = encode_frames(init_clip, cfg);  // [1, h, w, C]

    Rng rng(derive_seed(seed, "sample"));
    Tensor x({L, c});
    std::memcpy(x.data.data(), init_lat.data.data(), sizeof(double) * size_t(ft) * size_t(c));
    for (long i = long(ft) * c; i < long(L) * c; ++i) x.data[size_t(i)] = rng.next_gaussian();

    // Descending subsequence of noise levels, N-1 ... 0.
    const int n = sched.levels();
    const int steps = std::min(cfg.sample_steps, n);
    std::vector<int> tau(static_cast<size_t>(steps));
    for (int j = 0; j < steps; ++j)
        tau[size_t(j)] = (steps == 1)
                             ? (n - 1)
                             : int(std::lround(double(n - 1) * double(steps - 1 - j) /
                                               double(steps - 1)));

    Workspace ws;
    for (int j = 0; j < steps; ++j) {
        const int t = tau[size_t(j)];
        const double ab_t = sched.alpha_bar[size_t(t)];
        const double inv_sa = 1.0 / std::sqrt(ab_t);
        const double nb = std::sqrt(1.0 - ab_t);
        const Tensor& pred = model.forward(x, t, &pooled, prompt_tokens, &ws);

        if (j + 1 == steps) {
            // Last step: emit the clean estimate.
            for (long i = long(ft) * c; i < long(L) * c; ++i)
                x.data[size_t(i)] = (x.data[size_t(i)] - nb * pred.data[size_t(i)]) * inv_sa;
            break;
        }
        const double ab_p = sched.alpha_bar[size_t(tau[size_t(j + 1)])];
        const double var = (1.0 - ab_p) / (1.0 - ab_t) * (1.0 - ab_t / ab_p);
        const double c_x0 = std::sqrt(ab_p);
        const double c_eps = std::sqrt(std::max(0.0, 1.0 - ab_p - var));
        const double c_z = std::sqrt(std::max(0.0, var));
        for (long i = long(ft) * c; i < long(L) * c; ++i) {
            const double e = pred.data[size_t(i)];
            const double x0 = (x.data[size_t(i)] - nb * e) * inv_sa;
            x.data[size_t(i)] = c_x0 * x0 + c_eps * e + c_z * rng.next_gaussian();
        }
    }

    Tensor rest({cfg.latent_frames - 1, cfg.latent_h, cfg.latent_w, c});
    std::memcpy(rest.data.data(), x.data.data() + size_t(ft) * size_t(c),
                sizeof(double) * rest.data.size());
    std::vector<Frame> decoded = decode_latent(rest, cfg);

    std::vector<Frame> out;
    out.reserve(1 + decoded.size());
    out.push_back(init_frame);
    for (Frame& fr : decoded) out.push_back(std::move(fr));
    return out;
}

}  // namespace gwm::wm
