// Parameter construction, forward pass with activation capture, and the
// hand-rolled reverse-mode backward pass.

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "gwm/wm.hpp"

namespace gwm::wm {
namespace {

constexpr double k_ln_eps = 1e-5;
constexpr double k_gelu_c = 0.7978845608028654;  // sqrt(2/pi)
constexpr double k_gelu_a = 0.044715;

double gelu(double x) {
    return 0.5 * x * (1.0 + std::tanh(k_gelu_c * (x + k_gelu_a * x * x * x)));
}

double gelu_grad(double x) {
    const double x2 = x * x;
    const double t = std::tanh(k_gelu_c * (x + k_gelu_a * x * x2));
    const double du = k_gelu_c * (1.0 + 3.0 * k_gelu_a * x2);
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
}

// y = xhat * g + b per row; xhat and 1/std captured for backward.
void ln_forward(const double* x, const double* g, const double* b, int rows, int c, double* y,
                double* xhat, std::vector<double>& rstd) {
    rstd.assign(size_t(rows), 0.0);
    for (int i = 0; i < rows; ++i) {
        const double* xi = x + size_t(i) * size_t(c);
        double mu = 0.0;
        for (int j = 0; j < c; ++j) mu += xi[j];
        mu /= double(c);
        double var = 0.0;
        for (int j = 0; j < c; ++j) {
            const double dv = xi[j] - mu;
            var += dv * dv;
        }
        const double rs = 1.0 / std::sqrt(var / double(c) + k_ln_eps);
        rstd[size_t(i)] = rs;
        for (int j = 0; j < c; ++j) {
            const double xh = (xi[j] - mu) * rs;
            xhat[size_t(i) * size_t(c) + size_t(j)] = xh;
            y[size_t(i) * size_t(c) + size_t(j)] = xh * g[j] + b[j];
        }
    }
}

// dx accumulated (residual paths add into the same buffer); dg/db accumulated.
void ln_backward(const double* dy, const double* xhat, const std::vector<double>& rstd,
                 const double* g, int rows, int c, double* dx_acc, double* dg, double* db) {
    for (int i = 0; i < rows; ++i) {
        const double* dyi = dy + size_t(i) * size_t(c);
        const double* xh = xhat + size_t(i) * size_t(c);
        double m1 = 0.0, m2 = 0.0;
        for (int j = 0; j < c; ++j) {
            const double dxh = dyi[j] * g[j];
            m1 += dxh;
            m2 += dxh * xh[j];
        }
        m1 /= double(c);
        m2 /= double(c);
        double* dxi = dx_acc + size_t(i) * size_t(c);
        for (int j = 0; j < c; ++j) {
            dxi[j] += rstd[size_t(i)] * (dyi[j] * g[j] - m1 - xh[j] * m2);
            dg[j] += dyi[j] * xh[j];
            db[j] += dyi[j];
        }
    }
}

// Rebuild the post-gain LayerNorm output from the captured xhat.
Tensor ln_output(const Tensor& xhat, const double* g, const double* b, int rows, int c) {
    Tensor y({rows, c});
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < c; ++j)
            y.data[size_t(i) * size_t(c) + size_t(j)] =
                xhat.data[size_t(i) * size_t(c) + size_t(j)] * g[j] + b[j];
    return y;
}

void softmax_rows(double* s, int rows, int cols) {
    for (int i = 0; i < rows; ++i) {
        double* si = s + size_t(i) * size_t(cols);
        double m = si[0];
        for (int j = 1; j < cols; ++j) m = std::max(m, si[j]);
        double sum = 0.0;
        for (int j = 0; j < cols; ++j) {
            si[j] = std::exp(si[j] - m);
            sum += si[j];
        }
        const double inv = 1.0 / sum;
        for (int j = 0; j < cols; ++j) si[j] *= inv;
    }
}

// [rows, heads*d] <-> [heads, rows, d]
void split_heads(const double* x, double* out, int rows, int heads, int d) {
    for (int h = 0; h < heads; ++h)
        for (int i = 0; i < rows; ++i)
            std::memcpy(out + (size_t(h) * size_t(rows) + size_t(i)) * size_t(d),
                        x + size_t(i) * size_t(heads) * size_t(d) + size_t(h) * size_t(d),
                        sizeof(double) * size_t(d));
}

void merge_heads(const double* x, double* out, int rows, int heads, int d) {
    for (int h = 0; h < heads; ++h)
        for (int i = 0; i < rows; ++i)
            std::memcpy(out + size_t(i) * size_t(heads) * size_t(d) + size_t(h) * size_t(d),
                        x + (size_t(h) * size_t(rows) + size_t(i)) * size_t(d),
                        sizeof(double) * size_t(d));
}

void colsum_acc(const double* x, double* out, int rows, int cols) {
    for (int i = 0; i < rows; ++i) {
        const double* xi = x + size_t(i) * size_t(cols);
        for (int j = 0; j < cols; ++j) out[j] += xi[j];
    }
}

enum class Init { uniform, ones, zeros, unit_rows };

}  // namespace

Model::Model(ModelConfig cfg, uint64_t seed) : cfg_(cfg), seed_(seed) {
    if (cfg_.heads < 1 || cfg_.channels % cfg_.heads != 0)
        throw std::invalid_argument("model: channels not divisible by heads");
    if (cfg_.channels % 2 != 0)
        throw std::invalid_argument("model: channels must be even for the sinusoidal embedding");
    if (cfg_.latent_frames < 2)
        throw std::invalid_argument("model: need at least two latent frames");
    if (cfg_.prompt_vocab <= k_tok_word_base)
        throw std::invalid_argument("model: prompt vocabulary too small");

    const int c = cfg_.channels;
    const int pd = cfg_.prompt_dim;
    const int hidden = c * cfg_.ffn_mult;

    const auto add = [&](std::string name, std::vector<int> shape, Init init,
                         bool trainable = true) {
        Param p;
        p.name = std::move(name);
        p.t = Tensor(std::move(shape));
        p.trainable = trainable;
        Rng rng(derive_seed(seed_, p.name));
        switch (init) {
            case Init::uniform: {
                const double s = 1.0 / std::sqrt(double(p.t.dim(0)));
                for (double& v : p.t.data) v = (2.0 * rng.next_unit() - 1.0) * s;
                break;
            }
            case Init::ones:
                p.t.fill(1.0);
                break;
            case Init::zeros:
                break;
            case Init::unit_rows: {
                const int dim = p.t.dim(1);
                for (int r = 0; r < p.t.dim(0); ++r) {
                    double* row = p.t.data.data() + size_t(r) * size_t(dim);
                    double n2 = 0.0;
                    for (int j = 0; j < dim; ++j) {
                        row[j] = rng.next_gaussian();
                        n2 += row[j] * row[j];
                    }
                    const double inv = 1.0 / std::sqrt(std::max(n2, 1e-12));
                    for (int j = 0; j < dim; ++j) row[j] *= inv;
                }
                break;
            }
        }
        if (p.trainable) p.t.ensure_grad();
        params_.push_back(std::move(p));
    };

    add("pos_emb", {cfg_.tokens(), c}, Init::uniform);
    add("time_w", {c, c}, Init::uniform);
    add("time_b", {c}, Init::zeros);
    // Frozen: cross-attention transfer relies on both games reading prompts
    // through the same embedding table.
    add("prompt_emb", {cfg_.prompt_vocab, pd}, Init::unit_rows, /*trainable=*/false);
    for (int l = 0; l < cfg_.num_blocks; ++l) {
        const std::string pre = "block" + std::to_string(l) + ".";
        add(pre + "sa_ln_g", {c}, Init::ones);
        add(pre + "sa_ln_b", {c}, Init::zeros);
        add(pre + "sa_q", {c, c}, Init::uniform);
        add(pre + "sa_k", {c, c}, Init::uniform);
        add(pre + "sa_v", {c, c}, Init::uniform);
        add(pre + "sa_o", {c, c}, Init::uniform);
        add(pre + "ca_ln_g", {c}, Init::ones);
        add(pre + "ca_ln_b", {c}, Init::zeros);
        add(pre + "ca_q", {c, c}, Init::uniform);
        add(pre + "ca_k", {pd, c}, Init::uniform);
        add(pre + "ca_v", {pd, c}, Init::uniform);
        add(pre + "ca_o", {c, c}, Init::uniform);
        add(pre + "ffn_ln_g", {c}, Init::ones);
        add(pre + "ffn_ln_b", {c}, Init::zeros);
        add(pre + "ffn_w1", {c, hidden}, Init::uniform);
        add(pre + "ffn_b1", {hidden}, Init::zeros);
        add(pre + "ffn_w2", {hidden, c}, Init::uniform);
        add(pre + "ffn_b2", {c}, Init::zeros);
        add(pre + "act_e", {cfg_.buttons, c}, Init::zeros);  // bias-free, zero start
    }
    add("final_ln_g", {c}, Init::ones);
    add("final_ln_b", {c}, Init::zeros);
    add("head_w", {c, c}, Init::uniform);
    add("head_b", {c}, Init::zeros);
}

Param& Model::param(const std::string& name) {
    for (Param& p : params_)
        if (p.name == name) return p;
    throw std::out_of_range("model: no parameter named '" + name + "'");
}

const Param& Model::param(const std::string& name) const {
    for (const Param& p : params_)
        if (p.name == name) return p;
    throw std::out_of_range("model: no parameter named '" + name + "'");
}

void Model::zero_grads() {
    for (Param& p : params_)
        if (p.trainable) p.t.zero_grad();
}

Tensor Model::forward(const Tensor& x, int t, const Tensor* pooled,
                      const std::vector<int>& prompt, Workspace* ws) const {
    const int L = cfg_.tokens();
    const int c = cfg_.channels;
    const int H = cfg_.heads;
    const int d = cfg_.head_dim();
    const int ft = cfg_.frame_tokens();
    const int pd = cfg_.prompt_dim;
    const int hidden = c * cfg_.ffn_mult;
    const double inv_sqrt_d = 1.0 / std::sqrt(double(d));

    if (x.numel() != long(L) * c) throw std::invalid_argument("forward: latent shape mismatch");
    if (t < 0 || t >= cfg_.diffusion_steps)
        throw std::invalid_argument("forward: noise level out of range");
    if (prompt.empty()) throw std::invalid_argument("forward: empty prompt");
    for (const int id : prompt)
        if (id < 0 || id >= cfg_.prompt_vocab)
            throw std::invalid_argument("forward: prompt token out of vocabulary");
    if (pooled && (pooled->shape.size() != 2 || pooled->dim(0) != cfg_.latent_frames ||
                   pooled->dim(1) != cfg_.buttons))
        throw std::invalid_argument("forward: pooled actions must be [latent_frames, buttons]");

    Workspace local;
    Workspace& w = ws ? *ws : local;
    w = Workspace{};
    w.prompt = prompt;
    w.has_action = pooled != nullptr;
    if (pooled) w.pooled = *pooled;

    const int P = int(prompt.size());
    const Tensor& pe = param("prompt_emb").t;
    w.prompt_x = Tensor({P, pd});
    for (int i = 0; i < P; ++i)
        std::memcpy(w.prompt_x.data.data() + size_t(i) * size_t(pd),
                    pe.data.data() + size_t(prompt[size_t(i)]) * size_t(pd),
                    sizeof(double) * size_t(pd));

    // Sinusoidal timestep vector through a learned linear, added to all tokens.
    w.t_sin.assign(size_t(c), 0.0);
    const int half = c / 2;
    for (int i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * double(i) / double(half));
        w.t_sin[size_t(i)] = std::sin(double(t) * freq);
        w.t_sin[size_t(half + i)] = std::cos(double(t) * freq);
    }
    std::vector<double> temb(size_t(c), 0.0);
    mm_nn(w.t_sin.data(), param("time_w").t.data.data(), temb.data(), 1, c, c);
    const Tensor& time_b = param("time_b").t;
    for (int j = 0; j < c; ++j) temb[size_t(j)] += time_b.data[size_t(j)];

    const Tensor& pos = param("pos_emb").t;
    w.x0 = Tensor({L, c});
    for (int i = 0; i < L; ++i)
        for (int j = 0; j < c; ++j) {
            const size_t idx = size_t(i) * size_t(c) + size_t(j);
            w.x0.data[idx] = x.data[idx] + pos.data[idx] + temb[size_t(j)];
        }

    w.blocks.assign(size_t(cfg_.num_blocks), BlockTrace{});
    const Tensor* cur = &w.x0;
    for (int l = 0; l < cfg_.num_blocks; ++l) {
        BlockTrace& b = w.blocks[size_t(l)];
        const std::string pre = "block" + std::to_string(l) + ".";
        b.x_in = *cur;

        // Action bias: one row per latent frame, broadcast across its tokens.
        b.x_bias = b.x_in;
        if (pooled) {
            b.bias_rows = Tensor({cfg_.latent_frames, c});
            mm_nn(pooled->data.data(), param(pre + "act_e").t.data.data(),
                  b.bias_rows.data.data(), cfg_.latent_frames, cfg_.buttons, c);
            for (int i = 0; i < L; ++i) {
                const double* row = b.bias_rows.data.data() + size_t(i / ft) * size_t(c);
                double* xi = b.x_bias.data.data() + size_t(i) * size_t(c);
                for (int j = 0; j < c; ++j) xi[j] += row[j];
            }
        }

        // Self-attention.
        b.ln1_hat = Tensor({L, c});
        Tensor ln1({L, c});
        ln_forward(b.x_bias.data.data(), param(pre + "sa_ln_g").t.data.data(),
                   param(pre + "sa_ln_b").t.data.data(), L, c, ln1.data.data(),
                   b.ln1_hat.data.data(), b.ln1_rstd);
        Tensor qf({L, c}), kf({L, c}), vf({L, c});
        mm_nn(ln1.data.data(), param(pre + "sa_q").t.data.data(), qf.data.data(), L, c, c);
        mm_nn(ln1.data.data(), param(pre + "sa_k").t.data.data(), kf.data.data(), L, c, c);
        mm_nn(ln1.data.data(), param(pre + "sa_v").t.data.data(), vf.data.data(), L, c, c);
        b.q = Tensor({H, L, d});
        b.k = Tensor({H, L, d});
        b.v = Tensor({H, L, d});
        split_heads(qf.data.data(), b.q.data.data(), L, H, d);
        split_heads(kf.data.data(), b.k.data.data(), L, H, d);
        split_heads(vf.data.data(), b.v.data.data(), L, H, d);
        b.sa_probs = Tensor({H, L, L});
        Tensor oh({H, L, d});
        for (int h = 0; h < H; ++h) {
            double* s = b.sa_probs.data.data() + size_t(h) * size_t(L) * size_t(L);
            const double* qh = b.q.data.data() + size_t(h) * size_t(L) * size_t(d);
            const double* kh = b.k.data.data() + size_t(h) * size_t(L) * size_t(d);
            mm_nt(qh, kh, s, L, d, L);
            for (long i = 0; i < long(L) * L; ++i) s[i] *= inv_sqrt_d;
            softmax_rows(s, L, L);
            mm_nn(s, b.v.data.data() + size_t(h) * size_t(L) * size_t(d),
                  oh.data.data() + size_t(h) * size_t(L) * size_t(d), L, L, d);
        }
        b.sa_cat = Tensor({L, c});
        merge_heads(oh.data.data(), b.sa_cat.data.data(), L, H, d);
        b.sa_out = Tensor({L, c});
        mm_nn(b.sa_cat.data.data(), param(pre + "sa_o").t.data.data(), b.sa_out.data.data(), L, c,
              c);
        b.x_sa = b.x_bias;
        for (size_t i = 0; i < b.x_sa.data.size(); ++i) b.x_sa.data[i] += b.sa_out.data[i];

        // Cross-attention against the prompt rows.
        b.ln2_hat = Tensor({L, c});
        Tensor ln2({L, c});
        ln_forward(b.x_sa.data.data(), param(pre + "ca_ln_g").t.data.data(),
                   param(pre + "ca_ln_b").t.data.data(), L, c, ln2.data.data(),
                   b.ln2_hat.data.data(), b.ln2_rstd);
        Tensor cqf({L, c}), ckf({P, c}), cvf({P, c});
        mm_nn(ln2.data.data(), param(pre + "ca_q").t.data.data(), cqf.data.data(), L, c, c);
        mm_nn(w.prompt_x.data.data(), param(pre + "ca_k").t.data.data(), ckf.data.data(), P, pd,
              c);
        mm_nn(w.prompt_x.data.data(), param(pre + "ca_v").t.data.data(), cvf.data.data(), P, pd,
              c);
        b.ca_q = Tensor({H, L, d});
        b.ca_k = Tensor({H, P, d});
        b.ca_v = Tensor({H, P, d});
        split_heads(cqf.data.data(), b.ca_q.data.data(), L, H, d);
        split_heads(ckf.data.data(), b.ca_k.data.data(), P, H, d);
        split_heads(cvf.data.data(), b.ca_v.data.data(), P, H, d);
        b.ca_probs = Tensor({H, L, P});
        Tensor coh({H, L, d});
        for (int h = 0; h < H; ++h) {
            double* s = b.ca_probs.data.data() + size_t(h) * size_t(L) * size_t(P);
            mm_nt(b.ca_q.data.data() + size_t(h) * size_t(L) * size_t(d),
                  b.ca_k.data.data() + size_t(h) * size_t(P) * size_t(d), s, L, d, P);
            for (long i = 0; i < long(L) * P; ++i) s[i] *= inv_sqrt_d;
            softmax_rows(s, L, P);
            mm_nn(s, b.ca_v.data.data() + size_t(h) * size_t(P) * size_t(d),
                  coh.data.data() + size_t(h) * size_t(L) * size_t(d), L, P, d);
        }
        b.ca_cat = Tensor({L, c});
        merge_heads(coh.data.data(), b.ca_cat.data.data(), L, H, d);
        b.ca_out = Tensor({L, c});
        mm_nn(b.ca_cat.data.data(), param(pre + "ca_o").t.data.data(), b.ca_out.data.data(), L, c,
              c);
        b.x_ca = b.x_sa;
        for (size_t i = 0; i < b.x_ca.data.size(); ++i) b.x_ca.data[i] += b.ca_out.data[i];

        // Feed-forward.
        b.ln3_hat = Tensor({L, c});
        Tensor ln3({L, c});
        ln_forward(b.x_ca.data.data(), param(pre + "ffn_ln_g").t.data.data(),
                   param(pre + "ffn_ln_b").t.data.data(), L, c, ln3.data.data(),
                   b.ln3_hat.data.data(), b.ln3_rstd);
        b.ffn_pre = Tensor({L, hidden});
        mm_nn(ln3.data.data(), param(pre + "ffn_w1").t.data.data(), b.ffn_pre.data.data(), L, c,
              hidden);
        const Tensor& b1 = param(pre + "ffn_b1").t;
        for (int i = 0; i < L; ++i) {
            double* row = b.ffn_pre.data.data() + size_t(i) * size_t(hidden);
            for (int j = 0; j < hidden; ++j) row[j] += b1.data[size_t(j)];
        }
        b.ffn_act = Tensor({L, hidden});
        for (size_t i = 0; i < b.ffn_act.data.size(); ++i)
            b.ffn_act.data[i] = gelu(b.ffn_pre.data[i]);
        b.ffn_out = Tensor({L, c});
        mm_nn(b.ffn_act.data.data(), param(pre + "ffn_w2").t.data.data(), b.ffn_out.data.data(),
              L, hidden, c);
        const Tensor& b2 = param(pre + "ffn_b2").t;
        for (int i = 0; i < L; ++i) {
            double* row = b.ffn_out.data.data() + size_t(i) * size_t(c);
            for (int j = 0; j < c; ++j) row[j] += b2.data[size_t(j)];
        }
        b.x_out = b.x_ca;
        for (size_t i = 0; i < b.x_out.data.size(); ++i) b.x_out.data[i] += b.ffn_out.data[i];
        cur = &b.x_out;
    }

    w.lnf_hat = Tensor({L, c});
    Tensor lnf({L, c});
    ln_forward(cur->data.data(), param("final_ln_g").t.data.data(),
               param("final_ln_b").t.data.data(), L, c, lnf.data.data(), w.lnf_hat.data.data(),
               w.lnf_rstd);
    w.pred = Tensor({L, c});
    mm_nn(lnf.data.data(), param("head_w").t.data.data(), w.pred.data.data(), L, c, c);
    const Tensor& hb = param("head_b").t;
    for (int i = 0; i < L; ++i) {
        double* row = w.pred.data.data() + size_t(i) * size_t(c);
        for (int j = 0; j < c; ++j) row[j] += hb.data[size_t(j)];
    }
    return w.pred;
}

Tensor Model::backward(const Tensor& dpred, const Workspace& w) {
    const int L = cfg_.tokens();
    const int c = cfg_.channels;
    const int H = cfg_.heads;
    const int d = cfg_.head_dim();
    const int ft = cfg_.frame_tokens();
    const int pd = cfg_.prompt_dim;
    const int hidden = c * cfg_.ffn_mult;
    const int P = int(w.prompt.size());
    const double inv_sqrt_d = 1.0 / std::sqrt(double(d));

    if (dpred.numel() != long(L) * c)
        throw std::invalid_argument("backward: gradient shape mismatch");
    if (int(w.blocks.size()) != cfg_.num_blocks || w.pred.data.empty())
        throw std::invalid_argument("backward: workspace was not captured by forward");

    // Head and final norm.
    {
        Param& hw = param("head_w");
        Param& hb = param("head_b");
        const Tensor lnf =
            ln_output(w.lnf_hat, param("final_ln_g").t.data.data(),
                      param("final_ln_b").t.data.data(), L, c);
        mm_tn_acc(lnf.data.data(), dpred.data.data(), hw.t.grad.data(), L, c, c);
        colsum_acc(dpred.data.data(), hb.t.grad.data(), L, c);
    }
    Tensor d_lnf({L, c});
    mm_nt(dpred.data.data(), param("head_w").t.data.data(), d_lnf.data.data(), L, c, c);
    Tensor dx({L, c});
    ln_backward(d_lnf.data.data(), w.lnf_hat.data.data(), w.lnf_rstd,
                param("final_ln_g").t.data.data(), L, c, dx.data.data(),
                param("final_ln_g").t.grad.data(), param("final_ln_b").t.grad.data());

    for (int l = cfg_.num_blocks - 1; l >= 0; --l) {
        const BlockTrace& b = w.blocks[size_t(l)];
        const std::string pre = "block" + std::to_string(l) + ".";

        // FFN: dx holds d(x_out); x_out = x_ca + ffn_out(LN3(x_ca)).
        {
            Param& w2 = param(pre + "ffn_w2");
            mm_tn_acc(b.ffn_act.data.data(), dx.data.data(), w2.t.grad.data(), L, hidden, c);
            colsum_acc(dx.data.data(), param(pre + "ffn_b2").t.grad.data(), L, c);
            Tensor d_act({L, hidden});
            mm_nt(dx.data.data(), w2.t.data.data(), d_act.data.data(), L, c, hidden);
            for (size_t i = 0; i < d_act.data.size(); ++i)
                d_act.data[i] *= gelu_grad(b.ffn_pre.data[i]);
            const Tensor ln3 = ln_output(b.ln3_hat, param(pre + "ffn_ln_g").t.data.data(),
                                         param(pre + "ffn_ln_b").t.data.data(), L, c);
            mm_tn_acc(ln3.data.data(), d_act.data.data(), param(pre + "ffn_w1").t.grad.data(), L,
                      c, hidden);
            colsum_acc(d_act.data.data(), param(pre + "ffn_b1").t.grad.data(), L, hidden);
            Tensor d_ln3({L, c});
            mm_nt(d_act.data.data(), param(pre + "ffn_w1").t.data.data(), d_ln3.data.data(), L,
                  hidden, c);
            ln_backward(d_ln3.data.data(), b.ln3_hat.data.data(), b.ln3_rstd,
                        param(pre + "ffn_ln_g").t.data.data(), L, c, dx.data.data(),
                        param(pre + "ffn_ln_g").t.grad.data(),
                        param(pre + "ffn_ln_b").t.grad.data());
        }

        // Cross-attention: dx holds d(x_ca); x_ca = x_sa + ca_out(LN2(x_sa)).
        {
            mm_tn_acc(b.ca_cat.data.data(), dx.data.data(), param(pre + "ca_o").t.grad.data(), L,
                      c, c);
            Tensor d_cat({L, c});
            mm_nt(dx.data.data(), param(pre + "ca_o").t.data.data(), d_cat.data.data(), L, c, c);
            Tensor d_oh({H, L, d});
            split_heads(d_cat.data.data(), d_oh.data.data(), L, H, d);
            Tensor d_q({H, L, d}), d_k({H, P, d}), d_v({H, P, d});
            std::vector<double> dp(size_t(L) * size_t(P), 0.0);
            for (int h = 0; h < H; ++h) {
                const double* probs = b.ca_probs.data.data() + size_t(h) * size_t(L) * size_t(P);
                const double* doh = d_oh.data.data() + size_t(h) * size_t(L) * size_t(d);
                mm_tn_acc(probs, doh, d_v.data.data() + size_t(h) * size_t(P) * size_t(d), L, P,
                          d);
                mm_nt(doh, b.ca_v.data.data() + size_t(h) * size_t(P) * size_t(d), dp.data(), L,
                      d, P);
                for (int i = 0; i < L; ++i) {
                    double* dpi = dp.data() + size_t(i) * size_t(P);
                    const double* pi = probs + size_t(i) * size_t(P);
                    double rowdot = 0.0;
                    for (int j = 0; j < P; ++j) rowdot += dpi[j] * pi[j];
                    for (int j = 0; j < P; ++j) dpi[j] = pi[j] * (dpi[j] - rowdot) * inv_sqrt_d;
                }
                mm_nn(dp.data(), b.ca_k.data.data() + size_t(h) * size_t(P) * size_t(d),
                      d_q.data.data() + size_t(h) * size_t(L) * size_t(d), L, P, d);
                mm_tn_acc(dp.data(), b.ca_q.data.data() + size_t(h) * size_t(L) * size_t(d),
                          d_k.data.data() + size_t(h) * size_t(P) * size_t(d), L, P, d);
            }
            Tensor d_cqf({L, c});
            merge_heads(d_q.data.data(), d_cqf.data.data(), L, H, d);
            const Tensor ln2 = ln_output(b.ln2_hat, param(pre + "ca_ln_g").t.data.data(),
                                         param(pre + "ca_ln_b").t.data.data(), L, c);
            mm_tn_acc(ln2.data.data(), d_cqf.data.data(), param(pre + "ca_q").t.grad.data(), L, c,
                      c);
            Tensor d_ln2({L, c});
            mm_nt(d_cqf.data.data(), param(pre + "ca_q").t.data.data(), d_ln2.data.data(), L, c,
                  c);
            Tensor d_ckf({P, c}), d_cvf({P, c});
            merge_heads(d_k.data.data(), d_ckf.data.data(), P, H, d);
            merge_heads(d_v.data.data(), d_cvf.data.data(), P, H, d);
            // prompt_emb is frozen, so the prompt path needs no input gradient.
            mm_tn_acc(w.prompt_x.data.data(), d_ckf.data.data(),
                      param(pre + "ca_k").t.grad.data(), P, pd, c);
            mm_tn_acc(w.prompt_x.data.data(), d_cvf.data.data(),
                      param(pre + "ca_v").t.grad.data(), P, pd, c);
            ln_backward(d_ln2.data.data(), b.ln2_hat.data.data(), b.ln2_rstd,
                        param(pre + "ca_ln_g").t.data.data(), L, c, dx.data.data(),
                        param(pre + "ca_ln_g").t.grad.data(),
                        param(pre + "ca_ln_b").t.grad.data());
        }

        // Self-attention: dx holds d(x_sa); x_sa = x_bias + sa_out(LN1(x_bias)).
        {
            mm_tn_acc(b.sa_cat.data.data(), dx.data.data(), param(pre + "sa_o").t.grad.data(), L,
                      c, c);
            Tensor d_cat({L, c});
            mm_nt(dx.data.data(), param(pre + "sa_o").t.data.data(), d_cat.data.data(), L, c, c);
            Tensor d_oh({H, L, d});
            split_heads(d_cat.data.data(), d_oh.data.data(), L, H, d);
            Tensor d_q({H, L, d}), d_k({H, L, d}), d_v({H, L, d});
            std::vector<double> dp(size_t(L) * size_t(L), 0.0);
            for (int h = 0; h < H; ++h) {
                const double* probs = b.sa_probs.data.data() + size_t(h) * size_t(L) * size_t(L);
                const double* doh = d_oh.data.data() + size_t(h) * size_t(L) * size_t(d);
                mm_tn_acc(probs, doh, d_v.data.data() + size_t(h) * size_t(L) * size_t(d), L, L,
                          d);
                mm_nt(doh, b.v.data.data() + size_t(h) * size_t(L) * size_t(d), dp.data(), L, d,
                      L);
                for (int i = 0; i < L; ++i) {
                    double* dpi = dp.data() + size_t(i) * size_t(L);
                    const double* pi = probs + size_t(i) * size_t(L);
                    double rowdot = 0.0;
                    for (int j = 0; j < L; ++j) rowdot += dpi[j] * pi[j];
                    for (int j = 0; j < L; ++j) dpi[j] = pi[j] * (dpi[j] - rowdot) * inv_sqrt_d;
                }
                mm_nn(dp.data(), b.k.data.data() + size_t(h) * size_t(L) * size_t(d),
                      d_q.data.data() + size_t(h) * size_t(L) * size_t(d), L, L, d);
                mm_tn_acc(dp.data(), b.q.data.data() + size_t(h) * size_t(L) * size_t(d),
                          d_k.data.data() + size_t(h) * size_t(L) * size_t(d), L, L, d);
            }
            Tensor d_qf({L, c}), d_kf({L, c}), d_vf({L, c});
            merge_heads(d_q.data.data(), d_qf.data.data(), L, H, d);
            merge_heads(d_k.data.data(), d_kf.data.data(), L, H, d);
            merge_heads(d_v.data.data(), d_vf.data.data(), L, H, d);
            const Tensor ln1 = ln_output(b.ln1_hat, param(pre + "sa_ln_g").t.data.data(),
                                         param(pre + "sa_ln_b").t.data.data(), L, c);
            mm_tn_acc(ln1.data.data(), d_qf.data.data(), param(pre + "sa_q").t.grad.data(), L, c,
                      c);
            mm_tn_acc(ln1.data.data(), d_kf.data.data(), param(pre + "sa_k").t.grad.data(), L, c,
                      c);
            mm_tn_acc(ln1.data.data(), d_vf.data.data(), param(pre + "sa_v").t.grad.data(), L, c,
                      c);
            Tensor d_ln1({L, c});
            mm_nt(d_qf.data.data(), param(pre + "sa_q").t.data.data(), d_ln1.data.data(), L, c,
                  c);
            mm_nt_acc(d_kf.data.data(), param(pre + "sa_k").t.data.data(), d_ln1.data.data(), L,
                      c, c);
            mm_nt_acc(d_vf.data.data(), param(pre + "sa_v").t.data.data(), d_ln1.data.data(), L,
                      c, c);
            ln_backward(d_ln1.data.data(), b.ln1_hat.data.data(), b.ln1_rstd,
                        param(pre + "sa_ln_g").t.data.data(), L, c, dx.data.data(),
                        param(pre + "sa_ln_g").t.grad.data(),
                        param(pre + "sa_ln_b").t.grad.data());
        }

        // Action bias: dx holds d(x_bias); broadcast means frame-row sums.
        if (w.has_action) {
            Tensor d_rows({cfg_.latent_frames, c});
            for (int i = 0; i < L; ++i) {
                double* row = d_rows.data.data() + size_t(i / ft) * size_t(c);
                const double* dxi = dx.data.data() + size_t(i) * size_t(c);
                for (int j = 0; j < c; ++j) row[j] += dxi[j];
            }
            mm_tn_acc(w.pooled.data.data(), d_rows.data.data(),
                      param(pre + "act_e").t.grad.data(), cfg_.latent_frames, cfg_.buttons, c);
        }
        // x_bias = x_in + broadcast rows, so dx passes through unchanged.
    }

    // Input embedding stage: x0 = x + pos_emb + time embedding.
    {
        Param& pos = param("pos_emb");
        for (size_t i = 0; i < dx.data.size(); ++i) pos.t.grad[i] += dx.data[i];
        std::vector<double> d_temb(size_t(c), 0.0);
        colsum_acc(dx.data.data(), d_temb.data(), L, c);
        Param& tw = param("time_w");
        mm_tn_acc(w.t_sin.data(), d_temb.data(), tw.t.grad.data(), 1, c, c);
        Param& tb = param("time_b");
        for (int j = 0; j < c; ++j) tb.t.grad[size_t(j)] += d_temb[size_t(j)];
    }
    return dx;
}

}  // namespace gwm::wm
