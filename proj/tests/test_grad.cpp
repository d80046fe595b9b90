#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gwm/rng.hpp"
#include "gwm/tensor.hpp"
#include "gwm/wm.hpp"

#include <cmath>

using namespace gwm;
using namespace gwm::wm;

namespace {

ModelConfig grad_cfg() {
    ModelConfig c;
    c.num_blocks = 2;
    c.channels = 16;
    c.heads = 2;
    c.latent_h = 2;
    c.latent_w = 2;
    c.latent_frames = 3;
    c.buttons = 10;
    c.prompt_vocab = 32;
    c.prompt_dim = 16;
    c.max_prompt_tokens = 8;
    c.ffn_mult = 2;
    c.diffusion_steps = 10;
    c.sample_steps = 5;
    c.temporal_factor = 2;
    c.spatial_factor = 8;
    return c;
}

TrainItem probe_item(const ModelConfig& cfg, uint64_t seed) {
    TrainItem item;
    item.latent = Tensor({cfg.tokens(), cfg.channels});
    Rng rng(seed);
    for (double& v : item.latent.data) v = rng.next_gaussian();
    item.pooled = Tensor({cfg.latent_frames, cfg.buttons});
    for (int i = 1; i < cfg.latent_frames; ++i)
        for (int k = 0; k < cfg.buttons; ++k)
            item.pooled.data[size_t(i) * size_t(cfg.buttons) + size_t(k)] =
                rng.next_bernoulli(0.3) ? 1.0 : 0.0;
    item.prompt = {2, 5, 9, 16};
    return item;
}

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max(1e-3, std::abs(a) + std::abs(b));
}

}  // namespace

TEST_CASE("mm primitives agree with naive triple loops") {
    const int m = 7, k = 9, n = 5;
    std::vector<double> a(size_t(m) * k), b_nn(size_t(k) * n), b_nt(size_t(n) * k);
    Rng rng(17);
    for (double& v : a) v = rng.next_gaussian();
    for (double& v : b_nn) v = rng.next_gaussian();
    for (double& v : b_nt) v = rng.next_gaussian();

    std::vector<double> got(size_t(m) * n, 0.0), want(size_t(m) * n, 0.0);
    mm_nn(a.data(), b_nn.data(), got.data(), m, k, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += a[size_t(i) * k + size_t(p)] * b_nn[size_t(p) * n + size_t(j)];
            want[size_t(i) * n + size_t(j)] = s;
        }
    for (size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));

    std::fill(got.begin(), got.end(), 0.0);
    mm_nt(a.data(), b_nt.data(), got.data(), m, k, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += a[size_t(i) * k + size_t(p)] * b_nt[size_t(j) * k + size_t(p)];
            want[size_t(i) * n + size_t(j)] = s;
        }
    for (size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));

    // Accumulating variant adds on top.
    std::vector<double> acc(size_t(k) * n, 1.0);
    mm_tn_acc(a.data(), b_nn.data(), acc.data(), m, k, n);
    for (int p = 0; p < k; ++p)
        for (int j = 0; j < n; ++j) {
            double s = 1.0;
            for (int i = 0; i < m; ++i) s += a[size_t(i) * k + size_t(p)] * b_nn[size_t(i) * n + size_t(j)];
            CHECK(acc[size_t(p) * n + size_t(j)] == doctest::Approx(s).epsilon(1e-12));
        }
}

TEST_CASE("linear head: central differences are exact") {
    // The probe loss is quadratic in the head parameters, so the central
    // difference equals the analytic derivative up to rounding; dividing the
    // ~1e-14 absolute rounding in the loss by 2h leaves ~1e-9 on the slope.
    const ModelConfig cfg = grad_cfg();
    const DiffusionSchedule sched = DiffusionSchedule::linear(cfg.diffusion_steps, 0.004, 0.30);
    Model m(cfg, 101);
    const TrainItem item = probe_item(cfg, 7);
    const uint64_t seed = 33;

    m.zero_grads();
    probe_loss(m, sched, item, seed, /*accumulate_grads=*/true);
    for (const long idx : {0L, 3L, 11L}) {
        const double analytic = m.param("head_b").t.grad[size_t(idx)];
        const double fd = fd_probe(m, sched, item, "head_b", idx, seed);
        CHECK(std::abs(fd - analytic) / std::max(1e-6, std::abs(analytic) + std::abs(fd)) <
              1e-8);
    }
    for (const long idx : {0L, 42L, 200L}) {
        const double analytic = m.param("head_w").t.grad[size_t(idx)];
        const double fd = fd_probe(m, sched, item, "head_w", idx, seed);
        CHECK(std::abs(fd - analytic) / std::max(1e-6, std::abs(analytic) + std::abs(fd)) <
              1e-8);
    }
}

TEST_CASE("full 2-block model: analytic gradients match finite differences") {
    const ModelConfig cfg = grad_cfg();
    const DiffusionSchedule sched = DiffusionSchedule::linear(cfg.diffusion_steps, 0.004, 0.30);
    Model m(cfg, 102);
    const TrainItem item = probe_item(cfg, 8);

    const GradCheck rep = gradient_check(m, sched, item, /*coords_per_group=*/200, /*seed=*/55);
    CAPTURE(rep.worst_coord);
    CHECK(rep.finite);
    CHECK(rep.max_rel_err < 1e-4);
    CHECK(!rep.worst_coord.empty());
}

TEST_CASE("action projection E_l gets a checked, nonzero gradient") {
    const ModelConfig cfg = grad_cfg();
    const DiffusionSchedule sched = DiffusionSchedule::linear(cfg.diffusion_steps, 0.004, 0.30);
    Model m(cfg, 103);
    const TrainItem item = probe_item(cfg, 9);
    const uint64_t seed = 77;

    m.zero_grads();
    probe_loss(m, sched, item, seed, /*accumulate_grads=*/true);
    const Param& e0 = m.param("block0.act_e");
    CHECK(sq_norm(e0.t.grad.data(), e0.t.grad.size()) > 0.0);

    // Pick the largest coordinate and verify it against the oracle.
    long best = 0;
    for (long i = 1; i < e0.t.numel(); ++i)
        if (std::abs(e0.t.grad[size_t(i)]) > std::abs(e0.t.grad[size_t(best)])) best = i;
    const double analytic = e0.t.grad[size_t(best)];
    const double fd = fd_probe(m, sched, item, "block0.act_e", best, seed);
    CHECK(rel_err(analytic, fd) < 1e-4);
}

TEST_CASE("harness sensitivity: corrupted gradient is flagged") {
    const ModelConfig cfg = grad_cfg();
    const DiffusionSchedule sched = DiffusionSchedule::linear(cfg.diffusion_steps, 0.004, 0.30);
    Model m(cfg, 104);
    const TrainItem item = probe_item(cfg, 10);
    const uint64_t seed = 88;

    m.zero_grads();
    probe_loss(m, sched, item, seed, /*accumulate_grads=*/true);
    const Param& w2 = m.param("block0.ffn_w2");
    long best = 0;
    for (long i = 1; i < w2.t.numel(); ++i)
        if (std::abs(w2.t.grad[size_t(i)]) > std::abs(w2.t.grad[size_t(best)])) best = i;
    const double analytic = w2.t.grad[size_t(best)];
    const double fd = fd_probe(m, sched, item, "block0.ffn_w2", best, seed);

    CHECK(rel_err(analytic, fd) < 1e-4);                    // honest gradient passes
    const double corrupted = 1.5 * analytic + 0.01;         // an FFN backward bug
    CHECK(rel_err(corrupted, fd) > 1e-3);                   // ... would not
}

TEST_CASE("non-finite gradients are reported, not silently compared") {
    const ModelConfig cfg = grad_cfg();
    const DiffusionSchedule sched = DiffusionSchedule::linear(cfg.diffusion_steps, 0.004, 0.30);
    Model m(cfg, 105);
    TrainItem poison = probe_item(cfg, 11);
    poison.latent.data[0] = std::nan("");

    const GradCheck rep = gradient_check(m, sched, poison, 10, 3);
    CHECK(!rep.finite);
    CHECK(std::isinf(rep.max_rel_err));
    CHECK(rep.worst_coord == "loss");
}
