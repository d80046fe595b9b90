// Cross-attention transfer, pathway diagnostics, and the finite-difference
// gradient oracle.

#include <cmath>
#include <limits>
#include <stdexcept>

#include "gwm/kernels.hpp"
#include "gwm/wm.hpp"

namespace gwm::wm {
namespace {

bool ends_with(const std::string& s, const char* suffix) {
    const size_t n = std::char_traits<char>::length(suffix);
    return s.size() >= n && s.compare(s.size() - n, n, suffix) == 0;
}

// The transferred set is exactly the four cross-attention projections; the
// cross-attention LayerNorm stays with the target like every other norm.
bool is_ca_projection(const std::string& name) {
    return ends_with(name, ".ca_q") || ends_with(name, ".ca_k") || ends_with(name, ".ca_v") ||
           ends_with(name, ".ca_o");
}

}  // namespace

Model swap_cross_attention(const Model& target, const Model& source) {
    if (target.cfg().num_blocks != source.cfg().num_blocks ||
        target.cfg().channels != source.cfg().channels ||
        target.cfg().prompt_dim != source.cfg().prompt_dim)
        throw std::invalid_argument(
            "swap_cross_attention: configs disagree on blocks/channels/prompt_dim");
    Model out = target;
    for (Param& p : out.params()) {
        if (!is_ca_projection(p.name)) continue;
        const Param& s = source.param(p.name);
        if (s.t.shape != p.t.shape)
            throw std::invalid_argument("swap_cross_attention: dimension mismatch at " + p.name);
        p.t.data = s.t.data;
        p.t.zero_grad();
    }
    return out;
}

PathwayEnergy pathway_energy(const Workspace& ws, int block) {
    if (block < 0 || block >= int(ws.blocks.size()))
        throw std::out_of_range("pathway_energy: block index out of range");
    const BlockTrace& b = ws.blocks[size_t(block)];
    if (b.sa_out.data.empty() || b.ca_out.data.empty() || b.ffn_out.data.empty())
        throw std::invalid_argument("pathway_energy: workspace was not captured by forward");
    PathwayEnergy e;
    e.sa = sq_norm(b.sa_out.data.data(), b.sa_out.data.size());
    e.ca = sq_norm(b.ca_out.data.data(), b.ca_out.data.size());
    e.ffn = sq_norm(b.ffn_out.data.data(), b.ffn_out.data.size());
    const double total = e.sa + e.ca + e.ffn;
    if (total > 0.0) {
        e.rho = e.ca / total;
    } else {
        e.rho = 0.0;
        e.degenerate = true;
    }
    return e;
}

DirectionSimilarity ca_direction_similarity(const Tensor& a, const Tensor& b) {
    if (a.shape.size() != 2 || a.shape != b.shape)
        throw std::invalid_argument(
            "ca_direction_similarity: need two [tokens, channels] tensors of equal shape");
    const int rows = a.dim(0);
    const int c = a.dim(1);
    const auto& kr = kern::active_kernels();

    DirectionSimilarity out;
    double acc = 0.0;
    int counted = 0;
    for (int i = 0; i < rows; ++i) {
        const double* ra = a.data.data() + size_t(i) * size_t(c);
        const double* rb = b.data.data() + size_t(i) * size_t(c);
        const double na = std::sqrt(kr.dot(ra, ra, size_t(c)));
        const double nb = std::sqrt(kr.dot(rb, rb, size_t(c)));
        if (na <= 0.0 || nb <= 0.0) {
            ++out.zero_tokens;
            continue;
        }
        const double cosv = kr.dot(ra, rb, size_t(c)) / (na * nb);
        acc += std::min(1.0, std::max(-1.0, cosv));
        ++counted;
    }
    out.cosine = counted > 0 ? acc / double(counted) : 0.0;
    double d2 = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const double dv = a.data[i] - b.data[i];
        d2 += dv * dv;
    }
    out.delta_norm = std::sqrt(d2);
    return out;
}

GradCheck gradient_check(Model& model, const DiffusionSchedule& sched, const TrainItem& probe,
                         int coords_per_group, uint64_t seed) {
    model.zero_grads();
    const double base = probe_loss(model, sched, probe, seed, /*accumulate_grads=*/true);
    GradCheck rep;
    if (!std::isfinite(base)) {
        rep.finite = false;
        rep.max_rel_err = std::numeric_limits<double>::infinity();
        rep.worst_coord = "loss";
        return rep;
    }

    std::vector<std::vector<double>> analytic;
    for (const Param& p : model.params())
        if (p.trainable) analytic.push_back(p.t.grad);

    // Central differences, step pinned at 1e-5; the sum-of-squares probe loss
    // keeps the numerator far above cancellation noise.
    const double h = 1e-5;
    const double floor = 1e-3;
    Rng pick(derive_seed(seed, "gradcheck_pick"));
    size_t ti = 0;
    for (Param& p : model.params()) {
        if (!p.trainable) continue;
        const std::vector<double>& g = analytic[ti++];
        const long n = p.t.numel();
        std::vector<long> idxs;
        if (n <= coords_per_group) {
            idxs.resize(size_t(n));
            for (long i = 0; i < n; ++i) idxs[size_t(i)] = i;
        } else {
            std::vector<uint8_t> used(size_t(n), 0);
            while (long(idxs.size()) < coords_per_group) {
                const long i = long(pick.next_below(uint64_t(n)));
                if (used[size_t(i)]) continue;
                used[size_t(i)] = 1;
                idxs.push_back(i);
            }
        }
        for (const long i : idxs) {
            const double keep = p.t.data[size_t(i)];
            p.t.data[size_t(i)] = keep + h;
            const double lp = probe_loss(model, sched, probe, seed, false);
            p.t.data[size_t(i)] = keep - h;
            const double lm = probe_loss(model, sched, probe, seed, false);
            p.t.data[size_t(i)] = keep;
            const double num = (lp - lm) / (2.0 * h);
            if (!std::isfinite(num) || !std::isfinite(g[size_t(i)])) {
                rep.finite = false;
                rep.max_rel_err = std::numeric_limits<double>::infinity();
                rep.worst_coord = p.name + "[" + std::to_string(i) + "]";
                return rep;
            }
            const double rel = std::abs(num - g[size_t(i)]) /
                               std::max(floor, std::abs(num) + std::abs(g[size_t(i)]));
            if (rel > rep.max_rel_err) {
                rep.max_rel_err = rel;
                rep.worst_coord = p.name + "[" + std::to_string(i) + "]";
            }
        }
    }
    return rep;
}

double fd_probe(Model& model, const DiffusionSchedule& sched, const TrainItem& probe,
                const std::string& param, long index, uint64_t seed) {
    Param& p = model.param(param);
    if (index < 0 || index >= p.t.numel()) throw std::out_of_range("fd_probe: index out of range");
    const double h = 1e-5;
    const double keep = p.t.data[size_t(index)];
    p.t.data[size_t(index)] = keep + h;
    const double lp = probe_loss(model, sched, probe, seed, false);
    p.t.data[size_t(index)] = keep - h;
    const double lm = probe_loss(model, sched, probe, seed, false);
    p.t.data[size_t(index)] = keep;
    return (lp - lm) / (2.0 * h);
}

}  // namespace gwm::wm
