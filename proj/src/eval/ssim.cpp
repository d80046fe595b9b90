#include "gwm/eval.hpp"

#include <cmath>
#include <stdexcept>

namespace gwm::eval {
namespace {

constexpr int k_win = 11;
constexpr double k_sigma = 1.5;
constexpr double k_c1 = (0.01 * 255.0) * (0.01 * 255.0);
constexpr double k_c2 = (0.03 * 255.0) * (0.03 * 255.0);

const std::array<double, k_win * k_win>& gaussian_window() {
    static const std::array<double, k_win * k_win> w = [] {
        std::array<double, k_win * k_win> g{};
        const int half = k_win / 2;
        double sum = 0.0;
        for (int y = 0; y < k_win; ++y) {
            for (int x = 0; x < k_win; ++x) {
                const double dx = x - half, dy = y - half;
                const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * k_sigma * k_sigma));
                g[size_t(y) * k_win + size_t(x)] = v;
                sum += v;
            }
        }
        for (double& v : g) v /= sum;
        return g;
    }();
    return w;
}

std::vector<double> luma(const Frame& f) {
    std::vector<double> out(size_t(f.w) * size_t(f.h));
    for (int y = 0; y < f.h; ++y) {
        for (int x = 0; x < f.w; ++x) {
            const uint8_t* px = f.px(x, y);
            out[size_t(y) * size_t(f.w) + size_t(x)] =
                0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
        }
    }
    return out;
}

}  // namespace

double ssim_frame(const Frame& a, const Frame& b) {
    if (a.w != b.w || a.h != b.h) throw std::invalid_argument("ssim: frame size mismatch");
    if (a.w < k_win || a.h < k_win) throw std::invalid_argument("ssim: frame below window size");

    const std::vector<double> la = luma(a), lb = luma(b);
    const auto& win = gaussian_window();
    const int half = k_win / 2;

    // Only windows fully inside the frame contribute.
    double total = 0.0;
    int windows = 0;
    for (int cy = half; cy < a.h - half; ++cy) {
        for (int cx = half; cx < a.w - half; ++cx) {
            double mu_a = 0.0, mu_b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
            for (int wy = 0; wy < k_win; ++wy) {
                const size_t row = size_t(cy - half + wy) * size_t(a.w) + size_t(cx - half);
                for (int wx = 0; wx < k_win; ++wx) {
                    const double g = win[size_t(wy) * k_win + size_t(wx)];
                    const double va = la[row + size_t(wx)], vb = lb[row + size_t(wx)];
                    mu_a += g * va;
                    mu_b += g * vb;
                    aa += g * va * va;
                    bb += g * vb * vb;
                    ab += g * va * vb;
                }
            }
            const double var_a = aa - mu_a * mu_a;
            const double var_b = bb - mu_b * mu_b;
            const double cov = ab - mu_a * mu_b;
            total += ((2.0 * mu_a * mu_b + k_c1) * (2.0 * cov + k_c2)) /
                     ((mu_a * mu_a + mu_b * mu_b + k_c1) * (var_a + var_b + k_c2));
            ++windows;
        }
    }
    return total / double(windows);
}

double ssim(const std::vector<Frame>& a, const std::vector<Frame>& b) {
    const size_t n = std::min(a.size(), b.size());
    if (n == 0) throw std::invalid_argument("ssim: empty video");
    double total = 0.0;
    for (size_t t = 0; t < n; ++t) total += ssim_frame(a[t], b[t]);
    return total / double(n);
}

}  // namespace gwm::eval
