#include "gwm/eval.hpp"

#include <algorithm>
#include <cmath>

namespace gwm::eval {
namespace {

double median(std::vector<double> v) {
    const size_t n = v.size();
    std::sort(v.begin(), v.end());
    return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

const std::array<const char*, 4> move_key_names = {"left", "right", "up", "down"};

Trajectory extract_trajectory(const std::vector<Mask>& masks) {
    const size_t n = masks.size();
    Trajectory raw;
    raw.frames.resize(n);
    for (size_t t = 0; t < n; ++t) {
        const Mask& m = masks[t];
        if (!m.valid()) continue;
        TrajectoryFrame& f = raw.frames[t];
        const double w = double(m.box_w());
        const double h = double(m.box_h());
        f.valid = true;
        f.x = (m.x0 + 0.5 * w) / m.frame_w;
        f.y = (m.y0 + 0.5 * h) / m.frame_h;
        f.w = w / m.frame_w;
        f.h = h / m.frame_h;
        f.area = double(m.count) / (double(m.frame_w) * double(m.frame_h));
        f.aspect = h / w;
    }

    // Rolling median over x,y,w,h: the window shrinks symmetrically at the
    // ends (radius min(2, t, n-1-t)) so the endpoints pass through verbatim —
    // the context frame is the movement baseline and must not be blended
    // into the first action frames.  Invalid frames are skipped inside the
    // window; an invalid center stays invalid.  aspect is recomputed from
    // the smoothed extents; area stays raw.
    Trajectory out = raw;
    const int half = (k_median_window - 1) / 2;
    for (size_t t = 0; t < n; ++t) {
        if (!raw.frames[t].valid) continue;
        const int r = std::min({half, int(t), int(n - 1 - t)});
        std::vector<double> xs, ys, ws, hs;
        for (int k = int(t) - r; k <= int(t) + r; ++k) {
            const TrajectoryFrame& f = raw.frames[size_t(k)];
            if (!f.valid) continue;
            xs.push_back(f.x);
            ys.push_back(f.y);
            ws.push_back(f.w);
            hs.push_back(f.h);
        }
        TrajectoryFrame& f = out.frames[t];
        f.x = median(xs);
        f.y = median(ys);
        f.w = median(ws);
        f.h = median(hs);
        f.aspect = (f.h * double(masks[t].frame_h)) / (f.w * double(masks[t].frame_w));
    }
    return out;
}

MoveScore score_movement(const Trajectory& traj, MoveKey key, const MoveThresholds& th) {
    MoveScore s;
    std::vector<size_t> valid;
    for (size_t t = 0; t < traj.size(); ++t)
        if (traj.frames[t].valid) valid.push_back(t);
    if (valid.size() < 3) return s;
    s.valid = true;

    // Baseline = the first valid frame (the conditioning frame); end state =
    // the last; mid-clip pose = medians over the middle third of the valid
    // frames.
    const TrajectoryFrame& first = traj.frames[valid.front()];
    const double x0 = first.x, y0 = first.y, h0 = first.h;
    const double xT = traj.frames[valid.back()].x;

    switch (key) {
        case MoveKey::left:
            s.pass = xT - x0 <= th.left;
            return s;
        case MoveKey::right:
            s.pass = xT - x0 >= th.right;
            return s;
        case MoveKey::up: {
            double ymin = y0;
            for (size_t t : valid) ymin = std::min(ymin, traj.frames[t].y);
            s.pass = ymin - y0 <= th.up_peak;
            return s;
        }
        case MoveKey::down: {
            const size_t lo = valid.size() / 3;
            const size_t hi = std::max(lo + 1, 2 * valid.size() / 3);
            std::vector<double> ys, hs;
            for (size_t i = lo; i < hi; ++i) {
                ys.push_back(traj.frames[valid[i]].y);
                hs.push_back(traj.frames[valid[i]].h);
            }
            const double y_mid = median(ys), h_mid = median(hs);
            s.pass = h_mid <= th.down_h_ratio * h0 || y_mid - y0 >= th.down_y;
            return s;
        }
    }
    return s;
}

}  // namespace gwm::eval
