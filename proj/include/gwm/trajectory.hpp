#pragma once

#include <cstddef>
#include <vector>

namespace gwm {

// Per-frame geometry of one tracked character, in frame-normalized units.
// x,y are the bbox center; w,h the bbox extents; area the mask-pixel ratio;
// aspect = h / w. Invalid frames (character not found) carry no values.
struct TrajectoryFrame {
    bool valid = false;
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;
    double area = 0.0;
    double aspect = 0.0;
};

struct Trajectory {
    std::vector<TrajectoryFrame> frames;

    size_t size() const { return frames.size(); }
    bool empty() const { return frames.empty(); }
    size_t valid_count() const {
        size_t n = 0;
        for (const auto& f : frames) n += f.valid ? 1 : 0;
        return n;
    }
};

}  // namespace gwm
