#pragma once
// RGB frame buffer plus the frames.bin container used throughout the dataset
// layout: magic, version, count, width, height, then raw 24-bit pixels.

#include <cstdint>
#include <string>
#include <vector>

namespace gwm {

struct Frame {
    int w = 0, h = 0;
    std::vector<uint8_t> rgb; // row-major, 3 bytes per pixel

    Frame() = default;
    Frame(int width, int height) : w(width), h(height), rgb(size_t(width) * size_t(height) * 3, 0) {}

    uint8_t* px(int x, int y) { return rgb.data() + 3 * (size_t(y) * size_t(w) + size_t(x)); }
    const uint8_t* px(int x, int y) const {
        return rgb.data() + 3 * (size_t(y) * size_t(w) + size_t(x));
    }
    void put(int x, int y, uint8_t r, uint8_t g, uint8_t b) {
        if (x < 0 || x >= w || y < 0 || y >= h) return;
        uint8_t* p = px(x, y);
        p[0] = r; p[1] = g; p[2] = b;
    }
    bool operator==(const Frame&) const = default;
};

// frames.bin is raw RGB24 frames concatenated — no header; dimensions travel
// in the dataset's meta.json sidecar. Reading validates that the byte count
// divides evenly into w*h*3 frames.
void write_frames_bin(const std::string& path, const std::vector<Frame>& frames);
std::vector<Frame> read_frames_bin(const std::string& path, int w, int h);

// Debug aid: single frame as binary PPM.
void write_ppm(const std::string& path, const Frame& f);

} // namespace gwm
