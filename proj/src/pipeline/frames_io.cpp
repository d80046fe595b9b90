#include "gwm/frames.hpp"

#include <fstream>
#include <stdexcept>

namespace gwm {

void write_frames_bin(const std::string& path, const std::vector<Frame>& frames) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("frames.bin: cannot open for write: " + path);
    for (const Frame& f : frames) {
        if (!frames.empty() && (f.w != frames[0].w || f.h != frames[0].h))
            throw std::runtime_error("frames.bin: mixed frame sizes");
        os.write(reinterpret_cast<const char*>(f.rgb.data()), std::streamsize(f.rgb.size()));
    }
    if (!os) throw std::runtime_error("frames.bin: write failed: " + path);
}

std::vector<Frame> read_frames_bin(const std::string& path, int w, int h) {
    if (w <= 0 || h <= 0) throw std::runtime_error("frames.bin: bad dimensions for " + path);
    std::ifstream is(path, std::ios::binary | std::ios::ate);
    if (!is) throw std::runtime_error("frames.bin: cannot open: " + path);
    const std::streamoff bytes = is.tellg();
    const std::streamoff frame_bytes = std::streamoff(w) * h * 3;
    if (bytes % frame_bytes != 0)
        throw std::runtime_error("frames.bin: size not a whole number of " +
                                 std::to_string(w) + "x" + std::to_string(h) +
                                 " frames: " + path);
    is.seekg(0);
    std::vector<Frame> frames;
    frames.reserve(size_t(bytes / frame_bytes));
    for (std::streamoff i = 0; i < bytes / frame_bytes; ++i) {
        Frame f{w, h};
        is.read(reinterpret_cast<char*>(f.rgb.data()), frame_bytes);
        if (!is) throw std::runtime_error("frames.bin: truncated pixel data: " + path);
        frames.push_back(std::move(f));
    }
    return frames;
}

void write_ppm(const std::string& path, const Frame& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("ppm: cannot open: " + path);
    os << "P6\n" << f.w << ' ' << f.h << "\n255\n";
    os.write(reinterpret_cast<const char*>(f.rgb.data()), std::streamsize(f.rgb.size()));
}

} // namespace gwm
