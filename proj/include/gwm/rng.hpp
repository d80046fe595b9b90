#pragma once
// Deterministic RNG used everywhere: splitmix64 streams keyed by (base seed,
// stage tag, index).  No std::random engines or distributions — their output
// is not pinned across standard library implementations.

#include <cstdint>
#include <cmath>
#include <string_view>

namespace gwm {

struct Rng {
    uint64_t state = 0;

    explicit Rng(uint64_t seed = 0) : state(seed) {}

    uint64_t next_u64() {
        state += 0x9E3779B97F4A7C15ull;
        uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1): top 53 bits → double.
    double next_unit() {
        return double(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n), n >= 1.  Simple modulo; bias is irrelevant at
    // the small n used here but determinism is not.
    uint64_t next_below(uint64_t n) {
        return next_u64() % n;
    }

    // Standard normal via Box-Muller (both values used in turn).
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_unit();
        double u2 = next_unit();
        while (u1 <= 0.0) u1 = next_unit();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    bool next_bernoulli(double p) { return next_unit() < p; }

  private:
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// FNV-1a over a tag string, used to derive independent stream seeds from one
// base seed: derive_seed(base, "train", 3) and derive_seed(base, "record", 3)
// never collide in practice and are reproducible from the config alone.
inline uint64_t hash_tag(std::string_view tag) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t derive_seed(uint64_t base, std::string_view stage, uint64_t index = 0) {
    Rng r(base ^ hash_tag(stage) ^ (0x9E3779B97F4A7C15ull * (index + 1)));
    r.next_u64();
    return r.next_u64();
}

} // namespace gwm
