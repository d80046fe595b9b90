#include "gwm/md5.hpp"

#include <cstring>

namespace gwm {
namespace {

// RFC 1321 reference constants.
constexpr std::array<uint32_t, 64> k_sine = {
    0xd76aa478u, 0xe8c7b756u, 0x242070dbu, 0xc1bdceeeu, 0xf57c0fafu, 0x4787c62au,
    0xa8304613u, 0xfd469501u, 0x698098d8u, 0x8b44f7afu, 0xffff5bb1u, 0x895cd7beu,
    0x6b901122u, 0xfd987193u, 0xa679438eu, 0x49b40821u, 0xf61e2562u, 0xc040b340u,
    0x265e5a51u, 0xe9b6c7aau, 0xd62f105du, 0x02441453u, 0xd8a1e681u, 0xe7d3fbc8u,
    0x21e1cde6u, 0xc33707d6u, 0xf4d50d87u, 0x455a14edu, 0xa9e3e905u, 0xfcefa3f8u,
    0x676f02d9u, 0x8d2a4c8au, 0xfffa3942u, 0x8771f681u, 0x6d9d6122u, 0xfde5380cu,
    0xa4beea44u, 0x4bdecfa9u, 0xf6bb4b60u, 0xbebfbc70u, 0x289b7ec6u, 0xeaa127fau,
    0xd4ef3085u, 0x04881d05u, 0xd9d4d039u, 0xe6db99e5u, 0x1fa27cf8u, 0xc4ac5665u,
    0xf4292244u, 0x432aff97u, 0xab9423a7u, 0xfc93a039u, 0x655b59c3u, 0x8f0ccc92u,
    0xffeff47du, 0x85845dd1u, 0x6fa87e4fu, 0xfe2ce6e0u, 0xa3014314u, 0x4e0811a1u,
    0xf7537e82u, 0xbd3af235u, 0x2ad7d2bbu, 0xeb86d391u,
};

constexpr std::array<uint32_t, 64> k_shift = {
    7, 12, 17, 22, 7, 12, 17, 22, 7, 12, 17, 22, 7, 12, 17, 22,
    5, 9,  14, 20, 5, 9,  14, 20, 5, 9,  14, 20, 5, 9,  14, 20,
    4, 11, 16, 23, 4, 11, 16, 23, 4, 11, 16, 23, 4, 11, 16, 23,
    6, 10, 15, 21, 6, 10, 15, 21, 6, 10, 15, 21, 6, 10, 15, 21,
};

uint32_t rotl(uint32_t v, uint32_t s) { return (v << s) | (v >> (32 - s)); }

void process_block(const uint8_t* block, uint32_t state[4]) {
    uint32_t m[16];
    for (int i = 0; i < 16; ++i) {
        m[i] = uint32_t(block[4 * i]) | (uint32_t(block[4 * i + 1]) << 8) |
               (uint32_t(block[4 * i + 2]) << 16) | (uint32_t(block[4 * i + 3]) << 24);
    }
    uint32_t a = state[0], b = state[1], c = state[2], d = state[3];
    for (uint32_t i = 0; i < 64; ++i) {
        uint32_t f = 0, g = 0;
        if (i < 16) {
            f = (b & c) | (~b & d);
            g = i;
        } else if (i < 32) {
            f = (d & b) | (~d & c);
            g = (5 * i + 1) & 15;
        } else if (i < 48) {
            f = b ^ c ^ d;
            g = (3 * i + 5) & 15;
        } else {
            f = c ^ (b | ~d);
            g = (7 * i) & 15;
        }
        const uint32_t tmp = d;
        d = c;
        c = b;
        b = b + rotl(a + f + k_sine[i] + m[g], k_shift[i]);
        a = tmp;
    }
    state[0] += a;
    state[1] += b;
    state[2] += c;
    state[3] += d;
}

}  // namespace

std::array<uint8_t, 16> md5_digest(const void* data, size_t len) {
    uint32_t state[4] = {0x67452301u, 0xefcdab89u, 0x98badcfeu, 0x10325476u};
    const uint8_t* bytes = static_cast<const uint8_t*>(data);

    size_t off = 0;
    for (; off + 64 <= len; off += 64) process_block(bytes + off, state);

    // Padding: 0x80, zeros, then the bit length as a 64-bit little-endian word.
    uint8_t tail[128] = {};
    const size_t rem = len - off;
    std::memcpy(tail, bytes + off, rem);
    tail[rem] = 0x80;
    const size_t tail_len = (rem < 56) ? 64 : 128;
    const uint64_t bit_len = uint64_t(len) * 8;
    for (int i = 0; i < 8; ++i) tail[tail_len - 8 + i] = uint8_t(bit_len >> (8 * i));
    process_block(tail, state);
    if (tail_len == 128) process_block(tail + 64, state);

    std::array<uint8_t, 16> out{};
    for (int w = 0; w < 4; ++w)
        for (int i = 0; i < 4; ++i) out[size_t(4 * w + i)] = uint8_t(state[w] >> (8 * i));
    return out;
}

std::string md5_hex(const std::string& text) {
    static const char* hexchars = "0123456789abcdef";
    const auto d = md5_digest(text.data(), text.size());
    std::string out(32, '0');
    for (size_t i = 0; i < 16; ++i) {
        out[2 * i] = hexchars[d[i] >> 4];
        out[2 * i + 1] = hexchars[d[i] & 15];
    }
    return out;
}

uint64_t md5_mod(const std::string& text, uint64_t m) {
    const auto d = md5_digest(text.data(), text.size());
    // Digest bytes read most-significant first as one 128-bit integer.
    uint64_t acc = 0;
    for (const uint8_t byte : d) {
        acc = uint64_t(((static_cast<unsigned __int128>(acc) << 8) | byte) % m);
    }
    return acc;
}

}  // namespace gwm
