#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace gwm {

// RFC 1321 MD5. digest is the usual 16-byte output; hex is lowercase.
std::array<uint8_t, 16> md5_digest(const void* data, size_t len);
std::string md5_hex(const std::string& text);

// Interprets the 16-byte digest as one big-endian 128-bit unsigned integer
// and reduces it modulo `m` (m >= 1).
uint64_t md5_mod(const std::string& text, uint64_t m);

}  // namespace gwm
