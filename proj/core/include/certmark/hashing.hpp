#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace certmark {

std::array<std::uint8_t, 16> md5_digest(std::string_view data);

// Low 64 bits of the digest read as a 128-bit big-endian integer,
// i.e. int(hexdigest, 16) & (2**64 - 1).
std::uint64_t md5_low64(std::string_view data);

std::string sha256_hex(std::string_view data);

}  // namespace certmark
