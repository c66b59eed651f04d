#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace market {

using Bytes = std::vector<std::uint8_t>;
using Digest = std::array<std::uint8_t, 32>;

std::string to_hex(std::span<const std::uint8_t> data);
Bytes from_hex(std::string_view hex);

inline Bytes to_bytes(std::string_view s) {
    return Bytes(s.begin(), s.end());
}

inline std::string to_string(std::span<const std::uint8_t> b) {
    return std::string(b.begin(), b.end());
}

/// BLAKE2b-256 over arbitrary bytes.
Digest hash32(std::span<const std::uint8_t> data);

/// True if `needle` occurs as a contiguous byte substring of `haystack`.
bool contains_bytes(std::span<const std::uint8_t> haystack,
                    std::span<const std::uint8_t> needle);

}  // namespace market
