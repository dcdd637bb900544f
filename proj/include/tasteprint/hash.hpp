#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace tasteprint {

/// 64-bit FNV-1a, rendered as 16 lowercase hex digits. Used for content
/// references (mesh_ref, design hash), not for security.
inline std::string content_hash(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) out[i] = digits[h & 0xf];
    return out;
}

inline std::string content_hash(std::string_view text) {
    return content_hash(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace tasteprint
