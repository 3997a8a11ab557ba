#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace maslab {

// FNV-1a 64-bit; stable content fingerprint for determinism checks.
inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t hash = 14695981039346656037ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    return hash;
}

std::string fnv1a64_hex(std::string_view text);

}  // namespace maslab
