#pragma once

#include <cstdint>
#include <string_view>

namespace wvsort {

/// One splitmix64 step.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

/// Sub-seed derivation used everywhere a subsystem needs its own stream:
///
///     derive_seed(root, tag, index) = splitmix64(splitmix64(root ^ fnv1a64(tag)) + index)
///
/// Tags name the subsystem ("data", "mask", "init", ...); index separates
/// epochs, steps or emitters inside it.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view tag,
                                    std::uint64_t index = 0) noexcept {
    return splitmix64(splitmix64(root ^ fnv1a64(tag)) + index);
}

}  // namespace wvsort
