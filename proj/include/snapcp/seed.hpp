#pragma once

#include <cstdint>

namespace snapcp {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Child seed for a (parent, index) pair; used for per-trial and per-node streams.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept {
    return mix64(mix64(parent) ^ (index * 0xd1b54a32d192ed03ull + 0x8cb92ba72f3d8dd7ull));
}

/// Uniform in [0, 1) from the top 53 bits.
constexpr double unit_from_bits(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace snapcp
