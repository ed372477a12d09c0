#pragma once

#include <cstdint>

namespace oomp {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept {
    return mix64(a ^ mix64(b));
}

/// Counter-based uniform on [0, 1): the value for (key, row, column) does not
/// depend on the order in which cells are requested, so any cell of any row can
/// be re-materialized on demand.
inline double counter_uniform(std::uint64_t key, std::uint64_t row, std::uint64_t column) noexcept {
    const std::uint64_t bits = mix64(hash_combine(key, row) + column);
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// counter_uniform with hash_combine(key, row) precomputed as `row_key`.
inline double row_uniform(std::uint64_t row_key, std::uint64_t column) noexcept {
    return static_cast<double>(mix64(row_key + column) >> 11) * 0x1.0p-53;
}

}  // namespace oomp
