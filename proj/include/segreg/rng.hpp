#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace segreg {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Independent stream keyed by (seed, path...). The key is hashed rather
/// than advanced, so draw b of a run gets the same stream whether draws run
/// in order, out of order, or on different threads.
Rng derive_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

}  // namespace segreg
