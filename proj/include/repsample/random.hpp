#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>
#include <variant>

namespace repsample {

using Rng = std::mt19937_64;

// One component of a seed-derivation path: either a label or an ordinal.
using SeedLabel = std::variant<std::string_view, std::uint64_t>;

/// Derives a child seed from a root seed and a path of labels, e.g.
/// derive_seed(root, {"fold", 3, "density"}). The result depends only on the
/// arguments, so tasks can run in any order or concurrently and still draw
/// the same random streams.
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<SeedLabel> path);

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double in (0, 1]; safe as a log() argument.
inline double uniform01_open_low(Rng& rng) {
  return static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53;
}

}  // namespace repsample
