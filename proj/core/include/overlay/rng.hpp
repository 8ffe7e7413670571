#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "overlay/sim.hpp"

namespace overlay {

// splitmix64, pinned so inputs are reproducible across implementations.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [-1, 1): top 24 bits scaled to [0, 1), then 2u - 1.  Exact in
  // binary32.
  float uniform_pm1() noexcept {
    const auto top = static_cast<std::uint32_t>(next() >> 40);
    return static_cast<float>(top) * (2.0f / 16777216.0f) - 1.0f;
  }

  std::uint64_t below(std::uint64_t bound) noexcept { return bound == 0 ? 0 : next() % bound; }

 private:
  std::uint64_t state_;
};

// One generator for all streams, drawn in sorted-name order, n values each.
StreamInputs random_streams(std::span<const std::string> names, std::size_t n, std::uint64_t seed);

inline constexpr std::uint64_t kDefaultSeed = 42;

// OVERLAY_FORGE_SEED if set and parseable, else kDefaultSeed.
std::uint64_t default_seed();

}  // namespace overlay
