#include "overlay/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <string_view>

namespace overlay {

StreamInputs random_streams(std::span<const std::string> names, std::size_t n, std::uint64_t seed) {
  std::vector<std::string> sorted(names.begin(), names.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  SplitMix64 rng(seed);
  StreamInputs out;
  for (const auto& name : sorted) {
    std::vector<float> values(n);
    for (auto& v : values) v = rng.uniform_pm1();
    out.emplace(name, std::move(values));
  }
  return out;
}

std::uint64_t default_seed() {
  const char* env = std::getenv("OVERLAY_FORGE_SEED");
  if (!env) return kDefaultSeed;
  const std::string_view text(env);
  std::uint64_t seed = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), seed);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) return kDefaultSeed;
  return seed;
}

}  // namespace overlay
