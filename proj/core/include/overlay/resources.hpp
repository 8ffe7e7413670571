#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace overlay {

enum class ResourceField { Dsp, Ff, Lut };

std::string_view field_name(ResourceField field) noexcept;

// DSP / flip-flop / LUT counts of a PR region or of an operator footprint.
struct ResourceBudget {
  std::uint32_t dsp = 0;
  std::uint32_t ff = 0;
  std::uint32_t lut = 0;

  // Componentwise <=.
  constexpr bool fits_within(const ResourceBudget& limit) const noexcept {
    return dsp <= limit.dsp && ff <= limit.ff && lut <= limit.lut;
  }

  // First field (in dsp, ff, lut order) that exceeds `limit`.
  std::optional<ResourceField> first_overflow(const ResourceBudget& limit) const noexcept;

  friend constexpr bool operator==(const ResourceBudget&, const ResourceBudget&) = default;
};

enum class TileClass { Large, Small };

inline constexpr ResourceBudget kLargeBudget{8, 964, 1228};
inline constexpr ResourceBudget kSmallBudget{4, 156, 270};

static_assert(kSmallBudget.fits_within(kLargeBudget));

constexpr ResourceBudget budget_of(TileClass cls) noexcept {
  return cls == TileClass::Large ? kLargeBudget : kSmallBudget;
}

std::string_view to_string(TileClass cls) noexcept;
std::optional<TileClass> tile_class_from_string(std::string_view name) noexcept;

}  // namespace overlay
