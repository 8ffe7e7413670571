#include "overlay/mesh.hpp"

#include <fmt/format.h>

#include "overlay/resources.hpp"

namespace overlay {

char direction_letter(Direction d) noexcept {
  static constexpr char kLetters[] = {'N', 'E', 'S', 'W'};
  return kLetters[index_of(d)];
}

std::optional<Direction> direction_from_letter(char c) noexcept {
  switch (c) {
    case 'N': case 'n': return Direction::North;
    case 'E': case 'e': return Direction::East;
    case 'S': case 's': return Direction::South;
    case 'W': case 'w': return Direction::West;
    default: return std::nullopt;
  }
}

std::optional<Direction> neighbour_direction(Coord from, Coord to) noexcept {
  for (Direction d : kDirections) {
    if (step(from, d) == to) return d;
  }
  return std::nullopt;
}

std::string to_string(Coord c) { return fmt::format("({},{})", c.row, c.col); }

std::string_view field_name(ResourceField field) noexcept {
  switch (field) {
    case ResourceField::Dsp: return "dsp";
    case ResourceField::Ff: return "ff";
    case ResourceField::Lut: return "lut";
  }
  return "?";
}

std::optional<ResourceField> ResourceBudget::first_overflow(
    const ResourceBudget& limit) const noexcept {
  if (dsp > limit.dsp) return ResourceField::Dsp;
  if (ff > limit.ff) return ResourceField::Ff;
  if (lut > limit.lut) return ResourceField::Lut;
  return std::nullopt;
}

std::string_view to_string(TileClass cls) noexcept {
  return cls == TileClass::Large ? "large" : "small";
}

std::optional<TileClass> tile_class_from_string(std::string_view name) noexcept {
  if (name == "large" || name == "Large") return TileClass::Large;
  if (name == "small" || name == "Small") return TileClass::Small;
  return std::nullopt;
}

}  // namespace overlay
