#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>

namespace overlay {

enum class Direction : std::uint8_t { North = 0, East = 1, South = 2, West = 3 };

inline constexpr std::array<Direction, 4> kDirections{Direction::North, Direction::East,
                                                      Direction::South, Direction::West};

constexpr Direction opposite(Direction d) noexcept {
  return static_cast<Direction>((static_cast<int>(d) + 2) % 4);
}

constexpr int index_of(Direction d) noexcept { return static_cast<int>(d); }

char direction_letter(Direction d) noexcept;
std::optional<Direction> direction_from_letter(char c) noexcept;

// Row grows southward, column grows eastward.
struct Coord {
  int row = 0;
  int col = 0;

  friend constexpr auto operator<=>(const Coord&, const Coord&) = default;
};

constexpr Coord step(Coord c, Direction d) noexcept {
  switch (d) {
    case Direction::North: return {c.row - 1, c.col};
    case Direction::East: return {c.row, c.col + 1};
    case Direction::South: return {c.row + 1, c.col};
    case Direction::West: return {c.row, c.col - 1};
  }
  return c;
}

constexpr int manhattan(Coord a, Coord b) noexcept {
  return (a.row > b.row ? a.row - b.row : b.row - a.row) +
         (a.col > b.col ? a.col - b.col : b.col - a.col);
}

// Direction of `to` as seen from `from`; only defined for lattice neighbours.
std::optional<Direction> neighbour_direction(Coord from, Coord to) noexcept;

std::string to_string(Coord c);

}  // namespace overlay
