#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "overlay/mesh.hpp"
#include "overlay/oplib.hpp"
#include "overlay/resources.hpp"

namespace overlay {

struct PortMode {
  enum class Kind : std::uint8_t { Idle, Consume, Emit, Bypass };

  Kind kind = Kind::Idle;
  Direction to = Direction::North;  // exit port, meaningful for Bypass only

  static constexpr PortMode idle() noexcept { return {}; }
  static constexpr PortMode consume() noexcept { return {Kind::Consume, Direction::North}; }
  static constexpr PortMode emit() noexcept { return {Kind::Emit, Direction::North}; }
  static constexpr PortMode bypass(Direction to) noexcept { return {Kind::Bypass, to}; }

  friend constexpr bool operator==(const PortMode& a, const PortMode& b) noexcept {
    return a.kind == b.kind && (a.kind != Kind::Bypass || a.to == b.to);
  }
};

std::string to_string(PortMode mode);

// Where the ceil(N/4) Large regions go.
enum class SizingPolicy {
  RowMajor,  // first positions in row-major order (default)
  Spread,    // evenly spaced over the row-major sequence
};

std::string_view to_string(SizingPolicy policy) noexcept;
std::optional<SizingPolicy> sizing_policy_from_string(std::string_view name) noexcept;

struct FabricParams {
  std::size_t instr_capacity = 256;  // instructions per instruction BRAM
  std::size_t data_words = 1024;     // scalar words per data BRAM
  std::size_t registers = 16;        // register file size (at most 16: 4-bit index)
  bool edge_io = true;               // edge-facing ports are legal stream endpoints

  friend bool operator==(const FabricParams&, const FabricParams&) = default;
};

struct Tile {
  Coord coord;
  TileClass cls = TileClass::Small;
  std::optional<OperatorDescriptor> loaded;
  std::vector<std::uint32_t> registers;
  std::vector<std::uint32_t> instr_bram;
  std::array<std::vector<float>, 2> data_brams;
  std::array<PortMode, 4> ports{};

  const PortMode& port(Direction d) const noexcept { return ports[index_of(d)]; }

  friend bool operator==(const Tile&, const Tile&) = default;
};

class OverlayFabric {
 public:
  // Throws Error{InvalidDimensions} if rows or cols is 0.
  static OverlayFabric build(int rows, int cols, SizingPolicy sizing = SizingPolicy::RowMajor,
                             FabricParams params = {});

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  SizingPolicy sizing() const noexcept { return sizing_; }
  const FabricParams& params() const noexcept { return params_; }
  std::size_t reconfig_count() const noexcept { return reconfig_count_; }

  bool contains(Coord c) const noexcept;
  const Tile& tile(Coord c) const;  // Error{UnknownCoordinate}
  std::span<const Tile> tiles() const noexcept { return tiles_; }
  std::size_t large_tile_count() const noexcept;

  // PR download of `op` into the region at `c`.  Counts as a reconfiguration
  // even when it replaces an operator.
  // Throws Error{UnknownCoordinate | ResourceOverflow}.
  void load_operator(Coord c, const OperatorDescriptor& op);

  // Throws Error{UnknownCoordinate | IllegalBypass | BoundaryViolation}.
  void configure_port(Coord c, Direction dir, PortMode mode);

  // Fills the tile's instruction BRAM.  Throws Error{CapacityExceeded}.
  void store_program(Coord c, std::span<const std::uint32_t> words);

  // Unloads every region, idles every port, zeroes storage.  Keeps
  // reconfig_count: it is load history, not configuration state.
  void clear_all();

  // Throws Error{ResourceOverflow} naming the first offending tile.
  void check_invariants() const;

  // Equality of configuration state, ignoring reconfig_count.
  bool same_state(const OverlayFabric& other) const noexcept;

  friend bool operator==(const OverlayFabric&, const OverlayFabric&) = default;

 private:
  OverlayFabric() = default;
  Tile& mutable_tile(Coord c);

  int rows_ = 0;
  int cols_ = 0;
  SizingPolicy sizing_ = SizingPolicy::RowMajor;
  FabricParams params_;
  std::vector<Tile> tiles_;
  std::size_t reconfig_count_ = 0;
};

inline OverlayFabric build_fabric(int rows, int cols, SizingPolicy sizing = SizingPolicy::RowMajor,
                                  FabricParams params = {}) {
  return OverlayFabric::build(rows, cols, sizing, params);
}

// Tile classes the sizing policy assigns, row-major.
std::vector<TileClass> tile_layout(int rows, int cols, SizingPolicy sizing);

// JSON: {rows, cols, sizing_policy, params:{...}, tiles:[{coord:[r,c], class}]}
std::string fabric_to_json(const OverlayFabric& fabric);
OverlayFabric fabric_from_json(std::string_view json_text);

// Parses "RxC" (e.g. "3x3").  Throws Error{ParseError}.
std::pair<int, int> parse_mesh(std::string_view text);

}  // namespace overlay
