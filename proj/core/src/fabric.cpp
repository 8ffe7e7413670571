#include "overlay/fabric.hpp"

#include <algorithm>
#include <charconv>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "overlay/error.hpp"

namespace overlay {

std::string to_string(PortMode mode) {
  switch (mode.kind) {
    case PortMode::Kind::Idle: return "idle";
    case PortMode::Kind::Consume: return "consume";
    case PortMode::Kind::Emit: return "emit";
    case PortMode::Kind::Bypass: return fmt::format("bypass:{}", direction_letter(mode.to));
  }
  return "?";
}

std::string_view to_string(SizingPolicy policy) noexcept {
  return policy == SizingPolicy::RowMajor ? "row_major" : "spread";
}

std::optional<SizingPolicy> sizing_policy_from_string(std::string_view name) noexcept {
  if (name == "row_major" || name == "default") return SizingPolicy::RowMajor;
  if (name == "spread") return SizingPolicy::Spread;
  return std::nullopt;
}

std::vector<TileClass> tile_layout(int rows, int cols, SizingPolicy sizing) {
  const auto total = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  const std::size_t large = (total + 3) / 4;
  std::vector<TileClass> layout(total, TileClass::Small);
  for (std::size_t k = 0; k < large; ++k) {
    const std::size_t pos = sizing == SizingPolicy::RowMajor ? k : k * total / large;
    layout[pos] = TileClass::Large;
  }
  return layout;
}

OverlayFabric OverlayFabric::build(int rows, int cols, SizingPolicy sizing, FabricParams params) {
  if (rows < 1 || cols < 1) {
    throw Error(Errc::InvalidDimensions, fmt::format("{}x{}", rows, cols));
  }
  if (params.registers > 16) {
    throw Error(Errc::InvalidDimensions, "register file is addressed by a 4-bit index");
  }
  OverlayFabric fabric;
  fabric.rows_ = rows;
  fabric.cols_ = cols;
  fabric.sizing_ = sizing;
  fabric.params_ = params;
  const auto layout = tile_layout(rows, cols, sizing);
  fabric.tiles_.reserve(layout.size());
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      Tile t;
      t.coord = {r, c};
      t.cls = layout[static_cast<std::size_t>(r * cols + c)];
      t.registers.assign(params.registers, 0);
      t.instr_bram.assign(params.instr_capacity, 0);
      for (auto& bram : t.data_brams) bram.assign(params.data_words, 0.0f);
      fabric.tiles_.push_back(std::move(t));
    }
  }
  return fabric;
}

bool OverlayFabric::contains(Coord c) const noexcept {
  return c.row >= 0 && c.col >= 0 && c.row < rows_ && c.col < cols_;
}

const Tile& OverlayFabric::tile(Coord c) const {
  if (!contains(c)) throw Error(Errc::UnknownCoordinate, to_string(c));
  return tiles_[static_cast<std::size_t>(c.row * cols_ + c.col)];
}

Tile& OverlayFabric::mutable_tile(Coord c) {
  if (!contains(c)) throw Error(Errc::UnknownCoordinate, to_string(c));
  return tiles_[static_cast<std::size_t>(c.row * cols_ + c.col)];
}

std::size_t OverlayFabric::large_tile_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(tiles_.begin(), tiles_.end(), [](const Tile& t) { return t.cls == TileClass::Large; }));
}

void OverlayFabric::load_operator(Coord c, const OperatorDescriptor& op) {
  Tile& t = mutable_tile(c);
  if (auto field = op.footprint.first_overflow(budget_of(t.cls))) {
    throw Error(Errc::ResourceOverflow,
                fmt::format("{} in {} tile {}: {} exceeds budget", op.id, to_string(t.cls),
                            to_string(c), field_name(*field)));
  }
  t.loaded = op;
  ++reconfig_count_;
}

void OverlayFabric::configure_port(Coord c, Direction dir, PortMode mode) {
  Tile& t = mutable_tile(c);
  const bool has_neighbour = contains(step(c, dir));
  switch (mode.kind) {
    case PortMode::Kind::Idle:
      break;
    case PortMode::Kind::Consume:
    case PortMode::Kind::Emit:
      if (!has_neighbour && !params_.edge_io) {
        throw Error(Errc::BoundaryViolation,
                    fmt::format("{} port {} faces the fabric edge", to_string(c), direction_letter(dir)));
      }
      break;
    case PortMode::Kind::Bypass:
      if (mode.to == dir) {
        throw Error(Errc::IllegalBypass,
                    fmt::format("{} bypass back out of entry port {}", to_string(c), direction_letter(dir)));
      }
      if (!has_neighbour || !contains(step(c, mode.to))) {
        throw Error(Errc::BoundaryViolation,
                    fmt::format("{} bypass {}->{} leaves the mesh", to_string(c), direction_letter(dir),
                                direction_letter(mode.to)));
      }
      break;
  }
  t.ports[index_of(dir)] = mode;
}

void OverlayFabric::store_program(Coord c, std::span<const std::uint32_t> words) {
  Tile& t = mutable_tile(c);
  if (words.size() > t.instr_bram.size()) {
    throw Error(Errc::CapacityExceeded, fmt::format("{}: {} instructions, BRAM holds {}", to_string(c),
                                                    words.size(), t.instr_bram.size()));
  }
  std::fill(std::copy(words.begin(), words.end(), t.instr_bram.begin()), t.instr_bram.end(), 0u);
}

void OverlayFabric::clear_all() {
  for (Tile& t : tiles_) {
    t.loaded.reset();
    t.ports.fill(PortMode::idle());
    std::fill(t.registers.begin(), t.registers.end(), 0u);
    std::fill(t.instr_bram.begin(), t.instr_bram.end(), 0u);
    for (auto& bram : t.data_brams) std::fill(bram.begin(), bram.end(), 0.0f);
  }
}

void OverlayFabric::check_invariants() const {
  if (tiles_.size() != static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_)) {
    throw Error(Errc::InvalidDimensions, "incomplete grid");
  }
  const auto layout = tile_layout(rows_, cols_, sizing_);
  for (std::size_t i = 0; i < tiles_.size(); ++i) {
    const Tile& t = tiles_[i];
    if (t.coord != Coord{static_cast<int>(i) / cols_, static_cast<int>(i) % cols_}) {
      throw Error(Errc::InvalidDimensions, "tile coordinates out of order");
    }
    if (t.cls != layout[i]) throw Error(Errc::InvalidDimensions, "tile class differs from sizing policy");
    if (t.loaded && !fits(*t.loaded, t.cls)) {
      throw Error(Errc::ResourceOverflow, fmt::format("{} holds {}", to_string(t.coord), t.loaded->id));
    }
  }
}

bool OverlayFabric::same_state(const OverlayFabric& other) const noexcept {
  return rows_ == other.rows_ && cols_ == other.cols_ && sizing_ == other.sizing_ &&
         params_ == other.params_ && tiles_ == other.tiles_;
}

std::pair<int, int> parse_mesh(std::string_view text) {
  const auto x = text.find_first_of("xX");
  int rows = 0;
  int cols = 0;
  if (x == std::string_view::npos) throw Error(Errc::ParseError, fmt::format("mesh '{}': expected RxC", text));
  const auto lhs = text.substr(0, x);
  const auto rhs = text.substr(x + 1);
  auto r1 = std::from_chars(lhs.data(), lhs.data() + lhs.size(), rows);
  auto r2 = std::from_chars(rhs.data(), rhs.data() + rhs.size(), cols);
  if (r1.ec != std::errc{} || r1.ptr != lhs.data() + lhs.size() || r2.ec != std::errc{} ||
      r2.ptr != rhs.data() + rhs.size()) {
    throw Error(Errc::ParseError, fmt::format("mesh '{}': expected RxC", text));
  }
  return {rows, cols};
}

std::string fabric_to_json(const OverlayFabric& fabric) {
  nlohmann::json tiles = nlohmann::json::array();
  for (const Tile& t : fabric.tiles()) {
    tiles.push_back({{"coord", {t.coord.row, t.coord.col}}, {"class", to_string(t.cls)}});
  }
  const auto& p = fabric.params();
  nlohmann::json doc = {
      {"rows", fabric.rows()},
      {"cols", fabric.cols()},
      {"sizing_policy", to_string(fabric.sizing())},
      {"params",
       {{"instr_capacity", p.instr_capacity},
        {"data_words", p.data_words},
        {"registers", p.registers},
        {"edge_io", p.edge_io}}},
      {"tiles", std::move(tiles)},
  };
  return doc.dump(2);
}

OverlayFabric fabric_from_json(std::string_view json_text) {
  using nlohmann::json;
  try {
    const json doc = json::parse(json_text);
    const int rows = doc.at("rows").get<int>();
    const int cols = doc.at("cols").get<int>();
    const auto policy_name = doc.value("sizing_policy", std::string{"row_major"});
    const auto policy = sizing_policy_from_string(policy_name);
    if (!policy) throw Error(Errc::SchemaError, fmt::format("unknown sizing_policy '{}'", policy_name));
    FabricParams params;
    if (doc.contains("params")) {
      const auto& p = doc.at("params");
      params.instr_capacity = p.value("instr_capacity", params.instr_capacity);
      params.data_words = p.value("data_words", params.data_words);
      params.registers = p.value("registers", params.registers);
      params.edge_io = p.value("edge_io", params.edge_io);
    }
    OverlayFabric fabric = OverlayFabric::build(rows, cols, *policy, params);
    if (doc.contains("tiles")) {
      const auto& tiles = doc.at("tiles");
      if (!tiles.is_array() || tiles.size() != fabric.tiles().size()) {
        throw Error(Errc::SchemaError, "tiles must list every tile of the grid");
      }
      for (const auto& entry : tiles) {
        const auto coord = entry.at("coord");
        const Coord c{coord.at(0).get<int>(), coord.at(1).get<int>()};
        const auto cls = tile_class_from_string(entry.at("class").get<std::string>());
        if (!cls || !fabric.contains(c) || fabric.tile(c).cls != *cls) {
          throw Error(Errc::SchemaError,
                      fmt::format("tile {} does not match the {} layout", to_string(c), policy_name));
        }
      }
    }
    return fabric;
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaError, e.what());
  }
}

}  // namespace overlay
