#include <algorithm>
#include <bit>
#include <map>
#include <set>

#include <fmt/format.h>

#include "overlay/error.hpp"
#include "overlay/jit.hpp"

namespace overlay {

std::string_view to_string(TileRole role) noexcept {
  return role == TileRole::Operator ? "operator" : "pass_through";
}

std::string_view to_string(PlacementMode mode) noexcept {
  return mode == PlacementMode::Dynamic ? "dynamic" : "static";
}

namespace {

constexpr std::uint32_t kMaxLen = (1u << 24) - 1;

struct Hop {
  std::size_t route = 0;
  Direction in = Direction::North;
  Direction out = Direction::North;
};

struct TilePorts {
  std::map<std::size_t, Direction> entry_from;  // producer node -> entry port
  std::set<Direction> exits;
  std::vector<Hop> hops;  // routes passing through
};

Instruction op(Opcode code, std::vector<Operand> operands = {}) { return Instruction{code, std::move(operands)}; }

class TileBuilder {
 public:
  TileBuilder(const FabricParams& params, Coord coord) : params_(params), coord_(coord) {}

  Src stream_bram(const std::string& name, std::vector<StreamBinding>& bindings) {
    for (std::size_t i = 0; i < brams_.size(); ++i) {
      if (brams_[i] == name) return Src::bram(static_cast<std::uint8_t>(i));
    }
    if (brams_.size() == 2) throw Error(Errc::EncodingError, fmt::format("{}: more than two input streams", to_string(coord_)));
    brams_.push_back(name);
    const auto b = static_cast<std::uint8_t>(brams_.size() - 1);
    bindings.push_back(StreamBinding{name, coord_, b});
    return Src::bram(b);
  }

  Src preset(float value, std::vector<RegisterPreset>& presets) {
    const auto bits = std::bit_cast<std::uint32_t>(value);
    for (const auto& p : presets) {
      if (p.bits == bits) return Src::reg(p.reg);
    }
    const auto reg = presets.size();
    // The last register is reserved for the reduction result.
    if (reg + 1 >= params_.registers) {
      throw Error(Errc::EncodingError, fmt::format("{}: out of registers for constants", to_string(coord_)));
    }
    presets.push_back(RegisterPreset{static_cast<std::uint8_t>(reg), bits});
    return Src::reg(static_cast<std::uint8_t>(reg));
  }

 private:
  const FabricParams& params_;
  Coord coord_;
  std::vector<std::string> brams_;
};

void append_links(const TilePorts& ports, bool hosts_node, std::vector<Instruction>& code) {
  std::set<Direction> consumes;
  for (const auto& [producer, dir] : ports.entry_from) consumes.insert(dir);
  for (Direction d : kDirections) {
    if (consumes.count(d)) code.push_back(op(setport_opcode(d, PortMode::Kind::Consume)));
  }
  for (Direction d : kDirections) {
    if (ports.exits.count(d)) code.push_back(op(setport_opcode(d, PortMode::Kind::Emit)));
  }
  for (const auto& hop : ports.hops) {
    auto instrs = port_mode_instructions(hop.in, PortMode::bypass(hop.out));
    if (instrs.size() > 1 && hosts_node) {
      throw Error(Errc::EncodingError, fmt::format("composed bypass on an operator tile"));
    }
    code.insert(code.end(), instrs.begin(), instrs.end());
  }
}

void check_encodable(const TileProgram& tile, std::size_t capacity) {
  for (const auto& instr : tile.code) {
    try {
      (void)encode(instr);
    } catch (const Error& e) {
      throw Error(Errc::EncodingError, fmt::format("{}: {}", to_string(tile.coord), e.what()));
    }
  }
  if (tile.code.size() > capacity) {
    throw Error(Errc::EncodingError, fmt::format("{}: {} instructions exceed the {}-word instruction BRAM",
                                                 to_string(tile.coord), tile.code.size(), capacity));
  }
}

}  // namespace

CompiledProgram codegen(const OperatorGraph& graph, const Placement& placement, const RoutePlan& routes,
                        const OverlayFabric& fabric, std::size_t n) {
  if (n > kMaxLen) throw Error(Errc::EncodingError, fmt::format("stream length {} exceeds the LEN field", n));
  validate_graph(graph);
  check_placement(graph, placement, fabric);

  CompiledProgram prog;
  prog.mode = placement.mode;
  prog.scenario = placement.scenario;
  prog.n = n;
  prog.graph = graph;
  prog.placement = placement;
  prog.routes = routes;
  prog.output = graph.output;
  prog.output_tile = placement.coords[graph.root];
  prog.rows = fabric.rows();
  prog.cols = fabric.cols();
  prog.sizing = fabric.sizing();
  prog.params = fabric.params();

  std::map<Coord, TilePorts> ports;
  std::map<Coord, std::size_t> host_of;
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    host_of[placement.coords[i]] = i;
    ports[placement.coords[i]];
  }
  for (std::size_t r = 0; r < routes.routes.size(); ++r) {
    const auto& path = routes.routes[r].path;
    if (path.size() < 2) throw Error(Errc::PortConflict, "degenerate route");
    ports[path.front()].exits.insert(*neighbour_direction(path[0], path[1]));
    const auto last = path.size() - 1;
    ports[path[last]].entry_from[routes.routes[r].producer] = *neighbour_direction(path[last], path[last - 1]);
    for (std::size_t i = 1; i < last; ++i) {
      ports[path[i]].hops.push_back(
          Hop{r, *neighbour_direction(path[i], path[i - 1]), *neighbour_direction(path[i], path[i + 1])});
    }
  }

  for (const auto& [coord, tp] : ports) {
    TileProgram tile;
    tile.coord = coord;
    const auto host = host_of.find(coord);
    append_links(tp, host != host_of.end(), tile.code);
    tile.code.push_back(op(Opcode::COMMIT_LINKS));
    tile.code.push_back(op(Opcode::SETLEN, {Len{static_cast<std::uint32_t>(n)}}));

    if (host == host_of.end()) {
      tile.role = TileRole::PassThrough;
    } else {
      const auto& node = graph.nodes[host->second];
      tile.role = TileRole::Operator;
      tile.node = node.id;
      tile.op_id = node.op.id;
      TileBuilder builder(fabric.params(), coord);
      std::vector<Src> srcs;
      for (const auto& in : node.inputs) {
        switch (in.kind) {
          case GraphInput::Kind::Node:
            srcs.push_back(Src::port(tp.entry_from.at(in.node)));
            break;
          case GraphInput::Kind::Stream:
            srcs.push_back(builder.stream_bram(in.stream, prog.bindings));
            break;
          case GraphInput::Kind::Constant:
            srcs.push_back(builder.preset(in.value, tile.presets));
            break;
        }
      }
      switch (node.role) {
        case NodeRole::Elementwise:
          tile.code.push_back(op(Opcode::VMUL, {srcs[0], srcs.size() > 1 ? srcs[1] : Src::none()}));
          break;
        case NodeRole::Select:
          tile.code.push_back(op(Opcode::SEL, {srcs[0], srcs[1], srcs.size() > 2 ? srcs[2] : Src::none()}));
          break;
        case NodeRole::Reduce: {
          tile.code.push_back(op(Opcode::CLRACC));
          const bool plain = std::bit_cast<std::uint32_t>(node.init) == 0u;
          tile.code.push_back(op(Opcode::VMAC, {srcs[0], plain ? Src::none() : builder.preset(node.init, tile.presets)}));
          break;
        }
      }
      if (node.id == graph.root && graph.output == OutputKind::Scalar) {
        if (fabric.params().registers == 0) throw Error(Errc::EncodingError, "no register for the result");
        const Reg result{static_cast<std::uint8_t>(fabric.params().registers - 1)};
        tile.code.push_back(op(Opcode::RDACC, {result}));
        tile.code.push_back(op(Opcode::STB0, {result, Addr{0}}));
      }
    }
    tile.code.push_back(op(Opcode::HALT));
    check_encodable(tile, fabric.params().instr_capacity);
    prog.tiles.push_back(std::move(tile));
  }

  if (placement.mode == PlacementMode::Dynamic) {
    for (auto id : graph.topological_order()) {
      prog.reconfig.push_back(ReconfigEntry{placement.coords[id], graph.nodes[id].op.id});
    }
  } else {
    for (const Tile& t : fabric.tiles()) {
      if (t.loaded) prog.residents.emplace(t.coord, *t.loaded);
    }
  }
  return prog;
}

CompiledProgram compile(const PatternProgram& program, const LibraryManifest& lib, const OverlayFabric& fabric,
                        const CompileOptions& options) {
  const auto graph = lower(program, lib);
  Placement placement = options.mode == PlacementMode::Dynamic
                            ? place_dynamic(graph, fabric, options.placement)
                            : place_static(graph, residents_of(fabric), options.scenario);
  const auto routes = route(graph, placement, fabric);
  return codegen(graph, placement, routes, fabric, options.n);
}

OverlayFabric target_fabric(const CompiledProgram& program) {
  OverlayFabric fabric = OverlayFabric::build(program.rows, program.cols, program.sizing, program.params);
  for (const auto& [coord, op] : program.residents) fabric.load_operator(coord, op);
  return fabric;
}

}  // namespace overlay
