#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "overlay/fabric.hpp"
#include "overlay/isa.hpp"
#include "overlay/oplib.hpp"
#include "overlay/pattern.hpp"

namespace overlay {

// ---------------------------------------------------------------------------
// Operator graph

enum class NodeRole {
  Elementwise,  // op(x) or op(x, y) per element
  Reduce,       // left fold of op over the stream, from `init`
  Select,       // join of a filter (cond, value) or a cond diamond (cond, then, else)
};

std::string_view to_string(NodeRole role) noexcept;

struct GraphInput {
  enum class Kind { Node, Stream, Constant };
  Kind kind = Kind::Node;
  std::size_t node = 0;
  std::string stream;
  float value = 0.0f;

  static GraphInput from_node(std::size_t id) { return {Kind::Node, id, {}, 0.0f}; }
  static GraphInput from_stream(std::string name) { return {Kind::Stream, 0, std::move(name), 0.0f}; }
  static GraphInput from_constant(float v) { return {Kind::Constant, 0, {}, v}; }

  friend bool operator==(const GraphInput&, const GraphInput&) = default;
};

struct GraphNode {
  std::size_t id = 0;
  NodeRole role = NodeRole::Elementwise;
  OperatorDescriptor op;
  std::vector<GraphInput> inputs;
  float init = 0.0f;

  friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

enum class OutputKind { Stream, Scalar, None };

std::string_view to_string(OutputKind kind) noexcept;

struct GraphEdge {
  std::size_t producer = 0;
  std::size_t consumer = 0;
  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

struct OperatorGraph {
  std::vector<GraphNode> nodes;  // nodes[i].id == i
  std::size_t root = 0;
  OutputKind output = OutputKind::Stream;
  std::vector<std::string> streams;  // external input streams, sorted

  // Node-to-node dependencies, one per (producer, consumer) pair, ordered by
  // consumer then by first input slot.
  std::vector<GraphEdge> edges() const;
  std::vector<std::size_t> predecessors(std::size_t id) const;
  std::vector<std::size_t> successors(std::size_t id) const;
  // Kahn order, smallest id first among ready nodes.
  std::vector<std::size_t> topological_order() const;

  friend bool operator==(const OperatorGraph&, const OperatorGraph&) = default;
};

// Throws Error{ArityMismatch} on a node whose input count does not match its
// role, and Error{TypeMismatch} on cycles or dangling node references.
void validate_graph(const OperatorGraph& graph);

// Pattern tree -> operator graph.  zipmap(mul)->reduce(add) becomes a
// two-node chain; filter becomes predicate -> select; cond becomes the
// speculative diamond {predicate, then, else} -> select.  Select nodes use the
// library's pass operator.
// Throws Error{UnknownKernel | ArityMismatch | TypeMismatch}.
OperatorGraph lower(const PatternProgram& program, const LibraryManifest& lib);

// Linear chain op0 -> op1 -> ... ; binary stages take a constant 1.0 as y,
// the head reads stream A (and B when binary).
OperatorGraph make_chain(std::span<const OperatorDescriptor> ops);

// ---------------------------------------------------------------------------
// Placement

enum class PlacementMode { Dynamic, Static };

std::string_view to_string(PlacementMode mode) noexcept;

struct Placement {
  PlacementMode mode = PlacementMode::Dynamic;
  int scenario = 0;
  std::vector<Coord> coords;  // indexed by node id

  friend bool operator==(const Placement&, const Placement&) = default;
};

// Sum over graph edges of (manhattan distance - 1): the pass-through tiles a
// conflict-free dimension-ordered route set needs.
std::size_t placement_pass_throughs(const OperatorGraph& graph, const Placement& placement);

// Throws Error{ResourceOverflow} if an operator does not fit its tile class,
// Error{PortConflict} if two nodes share a tile.
void check_placement(const OperatorGraph& graph, const Placement& placement,
                     const OverlayFabric& fabric);

struct PlacementOptions {
  // Node expansions the backtracking search may spend before settling for
  // the plain greedy assignment.
  std::size_t search_budget = 200'000;
};

// Contiguity-first placement on the free (unloaded) tiles of `fabric`.
// Nodes are visited in topological order; candidate tiles are tried in greedy
// order (least total distance to placed predecessors, then smallest region
// that fits, then row-major).  A bounded backtracking search over that order
// raises the allowed pass-through total from 0 until a placement exists, so
// small graphs get a minimum-pass-through placement.  Only assignments that
// route() accepts are returned.
// Throws Error{InsufficientTiles | NoFeasibleTile | PortConflict}.
Placement place_dynamic(const OperatorGraph& graph, const OverlayFabric& fabric,
                        const PlacementOptions& options = {});

using ResidentMap = std::map<Coord, std::string>;

// Resident operators of a statically configured fabric.
ResidentMap residents_of(const OverlayFabric& fabric);

// The fixed 3x3 overlay used for the static scenarios: mul at (1,0), add at
// (1,1), (1,2) and (2,2).  For the dot-product graph, scenario k binds the
// reduction to the add k+1 steps down the candidate list, giving exactly k
// pass-through tiles.
ResidentMap static_overlay_residents();

// Copy of `base` with every region cleared and `residents` loaded.
OverlayFabric make_static_overlay(const OverlayFabric& base, const LibraryManifest& lib,
                                  const ResidentMap& residents = static_overlay_residents());

// Binds nodes to resident operators.  Source nodes take their first
// candidate; a node with predecessors takes candidate `scenario` when its
// candidates are ranked by distance to the placed predecessors.
// Throws Error{KernelNotResident | BadScenario}.
Placement place_static(const OperatorGraph& graph, const ResidentMap& residents, int scenario);

// ---------------------------------------------------------------------------
// Routing

struct PortSetting {
  Coord coord;
  Direction dir = Direction::North;
  PortMode mode;
  friend bool operator==(const PortSetting&, const PortSetting&) = default;
};

struct Route {
  std::size_t producer = 0;
  std::size_t consumer = 0;
  std::vector<Coord> path;  // producer tile first, consumer tile last

  std::size_t pass_throughs() const noexcept { return path.size() < 2 ? 0 : path.size() - 2; }
  friend bool operator==(const Route&, const Route&) = default;
};

struct RoutePlan {
  std::vector<Route> routes;       // same order as OperatorGraph::edges()
  std::vector<PortSetting> ports;  // every port the routes claim

  std::size_t total_pass_throughs() const noexcept;
  // Interior tiles of every route, with multiplicity.
  std::vector<Coord> pass_through_tiles() const;

  friend bool operator==(const RoutePlan&, const RoutePlan&) = default;
};

// Dimension-ordered routing: along the row first (XY), falling back to
// column-first (YX) when XY would reuse a claimed port.  Interior tiles get a
// Bypass mode.  The four bypass pairs without a hardware opcode are only
// available on tiles that host no graph node.
// Throws Error{PortConflict} when both orders are blocked.
RoutePlan route(const OperatorGraph& graph, const Placement& placement,
                const OverlayFabric& fabric);

// ---------------------------------------------------------------------------
// Code generation

enum class TileRole { Operator, PassThrough };

std::string_view to_string(TileRole role) noexcept;

struct RegisterPreset {
  std::uint8_t reg = 0;
  std::uint32_t bits = 0;
  friend bool operator==(const RegisterPreset&, const RegisterPreset&) = default;
};

struct TileProgram {
  Coord coord;
  TileRole role = TileRole::Operator;
  std::optional<std::size_t> node;
  std::string op_id;  // expected resident operator, empty for pass-through tiles
  std::vector<Instruction> code;
  std::vector<RegisterPreset> presets;  // written by the host before start

  friend bool operator==(const TileProgram&, const TileProgram&) = default;
};

// External stream `stream` is streamed by the host into data BRAM `bram` of
// the tile at `coord`.
struct StreamBinding {
  std::string stream;
  Coord coord;
  std::uint8_t bram = 0;
  friend bool operator==(const StreamBinding&, const StreamBinding&) = default;
};

struct ReconfigEntry {
  Coord coord;
  std::string op_id;
  friend bool operator==(const ReconfigEntry&, const ReconfigEntry&) = default;
};

struct CompiledProgram {
  PlacementMode mode = PlacementMode::Dynamic;
  int scenario = 0;
  std::size_t n = 0;

  OperatorGraph graph;
  Placement placement;
  RoutePlan routes;

  std::vector<TileProgram> tiles;       // row-major by coord
  std::vector<ReconfigEntry> reconfig;  // placement order; empty for static
  std::vector<StreamBinding> bindings;
  Coord output_tile;                    // results land in data BRAM 0 here
  OutputKind output = OutputKind::Stream;

  int rows = 0;
  int cols = 0;
  SizingPolicy sizing = SizingPolicy::RowMajor;
  FabricParams params;
  std::map<Coord, OperatorDescriptor> residents;  // static mode: what must already be loaded

  friend bool operator==(const CompiledProgram&, const CompiledProgram&) = default;
};

// Throws Error{EncodingError} if an emitted instruction fails to encode or a
// tile stream overflows the instruction BRAM.
CompiledProgram codegen(const OperatorGraph& graph, const Placement& placement,
                        const RoutePlan& routes, const OverlayFabric& fabric, std::size_t n);

struct CompileOptions {
  PlacementMode mode = PlacementMode::Dynamic;
  int scenario = 0;
  std::size_t n = 2048;
  PlacementOptions placement;
};

// lower -> place -> route -> codegen.  Static mode uses the operators already
// loaded on `fabric` as the resident set.
CompiledProgram compile(const PatternProgram& program, const LibraryManifest& lib,
                        const OverlayFabric& fabric, const CompileOptions& options);

// Fabric the program expects to run on: its shape, plus the resident
// operators for static programs.
OverlayFabric target_fabric(const CompiledProgram& program);

// Binary image: after the ISA header, word sequence
//   tile_count, then per tile: (row << 16 | col), instr_count, instr words...,
//   preset_count, (reg, bits) pairs.
std::vector<std::uint8_t> write_program_image(const CompiledProgram& program);

// JSON sidecar: everything except the instruction streams.
std::string program_sidecar_json(const CompiledProgram& program);

// Throws Error{SchemaError} when image and sidecar disagree.
CompiledProgram load_compiled(std::span<const std::uint8_t> image, std::string_view sidecar_json);

}  // namespace overlay
