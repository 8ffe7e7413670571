#include <bit>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "overlay/error.hpp"
#include "overlay/jit.hpp"

namespace overlay {
namespace {

using nlohmann::json;

constexpr std::string_view kFormat = "overlay_forge.program";
constexpr int kSidecarVersion = 1;

[[noreturn]] void schema(std::string_view what) { throw Error(Errc::SchemaError, std::string(what)); }

json coord_json(Coord c) { return json::array({c.row, c.col}); }

Coord coord_from(const json& j) {
  if (!j.is_array() || j.size() != 2) schema("coordinate must be [row, col]");
  return {j.at(0).get<int>(), j.at(1).get<int>()};
}

json float_json(float v) { return {{"value", v}, {"bits", std::bit_cast<std::uint32_t>(v)}}; }

float float_from(const json& j) { return std::bit_cast<float>(j.at("bits").get<std::uint32_t>()); }

json op_json(const OperatorDescriptor& op) {
  return {{"id", op.id},
          {"kernel", kernel_name(op.kernel)},
          {"arity", op.arity},
          {"dsp", op.footprint.dsp},
          {"ff", op.footprint.ff},
          {"lut", op.footprint.lut},
          {"latency", op.latency_cycles},
          {"ii", op.initiation_interval}};
}

OperatorDescriptor op_from(const json& j) {
  OperatorDescriptor op;
  op.id = j.at("id").get<std::string>();
  const auto kernel = kernel_from_name(j.at("kernel").get<std::string>());
  if (!kernel) schema(fmt::format("operator {}: unknown kernel", op.id));
  op.kernel = *kernel;
  op.arity = j.at("arity").get<int>();
  op.footprint = {j.at("dsp").get<std::uint32_t>(), j.at("ff").get<std::uint32_t>(), j.at("lut").get<std::uint32_t>()};
  op.latency_cycles = j.at("latency").get<std::uint32_t>();
  op.initiation_interval = j.at("ii").get<std::uint32_t>();
  return op;
}

template <typename E>
E enum_from(const json& j, std::initializer_list<E> values) {
  const auto name = j.get<std::string>();
  for (E v : values) {
    if (to_string(v) == name) return v;
  }
  schema(fmt::format("unknown value '{}'", name));
}

PortMode port_mode_from(const std::string& s) {
  if (s == "idle") return PortMode::idle();
  if (s == "consume") return PortMode::consume();
  if (s == "emit") return PortMode::emit();
  if (s.size() == 8 && s.rfind("bypass:", 0) == 0) {
    if (auto d = direction_from_letter(s[7])) return PortMode::bypass(*d);
  }
  schema(fmt::format("unknown port mode '{}'", s));
}

Direction direction_from(const json& j) {
  const auto s = j.get<std::string>();
  if (s.size() == 1) {
    if (auto d = direction_from_letter(s[0])) return *d;
  }
  schema(fmt::format("unknown direction '{}'", s));
}

json graph_json(const OperatorGraph& g) {
  json nodes = json::array();
  for (const auto& node : g.nodes) {
    json inputs = json::array();
    for (const auto& in : node.inputs) {
      switch (in.kind) {
        case GraphInput::Kind::Node: inputs.push_back({{"node", in.node}}); break;
        case GraphInput::Kind::Stream: inputs.push_back({{"stream", in.stream}}); break;
        case GraphInput::Kind::Constant: inputs.push_back({{"const", float_json(in.value)}}); break;
      }
    }
    nodes.push_back({{"id", node.id},
                     {"role", to_string(node.role)},
                     {"op", op_json(node.op)},
                     {"inputs", std::move(inputs)},
                     {"init", float_json(node.init)}});
  }
  return {{"root", g.root}, {"output", to_string(g.output)}, {"streams", g.streams}, {"nodes", std::move(nodes)}};
}

OperatorGraph graph_from(const json& j) {
  OperatorGraph g;
  g.root = j.at("root").get<std::size_t>();
  g.output = enum_from(j.at("output"), {OutputKind::Stream, OutputKind::Scalar, OutputKind::None});
  g.streams = j.at("streams").get<std::vector<std::string>>();
  for (const auto& jn : j.at("nodes")) {
    GraphNode node;
    node.id = jn.at("id").get<std::size_t>();
    node.role = enum_from(jn.at("role"), {NodeRole::Elementwise, NodeRole::Reduce, NodeRole::Select});
    node.op = op_from(jn.at("op"));
    node.init = float_from(jn.at("init"));
    for (const auto& in : jn.at("inputs")) {
      if (in.contains("node")) {
        node.inputs.push_back(GraphInput::from_node(in.at("node").get<std::size_t>()));
      } else if (in.contains("stream")) {
        node.inputs.push_back(GraphInput::from_stream(in.at("stream").get<std::string>()));
      } else {
        node.inputs.push_back(GraphInput::from_constant(float_from(in.at("const"))));
      }
    }
    g.nodes.push_back(std::move(node));
  }
  validate_graph(g);
  return g;
}

class WordReader {
 public:
  explicit WordReader(std::vector<std::uint32_t> words) : words_(std::move(words)) {}
  std::uint32_t next() {
    if (pos_ >= words_.size()) schema("program image truncated");
    return words_[pos_++];
  }
  bool done() const { return pos_ == words_.size(); }

 private:
  std::vector<std::uint32_t> words_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> write_program_image(const CompiledProgram& program) {
  std::vector<std::uint32_t> words;
  words.push_back(static_cast<std::uint32_t>(program.tiles.size()));
  for (const auto& tile : program.tiles) {
    words.push_back(static_cast<std::uint32_t>(tile.coord.row) << 16 | static_cast<std::uint32_t>(tile.coord.col));
    words.push_back(static_cast<std::uint32_t>(tile.code.size()));
    for (const auto& instr : tile.code) words.push_back(encode(instr));
    words.push_back(static_cast<std::uint32_t>(tile.presets.size()));
    for (const auto& p : tile.presets) {
      words.push_back(p.reg);
      words.push_back(p.bits);
    }
  }
  return write_image(words);
}

std::string program_sidecar_json(const CompiledProgram& program) {
  json placement = json::array();
  for (Coord c : program.placement.coords) placement.push_back(coord_json(c));

  json routes = json::array();
  for (const auto& r : program.routes.routes) {
    json path = json::array();
    for (Coord c : r.path) path.push_back(coord_json(c));
    routes.push_back({{"producer", r.producer},
                      {"consumer", r.consumer},
                      {"path", std::move(path)},
                      {"pass_through", r.pass_throughs()}});
  }

  json ports = json::array();
  for (const auto& p : program.routes.ports) {
    ports.push_back({{"coord", coord_json(p.coord)},
                     {"dir", std::string(1, direction_letter(p.dir))},
                     {"mode", to_string(p.mode)}});
  }

  json reconfig = json::array();
  for (const auto& r : program.reconfig) reconfig.push_back({{"coord", coord_json(r.coord)}, {"op", r.op_id}});

  json bindings = json::array();
  for (const auto& b : program.bindings) {
    bindings.push_back({{"stream", b.stream}, {"coord", coord_json(b.coord)}, {"bram", b.bram}});
  }

  json residents = json::array();
  for (const auto& [coord, op] : program.residents) {
    residents.push_back({{"coord", coord_json(coord)}, {"op", op_json(op)}});
  }

  json tiles = json::array();
  for (const auto& t : program.tiles) {
    json entry = {{"coord", coord_json(t.coord)},
                  {"role", to_string(t.role)},
                  {"op", t.op_id},
                  {"instructions", t.code.size()},
                  {"presets", t.presets.size()}};
    if (t.node) entry["node"] = *t.node;
    tiles.push_back(std::move(entry));
  }

  const auto& p = program.params;
  json doc = {
      {"format", kFormat},
      {"version", kSidecarVersion},
      {"mode", to_string(program.mode)},
      {"scenario", program.scenario},
      {"n", program.n},
      {"fabric",
       {{"rows", program.rows},
        {"cols", program.cols},
        {"sizing_policy", to_string(program.sizing)},
        {"params",
         {{"instr_capacity", p.instr_capacity},
          {"data_words", p.data_words},
          {"registers", p.registers},
          {"edge_io", p.edge_io}}}}},
      {"graph", graph_json(program.graph)},
      {"placement", std::move(placement)},
      {"routes", std::move(routes)},
      {"pass_through_total", program.routes.total_pass_throughs()},
      {"ports", std::move(ports)},
      {"reconfig_plan", std::move(reconfig)},
      {"bindings", std::move(bindings)},
      {"output", {{"coord", coord_json(program.output_tile)}, {"kind", to_string(program.output)}}},
      {"residents", std::move(residents)},
      {"tiles", std::move(tiles)},
  };
  return doc.dump(2);
}

CompiledProgram load_compiled(std::span<const std::uint8_t> image, std::string_view sidecar_json) {
  CompiledProgram prog;
  try {
    const json doc = json::parse(sidecar_json);
    if (doc.at("format").get<std::string>() != kFormat) schema("not a program sidecar");
    if (doc.at("version").get<int>() != kSidecarVersion) schema("unsupported sidecar version");
    prog.mode = enum_from(doc.at("mode"), {PlacementMode::Dynamic, PlacementMode::Static});
    prog.scenario = doc.at("scenario").get<int>();
    prog.n = doc.at("n").get<std::size_t>();

    const auto& fab = doc.at("fabric");
    prog.rows = fab.at("rows").get<int>();
    prog.cols = fab.at("cols").get<int>();
    const auto sizing = sizing_policy_from_string(fab.at("sizing_policy").get<std::string>());
    if (!sizing) schema("unknown sizing_policy");
    prog.sizing = *sizing;
    const auto& params = fab.at("params");
    prog.params.instr_capacity = params.at("instr_capacity").get<std::size_t>();
    prog.params.data_words = params.at("data_words").get<std::size_t>();
    prog.params.registers = params.at("registers").get<std::size_t>();
    prog.params.edge_io = params.at("edge_io").get<bool>();

    prog.graph = graph_from(doc.at("graph"));
    prog.placement.mode = prog.mode;
    prog.placement.scenario = prog.scenario;
    for (const auto& c : doc.at("placement")) prog.placement.coords.push_back(coord_from(c));
    if (prog.placement.coords.size() != prog.graph.nodes.size()) schema("placement does not cover the graph");

    for (const auto& r : doc.at("routes")) {
      Route route{r.at("producer").get<std::size_t>(), r.at("consumer").get<std::size_t>(), {}};
      for (const auto& c : r.at("path")) route.path.push_back(coord_from(c));
      prog.routes.routes.push_back(std::move(route));
    }
    for (const auto& p : doc.at("ports")) {
      prog.routes.ports.push_back(
          {coord_from(p.at("coord")), direction_from(p.at("dir")), port_mode_from(p.at("mode").get<std::string>())});
    }
    for (const auto& r : doc.at("reconfig_plan")) {
      prog.reconfig.push_back({coord_from(r.at("coord")), r.at("op").get<std::string>()});
    }
    for (const auto& b : doc.at("bindings")) {
      prog.bindings.push_back(
          {b.at("stream").get<std::string>(), coord_from(b.at("coord")), b.at("bram").get<std::uint8_t>()});
    }
    prog.output_tile = coord_from(doc.at("output").at("coord"));
    prog.output = enum_from(doc.at("output").at("kind"), {OutputKind::Stream, OutputKind::Scalar, OutputKind::None});
    for (const auto& r : doc.at("residents")) prog.residents.emplace(coord_from(r.at("coord")), op_from(r.at("op")));

    for (const auto& t : doc.at("tiles")) {
      TileProgram tile;
      tile.coord = coord_from(t.at("coord"));
      tile.role = enum_from(t.at("role"), {TileRole::Operator, TileRole::PassThrough});
      tile.op_id = t.at("op").get<std::string>();
      if (t.contains("node")) tile.node = t.at("node").get<std::size_t>();
      prog.tiles.push_back(std::move(tile));
    }

    WordReader words(read_image(image));
    const auto count = words.next();
    if (count != prog.tiles.size()) schema(fmt::format("image has {} tiles, sidecar {}", count, prog.tiles.size()));
    for (std::size_t i = 0; i < prog.tiles.size(); ++i) {
      auto& tile = prog.tiles[i];
      const auto packed = words.next();
      const Coord c{static_cast<int>(packed >> 16), static_cast<int>(packed & 0xFFFFu)};
      if (c != tile.coord) schema(fmt::format("tile {}: image says {}", i, to_string(c)));
      const auto n_instr = words.next();
      for (std::uint32_t k = 0; k < n_instr; ++k) tile.code.push_back(decode(words.next()));
      const auto n_presets = words.next();
      if (n_presets != doc.at("tiles").at(i).at("presets").get<std::size_t>()) schema(fmt::format("tile {}: preset count differs", i));
      for (std::uint32_t k = 0; k < n_presets; ++k) {
        const auto reg = words.next();
        if (reg > 15) schema("preset register out of range");
        tile.presets.push_back({static_cast<std::uint8_t>(reg), words.next()});
      }
      if (tile.code.size() != doc.at("tiles").at(i).at("instructions").get<std::size_t>()) {
        schema(fmt::format("tile {}: instruction count differs", i));
      }
    }
    if (!words.done()) schema("trailing words in program image");
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaError, e.what());
  }
  return prog;
}

}  // namespace overlay
