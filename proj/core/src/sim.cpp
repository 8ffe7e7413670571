#include "overlay/sim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <map>
#include <memory>
#include <utility>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "overlay/error.hpp"
#include "overlay/rng.hpp"

namespace overlay {

void SimConfig::validate() const {
  const std::pair<const char*, double> fields[] = {
      {"cycle_ns", cycle_ns},
      {"transfer_ns_per_word", transfer_ns_per_word},
      {"pr_cost_ms_per_tile", pr_cost_ms_per_tile},
      {"hop_cycles_per_element", hop_cycles_per_element},
  };
  for (const auto& [name, v] : fields) {
    if (!std::isfinite(v) || v < 0.0) throw Error(Errc::InvalidConfig, fmt::format("{} = {}", name, v));
  }
}

SimConfig sim_config_from_json(std::string_view json_text, SimConfig base) {
  try {
    const auto doc = nlohmann::json::parse(json_text);
    if (!doc.is_object()) throw Error(Errc::InvalidConfig, "sim config must be an object");
    for (const auto& [key, value] : doc.items()) {
      if (key == "cycle_ns") {
        base.cycle_ns = value.get<double>();
      } else if (key == "transfer_ns_per_word") {
        base.transfer_ns_per_word = value.get<double>();
      } else if (key == "pr_cost_ms_per_tile") {
        base.pr_cost_ms_per_tile = value.get<double>();
      } else if (key == "hop_cycles_per_element") {
        base.hop_cycles_per_element = value.get<double>();
      } else if (key == "step_budget") {
        if (!value.is_number_unsigned()) throw Error(Errc::InvalidConfig, "step_budget must be a non-negative integer");
        base.step_budget = value.get<std::uint64_t>();
      } else {
        throw Error(Errc::InvalidConfig, fmt::format("unknown key '{}'", key));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, e.what());
  }
  base.validate();
  return base;
}

std::string sim_config_to_json(const SimConfig& cfg) {
  const nlohmann::json doc = {{"cycle_ns", cfg.cycle_ns},
                              {"transfer_ns_per_word", cfg.transfer_ns_per_word},
                              {"pr_cost_ms_per_tile", cfg.pr_cost_ms_per_tile},
                              {"hop_cycles_per_element", cfg.hop_cycles_per_element},
                              {"step_budget", cfg.step_budget}};
  return doc.dump(2);
}

bool operator==(const SimReport& a, const SimReport& b) noexcept {
  auto same = [](double x, double y) { return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y); };
  if (a.outputs.size() != b.outputs.size()) return false;
  for (std::size_t i = 0; i < a.outputs.size(); ++i) {
    if (std::bit_cast<std::uint32_t>(a.outputs[i]) != std::bit_cast<std::uint32_t>(b.outputs[i])) return false;
  }
  return a.output_kind == b.output_kind && a.pipeline_fill == b.pipeline_fill &&
         a.cycles_compute == b.cycles_compute && a.words_transferred == b.words_transferred &&
         same(a.time_transfer_ms, b.time_transfer_ms) && same(a.time_compute_ms, b.time_compute_ms) &&
         same(a.time_reconfig_ms, b.time_reconfig_ms) && same(a.total_ms, b.total_ms) &&
         same(a.total_with_pr_ms, b.total_with_pr_ms) && a.hops == b.hops &&
         a.reconfig_loads == b.reconfig_loads && a.trace == b.trace;
}

namespace {

struct Channel {
  std::deque<float> words;
  bool closed = false;
};

class Network {
 public:
  // Words arriving at port `dir` of tile `c`.
  Channel& into(Coord c, Direction dir) { return channels_[{c, dir}]; }
  // Words leaving tile `c` through port `dir`.
  Channel& out_of(Coord c, Direction dir) { return into(step(c, dir), opposite(dir)); }

 private:
  std::map<std::pair<Coord, Direction>, Channel> channels_;
};

struct Forwarder {
  Channel* in = nullptr;
  std::vector<Channel*> outs;
  bool done = false;

  // Words moved; `changed` also reports an end-of-stream passed on.
  std::size_t pump(bool& changed) {
    if (done) return 0;
    std::size_t moved = 0;
    while (!in->words.empty()) {
      for (auto* out : outs) out->words.push_back(in->words.front());
      in->words.pop_front();
      ++moved;
    }
    if (in->closed) {
      for (auto* out : outs) out->closed = true;
      done = true;
      changed = true;
    }
    changed |= moved > 0;
    return moved;
  }
};

constexpr std::size_t kInstructionsPerRound = 256;

class TileMachine {
 public:
  TileMachine(const TileProgram& program, OverlayFabric& fabric, Network& net)
      : program_(program), fabric_(fabric), net_(net), coord_(program.coord) {
    const Tile& tile = fabric.tile(coord_);
    words_ = tile.instr_bram;
    regs_ = tile.registers;
    brams_ = tile.data_brams;
    trace_.coord = coord_;
    trace_.role = program.role;
    trace_.op_id = program.op_id;
  }

  void preset(std::uint8_t reg, std::uint32_t bits) { reg_ref(reg) = bits; }
  void bind(std::uint8_t bram, const std::vector<float>& data) { brams_.at(bram) = data; }

  bool halted() const { return halted_; }
  const TileTrace& trace() const { return trace_; }
  const std::vector<float>& bram0() const { return brams_[0]; }
  std::size_t b0_results() const { return b0_results_; }
  bool stored_result() const { return stored_result_; }

  bool step() {
    if (halted_) return pump_switch();
    bool progress = false;
    std::size_t retired = 0;
    while (!halted_ && retired < kInstructionsPerRound) {
      if (vec_) {
        const auto before = trace_.elements;
        const bool finished = vector_step();
        progress |= trace_.elements != before || finished;
        if (!finished) break;
        ++retired;
        continue;
      }
      if (pc_ >= words_.size()) {
        throw Error(Errc::NonTerminating, fmt::format("{} ran off the end of instruction memory", to_string(coord_)));
      }
      const Instruction instr = decode(words_[pc_]);
      execute(instr);
      if (std::exchange(blocked_, false)) break;
      ++retired;
      progress = true;
    }
    return pump_switch() || progress;
  }

 private:
  struct VectorOp {
    Opcode opcode;
    std::vector<Src> srcs;
    std::size_t index = 0;
  };

  std::uint32_t& reg_ref(std::uint8_t r) {
    if (r >= regs_.size()) {
      throw Error(Errc::MalformedOperand, fmt::format("{}: r{} beyond the {}-entry register file", to_string(coord_), r,
                                                      regs_.size()));
    }
    return regs_[r];
  }

  std::vector<float>& bram_ref(std::size_t b, std::size_t addr) {
    auto& bram = brams_.at(b);
    if (addr >= bram.size()) {
      if (addr >= std::max(bram.size(), fabric_.params().data_words)) {
        throw Error(Errc::CapacityExceeded, fmt::format("{}: B{}[{}] out of range", to_string(coord_), b, addr));
      }
      bram.resize(addr + 1, 0.0f);
    }
    return bram;
  }

  bool pump_switch() {
    bool changed = false;
    for (auto& f : switches_) trace_.forwarded += f.pump(changed);
    return changed;
  }

  std::vector<Channel*> emit_channels() {
    std::vector<Channel*> out;
    for (Direction d : kDirections) {
      if (active_[index_of(d)].kind == PortMode::Kind::Emit) out.push_back(&net_.out_of(coord_, d));
    }
    return out;
  }

  void commit_links() {
    active_ = pending_;
    switches_.clear();
    for (Direction d : kDirections) {
      const PortMode mode = active_[index_of(d)];
      fabric_.configure_port(coord_, d, mode);
      if (mode.kind == PortMode::Kind::Bypass) {
        switches_.push_back(Forwarder{&net_.into(coord_, d), {&net_.out_of(coord_, mode.to)}});
      }
    }
  }

  void halt() {
    halted_ = true;
    ++pc_;
    std::vector<Direction> consumes;
    for (Direction d : kDirections) {
      if (active_[index_of(d)].kind == PortMode::Kind::Consume) consumes.push_back(d);
    }
    auto emits = emit_channels();
    if (!computed_ && !consumes.empty() && !emits.empty()) {
      // No operator ran: the consume/emit pair is a plain switch path.
      if (consumes.size() != 1) {
        throw Error(Errc::PortConflict, fmt::format("{}: ambiguous switch path", to_string(coord_)));
      }
      switches_.push_back(Forwarder{&net_.into(coord_, consumes.front()), std::move(emits)});
      return;
    }
    if (!computed_ && switches_.empty()) {
      throw Error(Errc::UnloadedTile, fmt::format("{} halted with neither compute nor a switch path", to_string(coord_)));
    }
    for (auto* ch : emits) ch->closed = true;
  }

  void start_vector(Opcode opcode, std::vector<Src> srcs) {
    const Tile& tile = fabric_.tile(coord_);
    if (!tile.loaded) {
      throw Error(Errc::UnloadedTile, fmt::format("{}: {} with no operator loaded", to_string(coord_),
                                                  info(opcode).mnemonic));
    }
    if (!program_.op_id.empty() && tile.loaded->id != program_.op_id) {
      throw Error(Errc::UnloadedTile, fmt::format("{}: expects {}, holds {}", to_string(coord_), program_.op_id,
                                                  tile.loaded->id));
    }
    if (opcode == Opcode::VMAC) {
      const Src seed = srcs[1];
      if (seed.type == Src::Type::Reg) {
        acc_ = std::bit_cast<float>(reg_ref(seed.index));
      } else if (seed.type != Src::Type::None) {
        throw Error(Errc::MalformedOperand, "VMAC seed must be a register or NONE");
      }
    }
    kernel_ = tile.loaded->kernel;
    vec_ = VectorOp{opcode, std::move(srcs), 0};
  }

  enum class Avail { Ready, Blocked, Closed };

  Avail available(Src s, std::size_t index) {
    switch (s.type) {
      case Src::Type::None:
      case Src::Type::Reg:
        return Avail::Ready;
      case Src::Type::Bram:
        return index < brams_.at(s.index).size() ? Avail::Ready : Avail::Closed;
      case Src::Type::Port: {
        const Channel& ch = net_.into(coord_, static_cast<Direction>(s.index));
        if (!ch.words.empty()) return Avail::Ready;
        return ch.closed ? Avail::Closed : Avail::Blocked;
      }
    }
    return Avail::Closed;
  }

  float take(Src s, std::size_t index) {
    switch (s.type) {
      case Src::Type::None: return 0.0f;
      case Src::Type::Reg: return std::bit_cast<float>(reg_ref(s.index));
      case Src::Type::Bram: return brams_.at(s.index)[index];
      case Src::Type::Port: {
        Channel& ch = net_.into(coord_, static_cast<Direction>(s.index));
        const float v = ch.words.front();
        ch.words.pop_front();
        return v;
      }
    }
    return 0.0f;
  }

  void emit(float v, const std::vector<Channel*>& outs) {
    if (outs.empty()) {
      bram_ref(0, b0_results_)[b0_results_] = v;
      ++b0_results_;
      return;
    }
    for (auto* ch : outs) ch->words.push_back(v);
  }

  // True once the instruction has retired.
  bool vector_step() {
    auto& op = *vec_;
    const auto outs = emit_channels();
    while (op.index < len_) {
      bool closed = false;
      for (const Src s : op.srcs) {
        const auto a = available(s, op.index);
        if (a == Avail::Blocked) return false;
        if (a == Avail::Closed) closed = true;
      }
      if (closed) break;
      float v[3] = {0.0f, 0.0f, 0.0f};
      for (std::size_t k = 0; k < op.srcs.size(); ++k) v[k] = take(op.srcs[k], op.index);
      switch (op.opcode) {
        case Opcode::VMUL:
          emit(apply_kernel(kernel_, v[0], v[1]), outs);
          break;
        case Opcode::VMAC:
          acc_ = apply_kernel(kernel_, acc_, v[0]);
          break;
        default: {  // SEL
          const bool has_else = op.srcs[2].type != Src::Type::None;
          if (truthy(v[0])) {
            emit(apply_kernel(kernel_, v[1]), outs);
          } else if (has_else) {
            emit(apply_kernel(kernel_, v[2]), outs);
          }
          break;
        }
      }
      ++op.index;
      ++trace_.elements;
    }
    vec_.reset();
    computed_ = true;
    ++pc_;
    ++trace_.instructions;
    return true;
  }

  static std::int32_t as_int(std::uint32_t bits) { return static_cast<std::int32_t>(bits); }

  void jump(std::uint32_t target) { pc_ = target; }

  void execute(const Instruction& instr) {
    const auto& ops = instr.operands;
    auto reg_at = [&](std::size_t i) { return std::get<Reg>(ops[i]).index; };
    auto src_at = [&](std::size_t i) { return std::get<Src>(ops[i]); };
    const auto code = instr.opcode;
    const auto raw = static_cast<unsigned>(code);
    if (code != Opcode::VMUL && code != Opcode::VMAC && code != Opcode::SEL) ++trace_.instructions;

    if (raw <= static_cast<unsigned>(Opcode::SETPORT_W_EMIT)) {
      pending_[raw / 3] = PortMode{static_cast<PortMode::Kind>(raw % 3), Direction::North};
      ++pc_;
      return;
    }
    if (raw <= static_cast<unsigned>(Opcode::BYPASS_S_E)) {
      for (Direction from : kDirections) {
        for (Direction to : kDirections) {
          if (from != to && bypass_opcode(from, to) == code) pending_[index_of(from)] = PortMode::bypass(to);
        }
      }
      ++pc_;
      return;
    }
    switch (code) {
      case Opcode::FLUSH_LINKS: pending_.fill(PortMode::idle()); ++pc_; return;
      case Opcode::COMMIT_LINKS: commit_links(); ++pc_; return;
      case Opcode::BEQ:
      case Opcode::BNE:
      case Opcode::BLT:
      case Opcode::BGE: {
        const auto a = as_int(reg_ref(reg_at(0)));
        const auto b = as_int(reg_ref(reg_at(1)));
        const bool taken = code == Opcode::BEQ ? a == b : code == Opcode::BNE ? a != b : code == Opcode::BLT ? a < b : a >= b;
        if (taken) {
          jump(std::get<Target>(ops[2]).value);
        } else {
          ++pc_;
        }
        return;
      }
      case Opcode::JMP: jump(std::get<Target>(ops[0]).value); return;
      case Opcode::SEL: start_vector(code, {src_at(0), src_at(1), src_at(2)}); return;
      case Opcode::VMUL:
      case Opcode::VMAC: start_vector(code, {src_at(0), src_at(1)}); return;
      case Opcode::LDB0:
      case Opcode::LDB1: {
        const std::size_t b = code == Opcode::LDB0 ? 0 : 1;
        const auto addr = std::get<Addr>(ops[1]).value;
        reg_ref(reg_at(0)) = std::bit_cast<std::uint32_t>(bram_ref(b, addr)[addr]);
        ++pc_;
        return;
      }
      case Opcode::STB0:
      case Opcode::STB1: {
        const std::size_t b = code == Opcode::STB0 ? 0 : 1;
        const auto addr = std::get<Addr>(ops[1]).value;
        bram_ref(b, addr)[addr] = std::bit_cast<float>(reg_ref(reg_at(0)));
        if (b == 0 && addr == 0) stored_result_ = true;
        ++pc_;
        return;
      }
      case Opcode::LDI: reg_ref(reg_at(0)) = static_cast<std::uint32_t>(std::get<Imm>(ops[1]).value); ++pc_; return;
      case Opcode::MOV: reg_ref(reg_at(0)) = reg_ref(reg_at(1)); ++pc_; return;
      case Opcode::PUSH_IN: {
        Channel& ch = net_.into(coord_, std::get<Port>(ops[1]).dir);
        if (ch.words.empty()) {
          --trace_.instructions;  // retried next round
          if (ch.closed) {
            throw Error(Errc::NonTerminating, fmt::format("{}: PUSH_IN on a closed link", to_string(coord_)));
          }
          blocked_ = true;
          return;
        }
        reg_ref(reg_at(0)) = std::bit_cast<std::uint32_t>(ch.words.front());
        ch.words.pop_front();
        ++pc_;
        return;
      }
      case Opcode::POP_OUT:
        net_.out_of(coord_, std::get<Port>(ops[0]).dir).words.push_back(std::bit_cast<float>(reg_ref(reg_at(1))));
        ++pc_;
        return;
      case Opcode::CLRACC: acc_ = 0.0f; ++pc_; return;
      case Opcode::RDACC: reg_ref(reg_at(0)) = std::bit_cast<std::uint32_t>(acc_); ++pc_; return;
      case Opcode::SETLEN: len_ = std::get<Len>(ops[0]).value; ++pc_; return;
      case Opcode::HALT: halt(); return;
      default: break;
    }
    throw Error(Errc::IllegalOpcode, fmt::format("{}", raw));
  }

  const TileProgram& program_;
  OverlayFabric& fabric_;
  Network& net_;
  Coord coord_;
  std::vector<std::uint32_t> words_;
  std::vector<std::uint32_t> regs_;
  std::array<std::vector<float>, 2> brams_;
  std::size_t pc_ = 0;
  bool halted_ = false;
  bool blocked_ = false;
  std::array<PortMode, 4> pending_{};
  std::array<PortMode, 4> active_{};
  std::uint32_t len_ = 0;
  float acc_ = 0.0f;
  Kernel kernel_ = Kernel::Pass;
  std::optional<VectorOp> vec_;
  bool computed_ = false;
  std::size_t b0_results_ = 0;
  bool stored_result_ = false;
  std::vector<Forwarder> switches_;
  TileTrace trace_;
};

std::uint64_t pipeline_fill(const OperatorGraph& graph) {
  std::vector<std::uint64_t> finish(graph.nodes.size(), 0);
  std::uint64_t fill = 0;
  for (auto id : graph.topological_order()) {
    std::uint64_t start = 0;
    for (auto p : graph.predecessors(id)) start = std::max(start, finish[p]);
    finish[id] = start + graph.nodes[id].op.latency_cycles;
    fill = std::max(fill, finish[id]);
  }
  return fill;
}

const OperatorDescriptor& planned_op(const CompiledProgram& program, const ReconfigEntry& entry) {
  for (std::size_t i = 0; i < program.graph.nodes.size(); ++i) {
    if (program.placement.coords.at(i) == entry.coord && program.graph.nodes[i].op.id == entry.op_id) {
      return program.graph.nodes[i].op;
    }
  }
  throw Error(Errc::UnloadedTile, fmt::format("reconfiguration of {} names no placed node", to_string(entry.coord)));
}

}  // namespace

SimReport run(const OverlayFabric& fabric, const CompiledProgram& program, const StreamInputs& inputs,
              const SimConfig& cfg) {
  cfg.validate();
  if (fabric.rows() != program.rows || fabric.cols() != program.cols) {
    throw Error(Errc::InvalidDimensions, fmt::format("program targets {}x{}, fabric is {}x{}", program.rows,
                                                     program.cols, fabric.rows(), fabric.cols()));
  }
  const std::size_t n = program.n;
  for (const auto& name : program.graph.streams) {
    const auto it = inputs.find(name);
    if (it == inputs.end()) throw Error(Errc::StreamLengthMismatch, fmt::format("stream {} not supplied", name));
    if (it->second.size() != n) {
      throw Error(Errc::StreamLengthMismatch,
                  fmt::format("stream {} has {} elements, program expects {}", name, it->second.size(), n));
    }
  }

  OverlayFabric fab = fabric;
  SimReport report;
  for (const auto& entry : program.reconfig) {
    const auto& op = planned_op(program, entry);
    const Tile& tile = fab.tile(entry.coord);
    if (tile.loaded && *tile.loaded == op) continue;
    fab.load_operator(entry.coord, op);
    ++report.reconfig_loads;
  }

  Network net;
  std::vector<std::unique_ptr<TileMachine>> machines;
  std::size_t total_instructions = 0;
  std::map<Coord, TileMachine*> by_coord;
  for (const auto& tile : program.tiles) {
    std::vector<std::uint32_t> words;
    words.reserve(tile.code.size());
    for (const auto& instr : tile.code) words.push_back(encode(instr));
    fab.store_program(tile.coord, words);
    total_instructions += words.size();
    auto m = std::make_unique<TileMachine>(tile, fab, net);
    for (const auto& p : tile.presets) m->preset(p.reg, p.bits);
    by_coord[tile.coord] = m.get();
    machines.push_back(std::move(m));
  }
  for (const auto& b : program.bindings) {
    const auto it = by_coord.find(b.coord);
    if (it == by_coord.end()) throw Error(Errc::UnloadedTile, fmt::format("stream {} bound to idle tile", b.stream));
    it->second->bind(b.bram, inputs.find(b.stream)->second);
  }

  const std::uint64_t budget = cfg.step_budget != 0
                                   ? cfg.step_budget
                                   : (static_cast<std::uint64_t>(n) + 16) * (machines.size() + 1) * 4 +
                                         total_instructions + 1024;
  std::uint64_t rounds = 0;
  auto all_halted = [&] {
    return std::all_of(machines.begin(), machines.end(), [](const auto& m) { return m->halted(); });
  };
  while (!all_halted()) {
    bool progress = false;
    for (auto& m : machines) progress |= m->step();
    if (!progress) throw Error(Errc::NonTerminating, "no tile can make progress");
    if (++rounds > budget) throw Error(Errc::NonTerminating, fmt::format("step budget {} exhausted", budget));
  }
  // Let switch paths drain what halted producers left in flight.
  for (bool moved = true; moved;) {
    moved = false;
    for (auto& m : machines) moved |= m->step();
  }

  report.output_kind = program.output;
  if (program.output != OutputKind::None) {
    const auto it = by_coord.find(program.output_tile);
    if (it == by_coord.end()) throw Error(Errc::UnloadedTile, "output tile runs no program");
    const TileMachine& root = *it->second;
    if (program.output == OutputKind::Scalar) {
      if (!root.stored_result()) throw Error(Errc::UnloadedTile, "root tile stored no result");
      report.outputs = {root.bram0().at(0)};
    } else {
      report.outputs.assign(root.bram0().begin(),
                            root.bram0().begin() + static_cast<std::ptrdiff_t>(root.b0_results()));
    }
  }
  for (const auto& m : machines) report.trace.push_back(m->trace());

  report.hops = program.routes.total_pass_throughs();
  report.pipeline_fill = pipeline_fill(program.graph);
  std::uint64_t max_ii = 1;
  for (const auto& node : program.graph.nodes) max_ii = std::max<std::uint64_t>(max_ii, node.op.initiation_interval);
  if (n > 0) {
    report.cycles_compute = report.pipeline_fill + (n - 1) * max_ii +
                            static_cast<std::uint64_t>(std::llround(static_cast<double>(n) * cfg.hop_cycles_per_element *
                                                                    static_cast<double>(report.hops)));
  }
  report.words_transferred = program.bindings.size() * n;
  if (program.output == OutputKind::Stream) report.words_transferred += report.outputs.size();

  report.time_transfer_ms = static_cast<double>(report.words_transferred) * cfg.transfer_ns_per_word / 1e6;
  report.time_compute_ms = static_cast<double>(report.cycles_compute) * cfg.cycle_ns / 1e6;
  report.time_reconfig_ms = static_cast<double>(report.reconfig_loads) * cfg.pr_cost_ms_per_tile;
  report.total_ms = report.time_transfer_ms + report.time_compute_ms;
  report.total_with_pr_ms = report.total_ms + report.time_reconfig_ms;
  return report;
}

namespace {

class Oracle {
 public:
  Oracle(const LibraryManifest& lib, const StreamInputs& inputs) : lib_(lib), inputs_(inputs) {}

  std::vector<float> eval(const PatternNode& node) {
    switch (node.pattern) {
      case Pattern::Map:
      case Pattern::ZipMap:
      case Pattern::ForEach: {
        const auto k = kernel(node.kernel);
        auto [x, y] = operands(node);
        std::vector<float> out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = apply_kernel(k, x[i], y(i));
        return out;
      }
      case Pattern::Reduce: {
        const auto k = kernel(node.kernel);
        const auto x = value(node.args[0]);
        float acc = node.init;
        for (float v : x.stream) acc = apply_kernel(k, acc, v);
        return {acc};
      }
      case Pattern::Filter: {
        const auto k = kernel(node.kernel);
        auto [x, y] = operands(node);
        std::vector<float> out;
        for (std::size_t i = 0; i < x.size(); ++i) {
          if (truthy(apply_kernel(k, x[i], y(i)))) out.push_back(x[i]);
        }
        return out;
      }
      case Pattern::Cond: {
        const auto p = kernel(node.kernel);
        const auto t = kernel(node.then_kernel);
        const auto e = kernel(node.else_kernel);
        auto [x, y] = operands(node);
        std::vector<float> out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
          const float b = y(i);
          out[i] = truthy(apply_kernel(p, x[i], b)) ? apply_kernel(t, x[i], b) : apply_kernel(e, x[i], b);
        }
        return out;
      }
    }
    return {};
  }

 private:
  struct Value {
    std::vector<float> stream;
    std::optional<float> constant;
  };

  struct Second {
    const Value* v = nullptr;
    float operator()(std::size_t i) const {
      if (!v) return 0.0f;
      return v->constant ? *v->constant : v->stream[i];
    }
  };

  Kernel kernel(const std::string& name) {
    const auto* op = lib_.resolve(name);
    if (!op) throw Error(Errc::UnknownKernel, name);
    return op->kernel;
  }

  Value value(const PatternArg& arg) {
    if (const auto* s = std::get_if<StreamRef>(&arg)) {
      const auto it = inputs_.find(s->name);
      if (it == inputs_.end()) throw Error(Errc::StreamLengthMismatch, fmt::format("stream {} not supplied", s->name));
      return {it->second, std::nullopt};
    }
    if (const auto* c = std::get_if<Constant>(&arg)) return {{}, c->value};
    return {eval(*std::get<PatternPtr>(arg)), std::nullopt};
  }

  std::pair<std::vector<float>, Second> operands(const PatternNode& node) {
    auto x = value(node.args[0]).stream;
    if (node.args.size() < 2) return {std::move(x), Second{}};
    held_.push_back(std::make_unique<Value>(value(node.args[1])));
    const Value* y = held_.back().get();
    if (!y->constant && y->stream.size() != x.size()) {
      throw Error(Errc::StreamLengthMismatch, fmt::format("operands of {} differ in length", to_string(node.pattern)));
    }
    return {std::move(x), Second{y}};
  }

  const LibraryManifest& lib_;
  const StreamInputs& inputs_;
  std::vector<std::unique_ptr<Value>> held_;
};

}  // namespace

std::vector<float> oracle(const PatternProgram& program, const LibraryManifest& lib, const StreamInputs& inputs) {
  const auto graph = lower(program, lib);
  std::optional<std::size_t> length;
  for (const auto& name : graph.streams) {
    const auto it = inputs.find(name);
    if (it == inputs.end()) throw Error(Errc::StreamLengthMismatch, fmt::format("stream {} not supplied", name));
    if (length && *length != it->second.size()) {
      throw Error(Errc::StreamLengthMismatch, fmt::format("stream {} has {} elements, expected {}", name,
                                                          it->second.size(), *length));
    }
    length = it->second.size();
  }
  auto out = Oracle(lib, inputs).eval(*program.root);
  if (program.root->pattern == Pattern::ForEach) out.clear();
  return out;
}

std::vector<SweepRow> sweep_hops(const OverlayFabric& base, const LibraryManifest& lib, std::span<const int> hop_counts,
                                 std::size_t n, const SimConfig& cfg, std::uint64_t seed) {
  const auto fabric = make_static_overlay(base, lib);
  const auto program = vmul_reduce_program();
  const auto names = input_streams(program);
  const auto inputs = random_streams(names, n, seed);
  std::vector<SweepRow> rows;
  for (int hops : hop_counts) {
    CompileOptions options;
    options.mode = PlacementMode::Static;
    options.scenario = hops;
    options.n = n;
    const auto compiled = compile(program, lib, fabric, options);
    const auto report = run(fabric, compiled, inputs, cfg);
    rows.push_back({static_cast<int>(report.hops), report.total_ms});
  }
  return rows;
}

std::string report_to_json(const SimReport& report) {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& t : report.trace) {
    trace.push_back({{"coord", {t.coord.row, t.coord.col}},
                     {"role", to_string(t.role)},
                     {"op", t.op_id},
                     {"elements", t.elements},
                     {"forwarded", t.forwarded},
                     {"instructions", t.instructions}});
  }
  const nlohmann::json doc = {
      {"output_kind", to_string(report.output_kind)},
      {"outputs", report.outputs},
      {"pipeline_fill", report.pipeline_fill},
      {"cycles_compute", report.cycles_compute},
      {"words_transferred", report.words_transferred},
      {"time_transfer_ms", report.time_transfer_ms},
      {"time_compute_ms", report.time_compute_ms},
      {"time_reconfig_ms", report.time_reconfig_ms},
      {"total_ms", report.total_ms},
      {"total_with_pr_ms", report.total_with_pr_ms},
      {"hops", report.hops},
      {"reconfig_loads", report.reconfig_loads},
      {"trace", std::move(trace)},
  };
  return doc.dump(2);
}

std::string_view csv_header() noexcept { return "target,n,hops,transfer_ms,compute_ms,reconfig_ms,total_ms"; }

std::string report_csv_row(std::string_view target, std::size_t n, const SimReport& report) {
  return fmt::format("{},{},{},{:.6f},{:.6f},{:.6f},{:.6f}", target, n, report.hops, report.time_transfer_ms,
                     report.time_compute_ms, report.time_reconfig_ms, report.total_ms);
}

}  // namespace overlay
