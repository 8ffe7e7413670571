#include "overlay/isa.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>

#include <fmt/format.h>

#include "overlay/error.hpp"

namespace overlay {
namespace {

using K = OperandKind;

constexpr std::array<OperandKind, 0> kNone{};
constexpr std::array kRegRegTarget{K::Reg, K::Reg, K::Target};
constexpr std::array kTarget{K::Target};
constexpr std::array kSrc3{K::Src, K::Src, K::Src};
constexpr std::array kSrc2{K::Src, K::Src};
constexpr std::array kRegAddr{K::Reg, K::Addr};
constexpr std::array kRegImm{K::Reg, K::Imm};
constexpr std::array kRegReg{K::Reg, K::Reg};
constexpr std::array kRegPort{K::Reg, K::Port};
constexpr std::array kPortReg{K::Port, K::Reg};
constexpr std::array kReg{K::Reg};
constexpr std::array kLen{K::Len};

#define OVL_ENTRY(op, cat, sig, sem) \
  OpcodeInfo { Opcode::op, #op, OpCategory::cat, sig, sem }

const std::array<OpcodeInfo, kOpcodeCount> kCatalog{{
    OVL_ENTRY(SETPORT_N_IDLE, Interconnect, kNone, "pending: north port idle"),
    OVL_ENTRY(SETPORT_N_CONSUME, Interconnect, kNone, "pending: north port consumes its link"),
    OVL_ENTRY(SETPORT_N_EMIT, Interconnect, kNone, "pending: north port carries tile results"),
    OVL_ENTRY(SETPORT_E_IDLE, Interconnect, kNone, "pending: east port idle"),
    OVL_ENTRY(SETPORT_E_CONSUME, Interconnect, kNone, "pending: east port consumes its link"),
    OVL_ENTRY(SETPORT_E_EMIT, Interconnect, kNone, "pending: east port carries tile results"),
    OVL_ENTRY(SETPORT_S_IDLE, Interconnect, kNone, "pending: south port idle"),
    OVL_ENTRY(SETPORT_S_CONSUME, Interconnect, kNone, "pending: south port consumes its link"),
    OVL_ENTRY(SETPORT_S_EMIT, Interconnect, kNone, "pending: south port carries tile results"),
    OVL_ENTRY(SETPORT_W_IDLE, Interconnect, kNone, "pending: west port idle"),
    OVL_ENTRY(SETPORT_W_CONSUME, Interconnect, kNone, "pending: west port consumes its link"),
    OVL_ENTRY(SETPORT_W_EMIT, Interconnect, kNone, "pending: west port carries tile results"),
    OVL_ENTRY(BYPASS_N_E, Interconnect, kNone, "pending: forward north input to east"),
    OVL_ENTRY(BYPASS_N_S, Interconnect, kNone, "pending: forward north input to south"),
    OVL_ENTRY(BYPASS_N_W, Interconnect, kNone, "pending: forward north input to west"),
    OVL_ENTRY(BYPASS_E_N, Interconnect, kNone, "pending: forward east input to north"),
    OVL_ENTRY(BYPASS_E_S, Interconnect, kNone, "pending: forward east input to south"),
    OVL_ENTRY(BYPASS_E_W, Interconnect, kNone, "pending: forward east input to west"),
    OVL_ENTRY(BYPASS_S_N, Interconnect, kNone, "pending: forward south input to north"),
    OVL_ENTRY(BYPASS_S_E, Interconnect, kNone, "pending: forward south input to east"),
    OVL_ENTRY(FLUSH_LINKS, Interconnect, kNone, "reset the pending link configuration to idle"),
    OVL_ENTRY(COMMIT_LINKS, Interconnect, kNone, "make the pending link configuration active"),
    OVL_ENTRY(BEQ, Branching, kRegRegTarget, "branch to target if ra == rb (int32)"),
    OVL_ENTRY(BNE, Branching, kRegRegTarget, "branch to target if ra != rb (int32)"),
    OVL_ENTRY(BLT, Branching, kRegRegTarget, "branch to target if ra < rb (int32)"),
    OVL_ENTRY(BGE, Branching, kRegRegTarget, "branch to target if ra >= rb (int32)"),
    OVL_ENTRY(JMP, Branching, kTarget, "jump to target"),
    OVL_ENTRY(SEL, Branching, kSrc3,
              "per element: emit t if c != 0 else e; with e = NONE, drop the element instead"),
    OVL_ENTRY(VMUL, VectorOp, kSrc2, "stream LEN elements of (a, b) through the resident operator"),
    OVL_ENTRY(VMAC, VectorOp, kSrc2,
              "fold LEN elements of a into ACC with the resident operator; b seeds ACC unless NONE"),
    OVL_ENTRY(LDB0, MemReg, kRegAddr, "r = BRAM0[addr]"),
    OVL_ENTRY(LDB1, MemReg, kRegAddr, "r = BRAM1[addr]"),
    OVL_ENTRY(STB0, MemReg, kRegAddr, "BRAM0[addr] = r"),
    OVL_ENTRY(STB1, MemReg, kRegAddr, "BRAM1[addr] = r"),
    OVL_ENTRY(LDI, MemReg, kRegImm, "r = sign-extended 16-bit immediate"),
    OVL_ENTRY(MOV, MemReg, kRegReg, "rd = rs"),
    OVL_ENTRY(PUSH_IN, MemReg, kRegPort, "r = next word consumed on port"),
    OVL_ENTRY(POP_OUT, MemReg, kPortReg, "send r out of port"),
    OVL_ENTRY(CLRACC, MemReg, kNone, "ACC = +0.0"),
    OVL_ENTRY(RDACC, MemReg, kReg, "r = ACC"),
    OVL_ENTRY(SETLEN, MemReg, kLen, "LEN = element count for vector instructions"),
    OVL_ENTRY(HALT, MemReg, kNone, "stop; close every emitting port"),
}};

#undef OVL_ENTRY

constexpr unsigned kOperandBits = 26;

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool src_valid(Src s) noexcept {
  switch (s.type) {
    case Src::Type::None: return s.index == 0;
    case Src::Type::Port: return s.index < 4;
    case Src::Type::Bram: return s.index < 2;
    case Src::Type::Reg: return s.index < 16;
  }
  return false;
}

// Raw field value for `operand`, or nullopt if it does not fit.
std::optional<std::uint32_t> field_value(const Operand& operand) {
  return std::visit(
      [](const auto& v) -> std::optional<std::uint32_t> {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Reg>) {
          if (v.index >= 16) return std::nullopt;
          return v.index;
        } else if constexpr (std::is_same_v<T, Src>) {
          if (!src_valid(v)) return std::nullopt;
          return (static_cast<std::uint32_t>(v.type) << 4) | v.index;
        } else if constexpr (std::is_same_v<T, Port>) {
          return static_cast<std::uint32_t>(v.dir);
        } else if constexpr (std::is_same_v<T, Imm>) {
          if (v.value < -32768 || v.value > 32767) return std::nullopt;
          return static_cast<std::uint32_t>(v.value) & 0xFFFFu;
        } else if constexpr (std::is_same_v<T, Len>) {
          if (v.value >= (1u << 24)) return std::nullopt;
          return v.value;
        } else {
          if (v.value > 0xFFFFu) return std::nullopt;
          return v.value;
        }
      },
      operand);
}

std::optional<Operand> operand_from_field(OperandKind kind, std::uint32_t raw) {
  switch (kind) {
    case K::Reg: return Reg{static_cast<std::uint8_t>(raw)};
    case K::Src: {
      Src s{static_cast<Src::Type>(raw >> 4), static_cast<std::uint8_t>(raw & 0xF)};
      if (!src_valid(s)) return std::nullopt;
      return s;
    }
    case K::Port: return Port{static_cast<Direction>(raw)};
    case K::Imm: return Imm{static_cast<std::int16_t>(static_cast<std::uint16_t>(raw))};
    case K::Len: return Len{raw};
    case K::Addr: return Addr{raw};
    case K::Target: return Target{raw};
  }
  return std::nullopt;
}

std::optional<std::int64_t> parse_int(std::string_view tok) {
  bool neg = false;
  if (!tok.empty() && (tok.front() == '-' || tok.front() == '+')) {
    neg = tok.front() == '-';
    tok.remove_prefix(1);
  }
  int base = 10;
  if (tok.size() > 2 && tok[0] == '0' && (tok[1] == 'x' || tok[1] == 'X')) {
    base = 16;
    tok.remove_prefix(2);
  }
  if (tok.empty()) return std::nullopt;
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v, base);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) return std::nullopt;
  return neg ? -v : v;
}

std::optional<std::uint8_t> parse_reg(std::string_view tok) {
  if (tok.size() < 2 || (tok[0] != 'r' && tok[0] != 'R')) return std::nullopt;
  const auto v = parse_int(tok.substr(1));
  if (!v || *v < 0 || *v > 15 || tok[1] == '-' || tok[1] == '+') return std::nullopt;
  return static_cast<std::uint8_t>(*v);
}

std::optional<Direction> parse_port(std::string_view tok) {
  if (tok.size() != 1) return std::nullopt;
  return direction_from_letter(tok[0]);
}

std::optional<Src> parse_src(std::string_view tok) {
  const auto u = upper(tok);
  if (u == "NONE") return Src::none();
  if (u == "B0") return Src::bram(0);
  if (u == "B1") return Src::bram(1);
  if (auto d = parse_port(tok)) return Src::port(*d);
  if (auto r = parse_reg(tok)) return Src::reg(*r);
  return std::nullopt;
}

std::string src_text(Src s) {
  switch (s.type) {
    case Src::Type::None: return "NONE";
    case Src::Type::Port: return std::string(1, direction_letter(static_cast<Direction>(s.index)));
    case Src::Type::Bram: return fmt::format("B{}", s.index);
    case Src::Type::Reg: return fmt::format("r{}", s.index);
  }
  return "?";
}

std::string operand_text(const Operand& operand) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Reg>) {
          return fmt::format("r{}", v.index);
        } else if constexpr (std::is_same_v<T, Src>) {
          return src_text(v);
        } else if constexpr (std::is_same_v<T, Port>) {
          return std::string(1, direction_letter(v.dir));
        } else {
          return fmt::format("{}", v.value);
        }
      },
      operand);
}

}  // namespace

std::string_view to_string(OpCategory c) noexcept {
  switch (c) {
    case OpCategory::Interconnect: return "interconnect";
    case OpCategory::Branching: return "branching";
    case OpCategory::VectorOp: return "vector";
    case OpCategory::MemReg: return "memreg";
  }
  return "?";
}

unsigned operand_width(OperandKind kind) noexcept {
  switch (kind) {
    case K::Reg: return 4;
    case K::Src: return 6;
    case K::Port: return 2;
    case K::Imm: return 16;
    case K::Len: return 24;
    case K::Addr: return 16;
    case K::Target: return 16;
  }
  return 0;
}

OperandKind kind_of(const Operand& operand) noexcept {
  return static_cast<OperandKind>(operand.index());
}

std::span<const OpcodeInfo> isa_catalog() noexcept { return kCatalog; }

const OpcodeInfo& info(Opcode op) noexcept { return kCatalog[static_cast<std::size_t>(op)]; }

std::optional<Opcode> opcode_from_mnemonic(std::string_view mnemonic) noexcept {
  const auto u = upper(mnemonic);
  for (const auto& entry : kCatalog) {
    if (entry.mnemonic == u) return entry.opcode;
  }
  return std::nullopt;
}

InstrWord encode(const Instruction& instr) {
  const auto code = static_cast<std::size_t>(instr.opcode);
  if (code >= kOpcodeCount) throw Error(Errc::IllegalOpcode, fmt::format("code {}", code));
  const auto& entry = kCatalog[code];
  if (instr.operands.size() != entry.signature.size()) {
    throw Error(Errc::SignatureMismatch, fmt::format("{} takes {} operands, got {}", entry.mnemonic,
                                                     entry.signature.size(), instr.operands.size()));
  }
  InstrWord word = static_cast<InstrWord>(code) << kOperandBits;
  unsigned used = 0;
  for (std::size_t i = 0; i < instr.operands.size(); ++i) {
    const auto kind = entry.signature[i];
    if (kind_of(instr.operands[i]) != kind) {
      throw Error(Errc::SignatureMismatch, fmt::format("{} operand {} has the wrong kind", entry.mnemonic, i));
    }
    const auto raw = field_value(instr.operands[i]);
    if (!raw) {
      throw Error(Errc::MalformedOperand,
                  fmt::format("{} operand {} ({}) out of range", entry.mnemonic, i, operand_text(instr.operands[i])));
    }
    const unsigned width = operand_width(kind);
    used += width;
    word |= *raw << (kOperandBits - used);
  }
  return word;
}

Instruction decode(InstrWord word) {
  const std::uint32_t code = word >> kOperandBits;
  if (code >= kOpcodeCount) throw Error(Errc::IllegalOpcode, fmt::format("code {} in word {:#010x}", code, word));
  const auto& entry = kCatalog[code];
  Instruction instr{entry.opcode, {}};
  instr.operands.reserve(entry.signature.size());
  unsigned used = 0;
  for (const auto kind : entry.signature) {
    const unsigned width = operand_width(kind);
    used += width;
    const std::uint32_t raw = (word >> (kOperandBits - used)) & ((1u << width) - 1u);
    auto operand = operand_from_field(kind, raw);
    if (!operand) {
      throw Error(Errc::MalformedOperand, fmt::format("{} field {:#x} in word {:#010x}", entry.mnemonic, raw, word));
    }
    instr.operands.push_back(*operand);
  }
  const std::uint32_t unused_mask = used >= kOperandBits ? 0u : ((1u << (kOperandBits - used)) - 1u);
  if ((word & unused_mask) != 0) {
    throw Error(Errc::MalformedOperand, fmt::format("{}: unused bits set in {:#010x}", entry.mnemonic, word));
  }
  return instr;
}

std::string to_string(const Instruction& instr) {
  std::string out(info(instr.opcode).mnemonic);
  for (std::size_t i = 0; i < instr.operands.size(); ++i) {
    out += i == 0 ? " " : ", ";
    out += operand_text(instr.operands[i]);
  }
  return out;
}

std::vector<Instruction> assemble(std::string_view text) {
  std::vector<Instruction> program;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto ws = line.find_first_of(" \t");
    const auto mnemonic = line.substr(0, ws);
    const auto rest = ws == std::string_view::npos ? std::string_view{} : trim(line.substr(ws));
    const auto op = opcode_from_mnemonic(mnemonic);
    if (!op) throw Error(Errc::UnknownMnemonic, fmt::format("line {}: '{}'", line_no, mnemonic));
    const auto& entry = info(*op);

    std::vector<std::string_view> tokens;
    if (!rest.empty()) {
      std::string_view r = rest;
      while (true) {
        const auto comma = r.find(',');
        tokens.push_back(trim(r.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        r = r.substr(comma + 1);
      }
    }
    if (tokens.size() != entry.signature.size()) {
      throw Error(Errc::ParseError, fmt::format("line {}: {} takes {} operands, got {}", line_no,
                                                entry.mnemonic, entry.signature.size(), tokens.size()));
    }

    Instruction instr{*op, {}};
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const auto tok = tokens[i];
      const auto bad = [&] {
        return Error(Errc::ParseError, fmt::format("line {}: bad operand '{}' for {}", line_no, tok, entry.mnemonic));
      };
      switch (entry.signature[i]) {
        case K::Reg: {
          auto r = parse_reg(tok);
          if (!r) throw bad();
          instr.operands.emplace_back(Reg{*r});
          break;
        }
        case K::Src: {
          auto s = parse_src(tok);
          if (!s) throw bad();
          instr.operands.emplace_back(*s);
          break;
        }
        case K::Port: {
          auto d = parse_port(tok);
          if (!d) throw bad();
          instr.operands.emplace_back(Port{*d});
          break;
        }
        case K::Imm: {
          auto v = parse_int(tok);
          if (!v || *v < -32768 || *v > 32767) throw bad();
          instr.operands.emplace_back(Imm{static_cast<std::int32_t>(*v)});
          break;
        }
        case K::Len: {
          auto v = parse_int(tok);
          if (!v || *v < 0 || *v >= (1 << 24)) throw bad();
          instr.operands.emplace_back(Len{static_cast<std::uint32_t>(*v)});
          break;
        }
        case K::Addr:
        case K::Target: {
          auto v = parse_int(tok);
          if (!v || *v < 0 || *v > 0xFFFF) throw bad();
          if (entry.signature[i] == K::Addr) {
            instr.operands.emplace_back(Addr{static_cast<std::uint32_t>(*v)});
          } else {
            instr.operands.emplace_back(Target{static_cast<std::uint32_t>(*v)});
          }
          break;
        }
      }
    }
    program.push_back(std::move(instr));
  }
  return program;
}

std::string disassemble(std::span<const Instruction> program) {
  std::string out;
  for (const auto& instr : program) {
    out += to_string(instr);
    out += '\n';
  }
  return out;
}

namespace {
constexpr std::array<std::uint8_t, 8> kMagic{'O', 'V', 'L', '4', '2', 0, 0, 0};
}

std::vector<std::uint8_t> write_image(std::span<const std::uint32_t> words) {
  std::vector<std::uint8_t> bytes(kMagic.begin(), kMagic.end());
  bytes.push_back(kImageVersion);
  bytes.reserve(bytes.size() + words.size() * 4);
  for (std::uint32_t w : words) {
    for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<std::uint8_t>(w >> (8 * b)));
  }
  return bytes;
}

std::vector<std::uint32_t> read_image(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size() + 1 || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw Error(Errc::SchemaError, "missing OVL42 magic");
  }
  if (bytes[kMagic.size()] != kImageVersion) {
    throw Error(Errc::SchemaError, fmt::format("unsupported image version {}", bytes[kMagic.size()]));
  }
  const auto payload = bytes.subspan(kMagic.size() + 1);
  if (payload.size() % 4 != 0) throw Error(Errc::SchemaError, "truncated word in image");
  std::vector<std::uint32_t> words(payload.size() / 4);
  for (std::size_t i = 0; i < words.size(); ++i) {
    std::uint32_t w = 0;
    for (int b = 0; b < 4; ++b) w |= static_cast<std::uint32_t>(payload[4 * i + b]) << (8 * b);
    words[i] = w;
  }
  return words;
}

std::optional<Opcode> bypass_opcode(Direction entry, Direction exit) noexcept {
  using D = Direction;
  struct Pair {
    D from;
    D to;
    Opcode op;
  };
  static constexpr std::array<Pair, 8> kPairs{{
      {D::North, D::East, Opcode::BYPASS_N_E},
      {D::North, D::South, Opcode::BYPASS_N_S},
      {D::North, D::West, Opcode::BYPASS_N_W},
      {D::East, D::North, Opcode::BYPASS_E_N},
      {D::East, D::South, Opcode::BYPASS_E_S},
      {D::East, D::West, Opcode::BYPASS_E_W},
      {D::South, D::North, Opcode::BYPASS_S_N},
      {D::South, D::East, Opcode::BYPASS_S_E},
  }};
  for (const auto& p : kPairs) {
    if (p.from == entry && p.to == exit) return p.op;
  }
  return std::nullopt;
}

Opcode setport_opcode(Direction dir, PortMode::Kind kind) noexcept {
  int offset = 0;
  switch (kind) {
    case PortMode::Kind::Idle: offset = 0; break;
    case PortMode::Kind::Consume: offset = 1; break;
    case PortMode::Kind::Emit: offset = 2; break;
    case PortMode::Kind::Bypass: offset = 0; break;
  }
  return static_cast<Opcode>(index_of(dir) * 3 + offset);
}

std::vector<Instruction> port_mode_instructions(Direction dir, PortMode mode) {
  if (mode.kind != PortMode::Kind::Bypass) return {Instruction{setport_opcode(dir, mode.kind), {}}};
  if (mode.to == dir) {
    throw Error(Errc::IllegalBypass, fmt::format("bypass {} back to itself", direction_letter(dir)));
  }
  if (auto op = bypass_opcode(dir, mode.to)) return {Instruction{*op, {}}};
  return {Instruction{setport_opcode(dir, PortMode::Kind::Consume), {}},
          Instruction{setport_opcode(mode.to, PortMode::Kind::Emit), {}}};
}

}  // namespace overlay
