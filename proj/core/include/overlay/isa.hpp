#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "overlay/fabric.hpp"
#include "overlay/mesh.hpp"

namespace overlay {

enum class OpCategory { Interconnect, Branching, VectorOp, MemReg };

std::string_view to_string(OpCategory c) noexcept;

// Opcode values are the 6-bit field of the instruction word.
enum class Opcode : std::uint8_t {
  // Interconnect (22)
  SETPORT_N_IDLE, SETPORT_N_CONSUME, SETPORT_N_EMIT,
  SETPORT_E_IDLE, SETPORT_E_CONSUME, SETPORT_E_EMIT,
  SETPORT_S_IDLE, SETPORT_S_CONSUME, SETPORT_S_EMIT,
  SETPORT_W_IDLE, SETPORT_W_CONSUME, SETPORT_W_EMIT,
  BYPASS_N_E, BYPASS_N_S, BYPASS_N_W, BYPASS_E_N,
  BYPASS_E_S, BYPASS_E_W, BYPASS_S_N, BYPASS_S_E,
  FLUSH_LINKS, COMMIT_LINKS,
  // Branching (6)
  BEQ, BNE, BLT, BGE, JMP, SEL,
  // Vector (2)
  VMUL, VMAC,
  // Memory & register (12)
  LDB0, LDB1, STB0, STB1, LDI, MOV, PUSH_IN, POP_OUT, CLRACC, RDACC, SETLEN, HALT,
};

inline constexpr std::size_t kOpcodeCount = 42;
static_assert(static_cast<std::size_t>(Opcode::HALT) + 1 == kOpcodeCount);

// Field widths in bits: Reg 4, Src 6, Port 2, Imm 16 (signed), Len 24,
// Addr 16, Target 16.  Operands are packed from bit 25 downward.
enum class OperandKind { Reg, Src, Port, Imm, Len, Addr, Target };

unsigned operand_width(OperandKind kind) noexcept;

struct Reg {
  std::uint8_t index = 0;
  friend constexpr bool operator==(Reg, Reg) = default;
};

// Stream endpoint of a vector instruction: a port, a data BRAM, a register
// (broadcast scalar) or nothing.
struct Src {
  enum class Type : std::uint8_t { None = 0, Port = 1, Bram = 2, Reg = 3 };
  Type type = Type::None;
  std::uint8_t index = 0;

  static constexpr Src none() noexcept { return {}; }
  static constexpr Src port(Direction d) noexcept {
    return {Type::Port, static_cast<std::uint8_t>(d)};
  }
  static constexpr Src bram(std::uint8_t b) noexcept { return {Type::Bram, b}; }
  static constexpr Src reg(std::uint8_t r) noexcept { return {Type::Reg, r}; }

  friend constexpr bool operator==(Src, Src) = default;
};

struct Port {
  Direction dir = Direction::North;
  friend constexpr bool operator==(Port, Port) = default;
};
struct Imm {
  std::int32_t value = 0;
  friend constexpr bool operator==(Imm, Imm) = default;
};
struct Len {
  std::uint32_t value = 0;
  friend constexpr bool operator==(Len, Len) = default;
};
struct Addr {
  std::uint32_t value = 0;
  friend constexpr bool operator==(Addr, Addr) = default;
};
struct Target {
  std::uint32_t value = 0;
  friend constexpr bool operator==(Target, Target) = default;
};

using Operand = std::variant<Reg, Src, Port, Imm, Len, Addr, Target>;

OperandKind kind_of(const Operand& operand) noexcept;

struct Instruction {
  Opcode opcode = Opcode::SETPORT_N_IDLE;
  std::vector<Operand> operands;

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

using InstrWord = std::uint32_t;

struct OpcodeInfo {
  Opcode opcode;
  std::string_view mnemonic;
  OpCategory category;
  std::span<const OperandKind> signature;
  std::string_view semantics;
};

// All 42 opcodes in code order.
std::span<const OpcodeInfo> isa_catalog() noexcept;
const OpcodeInfo& info(Opcode op) noexcept;
std::optional<Opcode> opcode_from_mnemonic(std::string_view mnemonic) noexcept;

// Throws Error{SignatureMismatch} on wrong operand kinds or count and
// Error{MalformedOperand} on values that do not fit their field.
InstrWord encode(const Instruction& instr);

// Throws Error{IllegalOpcode} for codes >= 42 and Error{MalformedOperand}
// for out-of-range fields or non-zero unused bits.
Instruction decode(InstrWord word);

// One instruction per line, `#` starts a comment, mnemonics and operand
// tokens are case-insensitive.  Operands: r0..r15, B0/B1, N/E/S/W, NONE,
// integers.  Throws Error{ParseError | UnknownMnemonic} with the line number.
std::vector<Instruction> assemble(std::string_view text);
std::string disassemble(std::span<const Instruction> program);
std::string to_string(const Instruction& instr);

// Binary image: 8-byte magic "OVL42\0\0\0", one version byte, then
// little-endian 32-bit words.
inline constexpr std::uint8_t kImageVersion = 1;
std::vector<std::uint8_t> write_image(std::span<const std::uint32_t> words);
std::vector<std::uint32_t> read_image(std::span<const std::uint8_t> bytes);  // Error{SchemaError}

// Hardware bypass opcode for entry->exit, if the pair is one of the eight
// encoded directly.  The other four legal pairs (W->N, W->E, W->S, S->W) are
// expressed with a Consume/Emit SETPORT pair on a tile without an operator.
std::optional<Opcode> bypass_opcode(Direction entry, Direction exit) noexcept;
Opcode setport_opcode(Direction dir, PortMode::Kind kind) noexcept;

// Interconnect instructions that put port `dir` into `mode`.
std::vector<Instruction> port_mode_instructions(Direction dir, PortMode mode);

}  // namespace overlay
