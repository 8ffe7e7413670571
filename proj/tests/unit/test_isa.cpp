#include <map>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "overlay/isa.hpp"
#include "support/expect_errc.hpp"
#include "support/isa_gen.hpp"

using namespace overlay;

TEST(Isa, CatalogPartition) {
  const auto cat = isa_catalog();
  ASSERT_EQ(cat.size(), 42u);
  std::map<OpCategory, int> counts;
  std::set<std::string_view> names;
  for (std::size_t i = 0; i < cat.size(); ++i) {
    EXPECT_EQ(static_cast<std::size_t>(cat[i].opcode), i);
    EXPECT_EQ(&info(cat[i].opcode), &cat[i]);
    EXPECT_FALSE(cat[i].semantics.empty());
    EXPECT_LE(cat[i].signature.size(), 3u);
    ++counts[cat[i].category];
    names.insert(cat[i].mnemonic);
    EXPECT_EQ(opcode_from_mnemonic(cat[i].mnemonic), cat[i].opcode);
  }
  EXPECT_EQ(names.size(), 42u);
  EXPECT_EQ(counts[OpCategory::Interconnect], 22);
  EXPECT_EQ(counts[OpCategory::Branching], 6);
  EXPECT_EQ(counts[OpCategory::VectorOp], 2);
  EXPECT_EQ(counts[OpCategory::MemReg], 12);
}

TEST(Isa, ZeroOperandWordHasClearOperandBits) {
  for (const auto& e : isa_catalog()) {
    if (!e.signature.empty()) continue;
    const auto w = encode(Instruction{e.opcode, {}});
    EXPECT_EQ(w & 0x03FF'FFFFu, 0u) << e.mnemonic;
    EXPECT_EQ(w >> 26, static_cast<std::uint32_t>(e.opcode));
  }
}

TEST(Isa, VmacAndVmulDiffer) {
  const auto vmac = assemble("VMAC r1, r2");
  const auto vmul = assemble("VMUL r1, r2");
  ASSERT_EQ(vmac.size(), 1u);
  ASSERT_EQ(vmul.size(), 1u);
  EXPECT_NE(encode(vmac[0]), encode(vmul[0]));
}

TEST(Isa, DecodeRejectsUndefinedOpcodes) {
  EXPECT_ERRC(decode(63u << 26), Errc::IllegalOpcode);
  for (std::uint32_t code = 42; code < 64; ++code) EXPECT_ERRC(decode(code << 26), Errc::IllegalOpcode);
}

TEST(Isa, AllZeroWordIsOpcodeZero) {
  const auto i = decode(0u);
  EXPECT_EQ(static_cast<int>(i.opcode), 0);
  EXPECT_TRUE(i.operands.empty());
}

TEST(Isa, DecodeRejectsStrayBits) {
  EXPECT_ERRC(decode(encode(Instruction{Opcode::HALT, {}}) | 1u), Errc::MalformedOperand);
}

TEST(Isa, EncodeChecksSignature) {
  EXPECT_ERRC(encode(Instruction{Opcode::HALT, {Reg{1}}}), Errc::SignatureMismatch);
  EXPECT_ERRC(encode(Instruction{Opcode::SETLEN, {Reg{1}}}), Errc::SignatureMismatch);
  EXPECT_ERRC(encode(Instruction{Opcode::MOV, {Reg{16}, Reg{0}}}), Errc::MalformedOperand);
  EXPECT_ERRC(encode(Instruction{Opcode::SETLEN, {Len{1u << 24}}}), Errc::MalformedOperand);
}

TEST(Isa, EncodeDecodeFuzz) {
  std::mt19937_64 rng(11);
  std::map<std::uint32_t, Instruction> seen;
  std::map<Opcode, int> per_opcode;
  for (int i = 0; i < 10'000; ++i) {
    const auto instr = oftest::random_instruction(rng);
    const auto w = encode(instr);
    ASSERT_EQ(decode(w), instr) << to_string(instr);
    // Injective: a repeated word must come from the same instruction.
    const auto [it, fresh] = seen.emplace(w, instr);
    if (!fresh) ASSERT_EQ(it->second, instr);
    ++per_opcode[instr.opcode];
  }
  EXPECT_EQ(per_opcode.size(), 42u);
}

TEST(Isa, AssembleGrammar) {
  const auto p = assemble("VMUL B0, B1");
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0], (Instruction{Opcode::VMUL, {Src::bram(0), Src::bram(1)}}));
  const auto q = assemble("# header\n  setlen 2048   # stream length\n\nsel n, r3, none\nhalt\n");
  ASSERT_EQ(q.size(), 3u);
  EXPECT_EQ(q[0], (Instruction{Opcode::SETLEN, {Len{2048}}}));
  EXPECT_EQ(q[1], (Instruction{Opcode::SEL, {Src::port(Direction::North), Src::reg(3), Src::none()}}));
  EXPECT_EQ(q[2].opcode, Opcode::HALT);
}

TEST(Isa, AssembleErrors) {
  EXPECT_ERRC(assemble("BOGUS r1"), Errc::UnknownMnemonic);
  try {
    (void)assemble("HALT\nMOV r1\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ParseError);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_ERRC(assemble("MOV r1, r99"), Errc::ParseError);
}

TEST(Isa, AssembleDisassembleFuzz) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 1000; ++i) {
    std::vector<Instruction> prog(1 + rng() % 30);
    for (auto& instr : prog) instr = oftest::random_instruction(rng);
    ASSERT_EQ(assemble(disassemble(prog)), prog);
  }
}

TEST(Isa, ImageRoundTrip) {
  const std::vector<std::uint32_t> words{0u, 1u, 0xDEADBEEFu, 42u};
  const auto bytes = write_image(words);
  ASSERT_EQ(bytes.size(), 9u + 16u);
  EXPECT_EQ(bytes[8], kImageVersion);
  EXPECT_EQ(read_image(bytes), words);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_ERRC(read_image(bad), Errc::SchemaError);
  auto ragged = bytes;
  ragged.pop_back();
  EXPECT_ERRC(read_image(ragged), Errc::SchemaError);
}

TEST(Isa, EightHardwareBypassPairs) {
  int pairs = 0;
  for (auto in : kDirections) {
    for (auto out : kDirections) {
      if (bypass_opcode(in, out)) {
        ++pairs;
        EXPECT_NE(in, out);
        EXPECT_EQ(info(*bypass_opcode(in, out)).category, OpCategory::Interconnect);
      }
    }
  }
  EXPECT_EQ(pairs, 8);
  EXPECT_FALSE(bypass_opcode(Direction::West, Direction::North));
  EXPECT_FALSE(bypass_opcode(Direction::West, Direction::East));
  EXPECT_FALSE(bypass_opcode(Direction::West, Direction::South));
  EXPECT_FALSE(bypass_opcode(Direction::South, Direction::West));
}

TEST(Isa, EveryPortModeIsExpressible) {
  std::set<Opcode> used;
  for (auto dir : kDirections) {
    std::vector<PortMode> modes{PortMode::idle(), PortMode::consume(), PortMode::emit()};
    for (auto to : kDirections) {
      if (to != dir) modes.push_back(PortMode::bypass(to));
    }
    for (const auto& mode : modes) {
      const auto code = port_mode_instructions(dir, mode);
      ASSERT_FALSE(code.empty());
      for (const auto& i : code) {
        EXPECT_EQ(info(i.opcode).category, OpCategory::Interconnect);
        EXPECT_NO_THROW((void)encode(i));
        used.insert(i.opcode);
      }
      if (mode.kind == PortMode::Kind::Bypass) {
        EXPECT_EQ(code.size(), bypass_opcode(dir, mode.to) ? 1u : 2u);
      }
    }
  }
  // All interconnect opcodes except the two link-commit controls.
  EXPECT_EQ(used.size(), 20u);
}
