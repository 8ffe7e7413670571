#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "overlay/fabric.hpp"
#include "overlay/oplib.hpp"
#include "support/expect_errc.hpp"

using namespace overlay;

namespace {

std::size_t count_class(const OverlayFabric& f, TileClass cls) {
  std::size_t n = 0;
  for (const auto& t : f.tiles()) n += t.cls == cls ? 1 : 0;
  return n;
}

OperatorDescriptor op_with(ResourceBudget fp) {
  OperatorDescriptor op;
  op.id = "probe";
  op.kernel = Kernel::Add;
  op.arity = 2;
  op.footprint = fp;
  return op;
}

}  // namespace

TEST(Fabric, ThreeByThreeHasThreeLargeTiles) {
  const auto f = build_fabric(3, 3);
  EXPECT_EQ(f.tiles().size(), 9u);
  EXPECT_EQ(count_class(f, TileClass::Large), 3u);
  EXPECT_EQ(count_class(f, TileClass::Small), 6u);
  // Row-major: the first three positions.
  for (int c = 0; c < 3; ++c) EXPECT_EQ(f.tile({0, c}).cls, TileClass::Large);
}

TEST(Fabric, TinyMeshes) {
  EXPECT_EQ(build_fabric(1, 1).large_tile_count(), 1u);
  EXPECT_EQ(build_fabric(2, 2).large_tile_count(), 1u);
  EXPECT_EQ(build_fabric(2, 2).tiles().size(), 4u);
}

TEST(Fabric, LargeCountIsCeilingOfQuarterExhaustive) {
  for (int r = 1; r <= 8; ++r) {
    for (int c = 1; c <= 8; ++c) {
      const auto expected = static_cast<std::size_t>(std::ceil(r * c / 4.0));
      for (auto policy : {SizingPolicy::RowMajor, SizingPolicy::Spread}) {
        const auto f = build_fabric(r, c, policy);
        EXPECT_EQ(count_class(f, TileClass::Large), expected) << r << "x" << c;
      }
    }
  }
}

TEST(Fabric, RejectsEmptyDimensions) {
  EXPECT_ERRC(build_fabric(0, 3), Errc::InvalidDimensions);
  EXPECT_ERRC(build_fabric(3, 0), Errc::InvalidDimensions);
}

TEST(Fabric, BudgetsMatchRegionSizes) {
  EXPECT_EQ(kLargeBudget, (ResourceBudget{8, 964, 1228}));
  EXPECT_EQ(kSmallBudget, (ResourceBudget{4, 156, 270}));
}

TEST(Fabric, OverflowNamesTheField) {
  auto f = build_fabric(3, 3);
  try {
    f.load_operator({1, 1}, op_with({5, 100, 200}));
    FAIL() << "expected ResourceOverflow";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ResourceOverflow);
    EXPECT_NE(std::string(e.what()).find("dsp"), std::string::npos);
  }
  EXPECT_EQ(f.reconfig_count(), 0u);
  EXPECT_FALSE(f.tile({1, 1}).loaded);
}

TEST(Fabric, LoadsCountReconfigurations) {
  const auto lib = default_library();
  auto f = build_fabric(3, 3);
  f.load_operator({0, 0}, *lib.find("sqrtf"));
  EXPECT_EQ(f.reconfig_count(), 1u);
  f.load_operator({2, 2}, *lib.find("mul"));
  EXPECT_EQ(f.reconfig_count(), 2u);
  EXPECT_EQ(f.tile({2, 2}).loaded->id, "mul");
  EXPECT_ERRC(f.load_operator({2, 1}, *lib.find("sqrtf")), Errc::ResourceOverflow);
  EXPECT_ERRC(f.load_operator({3, 0}, *lib.find("mul")), Errc::UnknownCoordinate);
  EXPECT_EQ(f.reconfig_count(), 2u);
}

TEST(Fabric, PortModes) {
  auto f = build_fabric(3, 3);
  f.configure_port({0, 0}, Direction::West, PortMode::consume());
  EXPECT_EQ(f.tile({0, 0}).port(Direction::West), PortMode::consume());
  EXPECT_ERRC(f.configure_port({1, 1}, Direction::West, PortMode::bypass(Direction::West)), Errc::IllegalBypass);
  f.configure_port({1, 1}, Direction::West, PortMode::bypass(Direction::East));
  EXPECT_EQ(f.tile({1, 1}).port(Direction::West), PortMode::bypass(Direction::East));
  EXPECT_ERRC(f.configure_port({0, 1}, Direction::South, PortMode::bypass(Direction::North)),
              Errc::BoundaryViolation);
  EXPECT_ERRC(f.configure_port({5, 5}, Direction::North, PortMode::idle()), Errc::UnknownCoordinate);
}

TEST(Fabric, EdgeIoCanBeDisabled) {
  FabricParams p;
  p.edge_io = false;
  auto f = build_fabric(2, 2, SizingPolicy::RowMajor, p);
  EXPECT_ERRC(f.configure_port({0, 0}, Direction::North, PortMode::emit()), Errc::BoundaryViolation);
  f.configure_port({0, 0}, Direction::East, PortMode::emit());
}

TEST(Fabric, ClearAllKeepsHistory) {
  const auto lib = default_library();
  auto f = build_fabric(2, 3);
  f.load_operator({0, 0}, *lib.find("add"));
  f.configure_port({0, 0}, Direction::East, PortMode::emit());
  f.clear_all();
  EXPECT_TRUE(f.same_state(build_fabric(2, 3)));
  EXPECT_EQ(f.reconfig_count(), 1u);
  for (const auto& t : f.tiles()) {
    EXPECT_FALSE(t.loaded);
    for (auto d : kDirections) EXPECT_EQ(t.port(d), PortMode::idle());
  }
}

TEST(Fabric, ReloadAfterClearIsIdempotent) {
  const auto lib = default_library();
  for (const auto& op : lib.operators) {
    auto a = build_fabric(3, 3);
    a.load_operator({0, 1}, op);
    auto b = a;
    b.clear_all();
    b.load_operator({0, 1}, op);
    EXPECT_TRUE(a.same_state(b)) << op.id;
    EXPECT_EQ(b.reconfig_count(), 2u);
  }
}

TEST(Fabric, AccountingUnderRandomMutations) {
  const auto lib = default_library();
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto f = build_fabric(1 + static_cast<int>(rng() % 5), 1 + static_cast<int>(rng() % 5));
    std::size_t successes = 0;
    for (int step = 0; step < 60; ++step) {
      const Coord c{static_cast<int>(rng() % 6), static_cast<int>(rng() % 6)};
      const auto& op = lib.operators[rng() % lib.operators.size()];
      try {
        if (rng() % 13 == 0) {
          f.clear_all();
        } else {
          f.load_operator(c, op);
          ++successes;
        }
      } catch (const Error& e) {
        EXPECT_TRUE(e.code() == Errc::ResourceOverflow || e.code() == Errc::UnknownCoordinate);
      }
      f.check_invariants();
      for (const auto& t : f.tiles()) {
        if (t.loaded) EXPECT_TRUE(t.loaded->footprint.fits_within(budget_of(t.cls)));
      }
    }
    EXPECT_EQ(f.reconfig_count(), successes);
  }
}

TEST(Fabric, InstructionBramCapacity) {
  FabricParams p;
  p.instr_capacity = 4;
  auto f = build_fabric(1, 2, SizingPolicy::RowMajor, p);
  const std::vector<std::uint32_t> ok(4, 7u);
  f.store_program({0, 1}, ok);
  const std::vector<std::uint32_t> big(5, 7u);
  EXPECT_ERRC(f.store_program({0, 1}, big), Errc::CapacityExceeded);
}

TEST(Fabric, JsonRoundTrip) {
  const auto lib = default_library();
  FabricParams p;
  p.instr_capacity = 128;
  p.data_words = 64;
  auto f = build_fabric(4, 3, SizingPolicy::Spread, p);
  const auto back = fabric_from_json(fabric_to_json(f));
  EXPECT_TRUE(back.same_state(f));
  EXPECT_EQ(back.sizing(), SizingPolicy::Spread);
  EXPECT_EQ(back.params(), p);
}

TEST(Fabric, ParseMesh) {
  EXPECT_EQ(parse_mesh("3x3"), (std::pair{3, 3}));
  EXPECT_EQ(parse_mesh("2x5"), (std::pair{2, 5}));
  EXPECT_ERRC(parse_mesh("3by3"), Errc::ParseError);
  EXPECT_ERRC(parse_mesh("x3"), Errc::ParseError);
}
