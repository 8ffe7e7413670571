#include <cstdlib>
#include <random>

#include <gtest/gtest.h>

#include "overlay/rng.hpp"
#include "overlay/sim.hpp"
#include "support/expect_errc.hpp"
#include "support/harness.hpp"
#include "support/program_gen.hpp"
#include "support/reference.hpp"

using namespace overlay;

namespace {

const LibraryManifest& lib() {
  static const auto l = default_library();
  return l;
}

SimReport run_expr(const std::string& expr, const StreamInputs& in, const OverlayFabric& f,
                   CompileOptions opt = {}, SimConfig cfg = {}) {
  opt.n = in.begin()->second.size();
  const auto prog = compile(parse_expression(expr), lib(), f, opt);
  return run(f, prog, in, cfg);
}

CompiledProgram static_dot(int scenario, std::size_t n, OverlayFabric& f) {
  f = make_static_overlay(build_fabric(3, 3), lib());
  CompileOptions opt;
  opt.mode = PlacementMode::Static;
  opt.scenario = scenario;
  opt.n = n;
  return compile(vmul_reduce_program(), lib(), f, opt);
}

}  // namespace

TEST(Sim, DotProductSmall) {
  const StreamInputs in{{"A", {1, 2, 3}}, {"B", {4, 5, 6}}};
  const auto r = run_expr("reduce(add, zipmap(mul, A, B))", in, build_fabric(3, 3));
  EXPECT_EQ(r.output_kind, OutputKind::Scalar);
  EXPECT_EQ(r.outputs, (std::vector<float>{32.0f}));
  EXPECT_EQ(oracle(vmul_reduce_program(), lib(), in), (std::vector<float>{32.0f}));
}

TEST(Sim, OracleExamples) {
  EXPECT_EQ(oracle(vmul_reduce_program(), lib(), {{"A", {1, 0}}, {"B", {0, 1}}}), (std::vector<float>{0.0f}));
  const StreamInputs x{{"X", {1, 3, 0, 5}}};
  const auto filt = parse_expression("filter(cmp_lt, X, 2.0)");
  EXPECT_EQ(oracle(filt, lib(), x), (std::vector<float>{1, 0}));
  EXPECT_EQ(run_expr("filter(cmp_lt, X, 2.0)", x, build_fabric(3, 3)).outputs, (std::vector<float>{1, 0}));
  EXPECT_EQ(run_expr("reduce(add, zipmap(mul, A, B))", {{"A", {1, 0}}, {"B", {0, 1}}}, build_fabric(2, 2)).outputs,
            (std::vector<float>{0.0f}));
}

TEST(Sim, DynamicReconfigurationCost) {
  const auto in = random_streams(std::vector<std::string>{"A", "B"}, 2048, 42);
  const auto r = run_expr("reduce(add, zipmap(mul, A, B))", in, build_fabric(3, 3));
  EXPECT_EQ(r.reconfig_loads, 2u);
  EXPECT_EQ(r.time_reconfig_ms, 1.250);
  EXPECT_EQ(r.total_ms, r.time_transfer_ms + r.time_compute_ms);
  EXPECT_EQ(r.total_with_pr_ms, r.total_ms + r.time_reconfig_ms);
  EXPECT_EQ(r.hops, 0u);
}

TEST(Sim, ResidentOperatorSkipsReload) {
  auto f = build_fabric(3, 3);
  const auto prog = compile(vmul_reduce_program(), lib(), f, {});
  for (const auto& e : prog.reconfig) f.load_operator(e.coord, *lib().find(e.op_id));
  const auto in = random_streams(std::vector<std::string>{"A", "B"}, prog.n, 1);
  const auto r = run(f, prog, in, {});
  EXPECT_EQ(r.reconfig_loads, 0u);
  EXPECT_EQ(r.time_reconfig_ms, 0.0);
}

TEST(Sim, Deterministic) {
  const auto in = random_streams(std::vector<std::string>{"A", "B"}, 300, 9);
  const auto f = build_fabric(3, 3);
  const auto a = run_expr("cond(cmp_lt, sqrtf, mul, A, B)", in, f);
  const auto b = run_expr("cond(cmp_lt, sqrtf, mul, A, B)", in, f);
  EXPECT_TRUE(a == b);
  EXPECT_EQ(report_to_json(a), report_to_json(b));
}

TEST(Sim, StaticHopsCostMore) {
  const std::vector<int> hops{0, 1, 2};
  const auto rows = sweep_hops(build_fabric(3, 3), lib(), hops, 2048, {}, 42);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(rows[i].hops, hops[i]);
  EXPECT_LT(rows[0].total_ms, rows[1].total_ms);
  EXPECT_LT(rows[1].total_ms, rows[2].total_ms);

  SimConfig free_hops;
  free_hops.hop_cycles_per_element = 0.0;
  const auto flat = sweep_hops(build_fabric(3, 3), lib(), hops, 2048, free_hops, 42);
  EXPECT_EQ(flat[0].total_ms, flat[1].total_ms);
  EXPECT_EQ(flat[1].total_ms, flat[2].total_ms);
}

TEST(Sim, CostModelArithmetic) {
  OverlayFabric f = build_fabric(1, 1);
  const auto prog = static_dot(2, 1000, f);
  const auto in = random_streams(std::vector<std::string>{"A", "B"}, 1000, 3);
  SimConfig cfg;
  const auto r = run(f, prog, in, cfg);
  // mul (latency 3) feeds add (latency 2); both ii 1; two hops at 2 cycles.
  EXPECT_EQ(r.pipeline_fill, 5u);
  EXPECT_EQ(r.cycles_compute, 5u + 999u + 1000u * 2u * 2u);
  EXPECT_EQ(r.words_transferred, 2000u);
  EXPECT_DOUBLE_EQ(r.time_transfer_ms, 2000 * 20.0 / 1e6);
  EXPECT_DOUBLE_EQ(r.time_compute_ms, static_cast<double>(r.cycles_compute) * 10.0 / 1e6);
  EXPECT_EQ(r.time_reconfig_ms, 0.0);
}

TEST(Sim, TransferScalesWithLength) {
  OverlayFabric f = build_fabric(1, 1);
  double prev_total = 0.0;
  for (std::size_t n : {64u, 128u, 256u, 512u, 1024u}) {
    const auto prog = static_dot(1, n, f);
    const auto r1 = run(f, prog, random_streams(std::vector<std::string>{"A", "B"}, n, 5), {});
    const auto prog2 = static_dot(1, 2 * n, f);
    const auto r2 = run(f, prog2, random_streams(std::vector<std::string>{"A", "B"}, 2 * n, 5), {});
    EXPECT_DOUBLE_EQ(r2.time_transfer_ms, 2.0 * r1.time_transfer_ms);
    EXPECT_GE(r1.total_ms, prev_total);
    prev_total = r1.total_ms;
  }
}

TEST(Sim, PassThroughTileForwardsEveryElement) {
  OverlayFabric f = build_fabric(1, 1);
  const auto prog = static_dot(1, 256, f);
  const auto r = run(f, prog, random_streams(std::vector<std::string>{"A", "B"}, 256, 5), {});
  EXPECT_EQ(r.hops, 1u);
  std::size_t bypass = 0;
  for (const auto& t : r.trace) {
    if (t.role == TileRole::PassThrough) {
      ++bypass;
      EXPECT_EQ(t.forwarded, 256u);
      EXPECT_EQ(t.elements, 0u);
    } else {
      EXPECT_EQ(t.elements, 256u) << t.op_id;
    }
  }
  EXPECT_EQ(bypass, 1u);
}

TEST(Sim, CondRunsBothBranches) {
  const auto in = random_streams(std::vector<std::string>{"A", "B"}, 200, 77);
  const auto r = run_expr("cond(cmp_lt, sqrtf, mul, A, B)", in, build_fabric(3, 3));
  int branch_tiles = 0;
  for (const auto& t : r.trace) {
    if (t.op_id == "sqrtf" || t.op_id == "mul") {
      EXPECT_EQ(t.elements, 200u);
      ++branch_tiles;
    }
  }
  EXPECT_EQ(branch_tiles, 2);
  EXPECT_TRUE(oftest::same_bits(r.outputs, oftest::reference_eval(parse_expression("cond(cmp_lt, sqrtf, mul, A, B)"), in)));
}

TEST(Sim, FilterKeepsExactlyTheTrueElements) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto in = random_streams(std::vector<std::string>{"X"}, 1 + rng() % 200, rng());
    std::size_t kept = 0;
    for (float v : in.at("X")) kept += v < 0.25f ? 1 : 0;
    const auto r = run_expr("filter(cmp_lt, X, 0.25)", in, build_fabric(2, 2));
    EXPECT_EQ(r.outputs.size(), kept);
    for (float v : r.outputs) EXPECT_LT(v, 0.25f);
  }
}

TEST(Sim, ForeachProducesNothing) {
  const auto r = run_expr("foreach(sin, A)", {{"A", {1, 2, 3}}}, build_fabric(2, 2));
  EXPECT_EQ(r.output_kind, OutputKind::None);
  EXPECT_TRUE(r.outputs.empty());
}

TEST(Sim, MatchesReferenceOnRandomPrograms) {
  oftest::ProgramGen gen(555, 3);
  std::mt19937_64 rng(556);
  int matched = 0;
  for (int i = 0; i < 150; ++i) {
    const auto r = oftest::equivalence_trial(gen.next(), lib(), 1 + rng() % 64, rng);
    ASSERT_NE(r.outcome, oftest::Trial::Mismatch) << r.detail;
    matched += r.outcome == oftest::Trial::Match ? 1 : 0;
  }
  EXPECT_GT(matched, 100);
}

TEST(Sim, InputErrors) {
  const auto f = build_fabric(3, 3);
  CompileOptions opt;
  opt.n = 4;
  const auto prog = compile(vmul_reduce_program(), lib(), f, opt);
  EXPECT_ERRC(run(f, prog, {{"A", {1, 2, 3, 4}}}, {}), Errc::StreamLengthMismatch);
  EXPECT_ERRC(run(f, prog, {{"A", {1, 2, 3, 4}}, {"B", {1, 2, 3}}}, {}), Errc::StreamLengthMismatch);
  EXPECT_ERRC(oracle(vmul_reduce_program(), lib(), {{"A", {1, 2}}}), Errc::StreamLengthMismatch);
  EXPECT_ERRC(run(build_fabric(2, 2), prog, {{"A", {1, 2, 3, 4}}, {"B", {1, 2, 3, 4}}}, {}), Errc::InvalidDimensions);
}

TEST(Sim, StaticProgramNeedsResidents) {
  OverlayFabric f = build_fabric(1, 1);
  const auto prog = static_dot(0, 8, f);
  const auto in = random_streams(std::vector<std::string>{"A", "B"}, 8, 1);
  EXPECT_ERRC(run(build_fabric(3, 3), prog, in, {}), Errc::UnloadedTile);
}

TEST(Sim, DeadlockIsReported) {
  // Point the reduce tile at a port nobody drives.
  const auto f = build_fabric(3, 3);
  CompileOptions opt;
  opt.n = 16;
  auto prog = compile(vmul_reduce_program(), default_library(), f, opt);
  const auto in = random_streams(std::vector<std::string>{"A", "B"}, 16, 1);
  EXPECT_NO_THROW(run(f, prog, in, {}));
  bool patched = false;
  for (auto& t : prog.tiles) {
    if (t.op_id != "add") continue;
    for (auto& i : t.code) {
      if (i.opcode != Opcode::VMAC) continue;
      auto& src = std::get<Src>(i.operands[0]);
      ASSERT_EQ(src.type, Src::Type::Port);
      const auto dir = static_cast<Direction>(src.index);
      src = Src::port(opposite(dir));
      patched = true;
    }
    for (auto& i : t.code) {
      for (auto d : kDirections) {
        if (i.opcode == setport_opcode(d, PortMode::Kind::Consume)) i.opcode = setport_opcode(opposite(d), PortMode::Kind::Consume);
      }
    }
  }
  ASSERT_TRUE(patched);
  EXPECT_ERRC(run(f, prog, in, {}), Errc::NonTerminating);
}

TEST(SimConfig, Validation) {
  SimConfig c;
  EXPECT_NO_THROW(c.validate());
  c.cycle_ns = -1.0;
  EXPECT_ERRC(c.validate(), Errc::InvalidConfig);
  EXPECT_ERRC(sim_config_from_json(R"({"cycle_ns": 5, "bogus": 1})"), Errc::InvalidConfig);
  EXPECT_ERRC(sim_config_from_json("[1]"), Errc::InvalidConfig);
  SimConfig d;
  d.hop_cycles_per_element = 3.5;
  d.step_budget = 99;
  EXPECT_EQ(sim_config_from_json(sim_config_to_json(d)), d);
  EXPECT_EQ(sim_config_from_json(R"({"cycle_ns": 5})").cycle_ns, 5.0);
}

TEST(SimReport, CsvRow) {
  EXPECT_EQ(csv_header(), "target,n,hops,transfer_ms,compute_ms,reconfig_ms,total_ms");
  SimReport r;
  r.hops = 2;
  r.time_transfer_ms = 0.08192;
  r.time_compute_ms = 0.1;
  r.time_reconfig_ms = 0.0;
  r.total_ms = 0.18192;
  EXPECT_EQ(report_csv_row("static2", 2048, r), "static2,2048,2,0.081920,0.100000,0.000000,0.181920");
}

TEST(Rng, PinnedSplitMix) {
  // First outputs of splitmix64 from seed 0, as published with the algorithm.
  SplitMix64 g(0);
  EXPECT_EQ(g.next(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(g.next(), 0x6e789e6aa1b965f4ULL);
  SplitMix64 u(42);
  for (int i = 0; i < 10'000; ++i) {
    const float v = u.uniform_pm1();
    EXPECT_GE(v, -1.0f);
    EXPECT_LT(v, 1.0f);
  }
}

TEST(Rng, StreamsAreSeeded) {
  const std::vector<std::string> names{"B", "A"};
  const auto a = random_streams(names, 100, 7);
  EXPECT_EQ(a, random_streams(names, 100, 7));
  EXPECT_NE(a, random_streams(names, 100, 8));
  EXPECT_EQ(a.at("A").size(), 100u);
  // Sorted-name order: A's values come first from the generator.
  SplitMix64 g(7);
  EXPECT_EQ(a.at("A")[0], g.uniform_pm1());
}

TEST(Rng, DefaultSeedFromEnvironment) {
  ::setenv("OVERLAY_FORGE_SEED", "1234", 1);
  EXPECT_EQ(default_seed(), 1234u);
  ::setenv("OVERLAY_FORGE_SEED", "junk", 1);
  EXPECT_EQ(default_seed(), kDefaultSeed);
  ::unsetenv("OVERLAY_FORGE_SEED");
  EXPECT_EQ(default_seed(), kDefaultSeed);
}
