#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "overlay/experiment.hpp"
#include "overlay/isa.hpp"
#include "overlay/jit.hpp"
#include "overlay/rng.hpp"
#include "overlay/sim.hpp"

namespace {

using namespace overlay;

const LibraryManifest& lib() {
  static const LibraryManifest l = default_library();
  return l;
}

// Chain of alternating cheap ops on a square mesh; the placer has to snake.
void BM_PlaceChain(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const auto fabric = build_fabric(side, side);
  std::vector<OperatorDescriptor> ops;
  const char* ids[] = {"add", "mul", "sub", "max"};
  for (int i = 0; i < side * side - 1; ++i) ops.push_back(*lib().find(ids[i % 4]));
  const auto graph = make_chain(ops);
  for (auto _ : state) benchmark::DoNotOptimize(place_dynamic(graph, fabric));
  state.SetLabel(std::to_string(ops.size()) + " nodes");
}
BENCHMARK(BM_PlaceChain)->Arg(2)->Arg(3)->Arg(4)->Arg(5);

void BM_CompileDot(benchmark::State& state) {
  const auto fabric = build_fabric(3, 3);
  const auto program = vmul_reduce_program();
  CompileOptions opt;
  opt.n = 2048;
  for (auto _ : state) benchmark::DoNotOptimize(compile(program, lib(), fabric, opt));
}
BENCHMARK(BM_CompileDot);

void BM_SimulateDot(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto fabric = build_fabric(3, 3);
  const auto program = vmul_reduce_program();
  CompileOptions opt;
  opt.n = n;
  const auto compiled = compile(program, lib(), fabric, opt);
  const auto names = input_streams(program);
  const auto inputs = random_streams(names, n, 42);
  const SimConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(run(fabric, compiled, inputs, cfg));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_SimulateDot)->Arg(256)->Arg(2048)->Arg(16384);

void BM_SimulateStatic2(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto fabric = make_static_overlay(build_fabric(3, 3), lib());
  const auto program = vmul_reduce_program();
  CompileOptions opt;
  opt.n = n;
  opt.mode = PlacementMode::Static;
  opt.scenario = 2;
  const auto compiled = compile(program, lib(), fabric, opt);
  const auto names = input_streams(program);
  const auto inputs = random_streams(names, n, 42);
  const SimConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(run(fabric, compiled, inputs, cfg));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_SimulateStatic2)->Arg(2048);

void BM_EncodeDecode(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::vector<Instruction> program;
  for (int i = 0; i < 4; ++i) {
    program.push_back(Instruction{Opcode::SETLEN, {Len{static_cast<std::uint32_t>(rng() % 4096 + 1)}}});
    program.push_back(Instruction{Opcode::VMUL, {Src::bram(0), Src::bram(1)}});
    program.push_back(Instruction{Opcode::CLRACC, {}});
    program.push_back(Instruction{Opcode::HALT, {}});
  }
  for (auto _ : state) {
    for (const auto& instr : program) benchmark::DoNotOptimize(decode(encode(instr)));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * program.size()));
}
BENCHMARK(BM_EncodeDecode);

void BM_Experiment(benchmark::State& state) {
  ExperimentSpec spec;
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(spec, lib()));
}
BENCHMARK(BM_Experiment)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
