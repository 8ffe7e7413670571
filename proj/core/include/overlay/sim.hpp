#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "overlay/fabric.hpp"
#include "overlay/jit.hpp"
#include "overlay/oplib.hpp"
#include "overlay/pattern.hpp"

namespace overlay {

struct SimConfig {
  double cycle_ns = 10.0;               // 100 MHz overlay clock
  double transfer_ns_per_word = 20.0;   // host <-> BRAM streaming
  double pr_cost_ms_per_tile = 0.625;   // one partial reconfiguration
  double hop_cycles_per_element = 2.0;  // store-and-forward per pass-through tile
  std::uint64_t step_budget = 0;        // 0: derived from the program size

  // Throws Error{InvalidConfig} on negative or non-finite fields.
  void validate() const;

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

SimConfig sim_config_from_json(std::string_view json_text, SimConfig base = {});
std::string sim_config_to_json(const SimConfig& cfg);

struct TileTrace {
  Coord coord;
  TileRole role = TileRole::Operator;
  std::string op_id;
  std::uint64_t elements = 0;      // elements the resident operator processed
  std::uint64_t forwarded = 0;     // elements passed through the switch
  std::uint64_t instructions = 0;  // instructions retired

  friend bool operator==(const TileTrace&, const TileTrace&) = default;
};

struct SimReport {
  OutputKind output_kind = OutputKind::Stream;
  std::vector<float> outputs;
  std::uint64_t pipeline_fill = 0;
  std::uint64_t cycles_compute = 0;
  std::uint64_t words_transferred = 0;
  double time_transfer_ms = 0.0;
  double time_compute_ms = 0.0;
  double time_reconfig_ms = 0.0;
  double total_ms = 0.0;           // transfer + compute
  double total_with_pr_ms = 0.0;   // total + reconfiguration
  std::size_t hops = 0;
  std::size_t reconfig_loads = 0;
  std::vector<TileTrace> trace;    // row-major

  // Float fields compare bit for bit.
  friend bool operator==(const SimReport& a, const SimReport& b) noexcept;
};

using StreamInputs = std::map<std::string, std::vector<float>, std::less<>>;

// Executes the program's tile instruction streams on a copy of `fabric`.
// Reconfiguration loads from the program's plan are applied first (a load is
// skipped when the same operator is already resident there).
// Cost model:
//   cycles_compute = fill + (n - 1) * max_ii + n * hop_cycles_per_element * hops
//   fill           = longest latency path through the operator graph
//   transfer       = words streamed into BRAMs + stream words read back
// Throws Error{StreamLengthMismatch | UnloadedTile | NonTerminating | InvalidConfig}.
SimReport run(const OverlayFabric& fabric, const CompiledProgram& program,
              const StreamInputs& inputs, const SimConfig& cfg);

// Sequential reference evaluation: elementwise in index order, reduce as a
// left fold from init, filter keeps order, cond picks per element.
// Throws Error{StreamLengthMismatch} and the lowering errors for ill-typed
// programs.
std::vector<float> oracle(const PatternProgram& program, const LibraryManifest& lib,
                          const StreamInputs& inputs);

struct SweepRow {
  int hops = 0;
  double total_ms = 0.0;
  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

// Runs the dot-product program on the static overlay built from `base` for
// each requested pass-through count (one static scenario per count).
std::vector<SweepRow> sweep_hops(const OverlayFabric& base, const LibraryManifest& lib,
                                 std::span<const int> hop_counts, std::size_t n,
                                 const SimConfig& cfg, std::uint64_t seed);

std::string report_to_json(const SimReport& report);
std::string_view csv_header() noexcept;
std::string report_csv_row(std::string_view target, std::size_t n, const SimReport& report);

}  // namespace overlay
