#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "overlay/oplib.hpp"
#include "overlay/sim.hpp"

namespace overlay {

enum class RunTarget { Dynamic, Static0, Static1, Static2, Oracle };

std::string_view to_string(RunTarget t) noexcept;
std::optional<RunTarget> target_from_string(std::string_view name) noexcept;

struct ExperimentSpec {
  int rows = 3;
  int cols = 3;
  std::vector<RunTarget> targets{RunTarget::Dynamic, RunTarget::Static0, RunTarget::Static1, RunTarget::Static2,
                              RunTarget::Oracle};
  std::size_t n = 2048;  // 16 KB across both input vectors of 4-byte words
  std::uint64_t seed = 42;
  SimConfig sim;

  // Throws Error{SchemaError} when n is 0 or targets is empty.
  void validate() const;
};

// {"mesh": "3x3", "targets": [...], "n": 2048, "seed": 42, "sim": {...}}
// Missing seed falls back to `fallback_seed`.
ExperimentSpec experiment_spec_from_json(std::string_view json_text, std::uint64_t fallback_seed);

struct ExperimentRow {
  RunTarget target = RunTarget::Dynamic;
  std::size_t n = 0;
  std::optional<SimReport> report;  // empty for the oracle row
  float value = 0.0f;
  bool matches_oracle = true;
  double wall_ms = 0.0;  // oracle row only; host wall clock, not comparable
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;  // dynamic, static by hop count, oracle
  float oracle_value = 0.0f;
};

// Dot product of two seeded random vectors on every requested target.
// Targets run concurrently; rows come back in canonical order.
ExperimentResult run_experiment(const ExperimentSpec& spec, const LibraryManifest& lib);

// header + one row per target + a "#" footnote line.  Byte-identical for
// equal specs: the oracle row carries no timing columns.
std::string experiment_csv(const ExperimentResult& result);
std::string experiment_table(const ExperimentResult& result);

}  // namespace overlay
