#include "overlay/experiment.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <future>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "overlay/error.hpp"
#include "overlay/rng.hpp"

namespace overlay {

std::string_view to_string(RunTarget t) noexcept {
  switch (t) {
    case RunTarget::Dynamic: return "dynamic";
    case RunTarget::Static0: return "static0";
    case RunTarget::Static1: return "static1";
    case RunTarget::Static2: return "static2";
    case RunTarget::Oracle: return "oracle";
  }
  return "?";
}

std::optional<RunTarget> target_from_string(std::string_view name) noexcept {
  for (RunTarget t : {RunTarget::Dynamic, RunTarget::Static0, RunTarget::Static1, RunTarget::Static2, RunTarget::Oracle}) {
    if (to_string(t) == name) return t;
  }
  return std::nullopt;
}

void ExperimentSpec::validate() const {
  if (rows < 1 || cols < 1) throw Error(Errc::SchemaError, fmt::format("mesh {}x{}", rows, cols));
  if (n == 0) throw Error(Errc::SchemaError, "n must be positive");
  if (targets.empty()) throw Error(Errc::SchemaError, "no targets");
  sim.validate();
}

ExperimentSpec experiment_spec_from_json(std::string_view json_text, std::uint64_t fallback_seed) {
  ExperimentSpec spec;
  spec.seed = fallback_seed;
  try {
    const auto doc = nlohmann::json::parse(json_text);
    if (!doc.is_object()) throw Error(Errc::SchemaError, "experiment spec must be an object");
    for (const auto& [key, value] : doc.items()) {
      if (key == "mesh") {
        std::tie(spec.rows, spec.cols) = parse_mesh(value.get<std::string>());
      } else if (key == "targets") {
        spec.targets.clear();
        for (const auto& t : value) {
          const auto name = t.get<std::string>();
          const auto target = target_from_string(name);
          if (!target) throw Error(Errc::SchemaError, fmt::format("unknown target '{}'", name));
          spec.targets.push_back(*target);
        }
      } else if (key == "n") {
        if (!value.is_number_unsigned()) throw Error(Errc::SchemaError, "n must be a positive integer");
        spec.n = value.get<std::size_t>();
      } else if (key == "seed") {
        if (!value.is_number_unsigned()) throw Error(Errc::SchemaError, "seed must be a non-negative integer");
        spec.seed = value.get<std::uint64_t>();
      } else if (key == "sim") {
        spec.sim = sim_config_from_json(value.dump(), spec.sim);
      } else {
        throw Error(Errc::SchemaError, fmt::format("unknown key '{}'", key));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaError, e.what());
  }
  spec.validate();
  return spec;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const LibraryManifest& lib) {
  spec.validate();
  const auto base = build_fabric(spec.rows, spec.cols);
  const auto program = vmul_reduce_program();
  const auto names = input_streams(program);
  const auto inputs = random_streams(names, spec.n, spec.seed);

  ExperimentResult result;
  result.oracle_value = oracle(program, lib, inputs).at(0);

  std::vector<RunTarget> targets = spec.targets;
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

  auto run_target = [&](RunTarget target) {
    ExperimentRow row;
    row.target = target;
    row.n = spec.n;
    if (target == RunTarget::Oracle) {
      const auto start = std::chrono::steady_clock::now();
      row.value = oracle(program, lib, inputs).at(0);
      row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    } else {
      CompileOptions options;
      options.n = spec.n;
      OverlayFabric fabric = base;
      if (target != RunTarget::Dynamic) {
        fabric = make_static_overlay(base, lib);
        options.mode = PlacementMode::Static;
        options.scenario = static_cast<int>(target) - static_cast<int>(RunTarget::Static0);
      }
      const auto compiled = compile(program, lib, fabric, options);
      row.report = run(fabric, compiled, inputs, spec.sim);
      row.value = row.report->outputs.at(0);
    }
    row.matches_oracle = std::bit_cast<std::uint32_t>(row.value) == std::bit_cast<std::uint32_t>(result.oracle_value);
    return row;
  };

  std::vector<std::future<ExperimentRow>> pending;
  for (RunTarget t : targets) pending.push_back(std::async(std::launch::async, run_target, t));
  for (auto& f : pending) result.rows.push_back(f.get());
  return result;
}

std::string experiment_csv(const ExperimentResult& result) {
  std::string out(csv_header());
  out += '\n';
  for (const auto& row : result.rows) {
    if (row.report) {
      out += report_csv_row(to_string(row.target), row.n, *row.report);
    } else {
      out += fmt::format("{},{},,,,,", to_string(row.target), row.n);
    }
    out += '\n';
  }
  out += "# total_ms = transfer_ms + compute_ms; reconfig_ms is reported separately and not included\n";
  return out;
}

std::string experiment_table(const ExperimentResult& result) {
  std::string out = fmt::format("{:<8} {:>6} {:>4} {:>12} {:>12} {:>12} {:>12}  {:>14}  {}\n", "target", "n", "hops",
                                "transfer_ms", "compute_ms", "reconfig_ms", "total_ms", "value", "match");
  for (const auto& row : result.rows) {
    if (row.report) {
      const auto& r = *row.report;
      out += fmt::format("{:<8} {:>6} {:>4} {:>12.6f} {:>12.6f} {:>12.6f} {:>12.6f}  {:>14.9g}  {}\n",
                         to_string(row.target), row.n, r.hops, r.time_transfer_ms, r.time_compute_ms,
                         r.time_reconfig_ms, r.total_ms, row.value, row.matches_oracle ? "yes" : "NO");
    } else {
      out += fmt::format("{:<8} {:>6} {:>4} {:>12} {:>12} {:>12} {:>12}  {:>14.9g}  {}\n", to_string(row.target),
                         row.n, "-", "-", "-", "-", "-", row.value, row.matches_oracle ? "yes" : "NO");
      out += fmt::format("  oracle host wall time {:.3f} ms (reference, not comparable)\n", row.wall_ms);
    }
  }
  out += "reconfig_ms is excluded from total_ms\n";
  return out;
}

}  // namespace overlay
