// overlay-forge: build fabrics, compile pattern programs, run them on the
// simulator and reproduce the static-vs-dynamic overlay experiment.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "overlay/error.hpp"
#include "overlay/experiment.hpp"
#include "overlay/fabric.hpp"
#include "overlay/isa.hpp"
#include "overlay/jit.hpp"
#include "overlay/oplib.hpp"
#include "overlay/pattern.hpp"
#include "overlay/rng.hpp"
#include "overlay/sim.hpp"

namespace fs = std::filesystem;
using namespace overlay;

namespace {

enum ExitCode { kOk = 0, kInternal = 1, kUsage = 2, kSimulation = 3, kCompile = 4 };

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::IoError:
      return kInternal;
    case Errc::ParseError:
    case Errc::UnknownMnemonic:
    case Errc::SchemaError:
    case Errc::InvalidConfig:
    case Errc::InvalidDimensions:
      return kUsage;
    case Errc::StreamLengthMismatch:
    case Errc::UnloadedTile:
    case Errc::NonTerminating:
      return kSimulation;
    default:
      return kCompile;
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, fmt::format("cannot open {}", path));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  const auto text = read_text(path);
  return {text.begin(), text.end()};
}

void write_file(const std::string& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, fmt::format("cannot write {}", path));
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(Errc::IoError, fmt::format("write to {} failed", path));
}

struct SimFlags {
  std::string config_file;
  std::optional<double> cycle_ns;
  std::optional<double> transfer_ns;
  std::optional<double> pr_cost_ms;
  std::optional<double> hop_cycles;
  std::optional<std::uint64_t> step_budget;

  void attach(CLI::App* cmd) {
    cmd->add_option("--sim-config", config_file, "SimConfig JSON file")->check(CLI::ExistingFile);
    cmd->add_option("--cycle-ns", cycle_ns, "overlay clock period in ns");
    cmd->add_option("--transfer-ns-per-word", transfer_ns, "host<->BRAM cost per 32-bit word in ns");
    cmd->add_option("--pr-cost-ms", pr_cost_ms, "partial reconfiguration cost per tile load in ms");
    cmd->add_option("--hop-cycles", hop_cycles, "extra cycles per element per pass-through tile");
    cmd->add_option("--step-budget", step_budget, "scheduler round limit (0: derived)");
  }

  SimConfig resolve(SimConfig cfg = {}) const {
    if (!config_file.empty()) cfg = sim_config_from_json(read_text(config_file), cfg);
    if (cycle_ns) cfg.cycle_ns = *cycle_ns;
    if (transfer_ns) cfg.transfer_ns_per_word = *transfer_ns;
    if (pr_cost_ms) cfg.pr_cost_ms_per_tile = *pr_cost_ms;
    if (hop_cycles) cfg.hop_cycles_per_element = *hop_cycles;
    if (step_budget) cfg.step_budget = *step_budget;
    cfg.validate();
    return cfg;
  }
};

// ---------------------------------------------------------------------------
// fabric build

struct FabricArgs {
  std::string mesh = "3x3";
  std::string sizing = "row_major";
  std::string config;
  std::string output;
};

int cmd_fabric_build(const FabricArgs& args) {
  OverlayFabric fabric = [&] {
    if (!args.config.empty()) return fabric_from_json(read_text(args.config));
    const auto [rows, cols] = parse_mesh(args.mesh);
    const auto policy = sizing_policy_from_string(args.sizing);
    if (!policy) throw Error(Errc::ParseError, fmt::format("unknown sizing policy '{}'", args.sizing));
    return build_fabric(rows, cols, *policy);
  }();
  fabric.check_invariants();
  const auto text = fabric_to_json(fabric) + "\n";
  if (args.output.empty()) {
    std::cout << text;
  } else {
    write_file(args.output, text);
    std::cerr << fmt::format("wrote {} ({}x{}, {} large tiles)\n", args.output, fabric.rows(), fabric.cols(),
                             fabric.large_tile_count());
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// isa

std::string signature_text(const OpcodeInfo& op) {
  static const std::map<OperandKind, const char*> names{
      {OperandKind::Reg, "reg"},   {OperandKind::Src, "src"},   {OperandKind::Port, "port"},
      {OperandKind::Imm, "imm16"}, {OperandKind::Len, "len24"}, {OperandKind::Addr, "addr16"},
      {OperandKind::Target, "target16"}};
  std::string out;
  for (auto k : op.signature) {
    if (!out.empty()) out += ", ";
    out += names.at(k);
  }
  return out.empty() ? "-" : out;
}

int cmd_isa_list(bool json) {
  std::map<OpCategory, int> counts;
  const auto catalog = isa_catalog();
  if (json) {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& op : catalog) {
      doc.push_back({{"code", static_cast<int>(op.opcode)},
                     {"mnemonic", op.mnemonic},
                     {"category", to_string(op.category)},
                     {"operands", signature_text(op)},
                     {"semantics", op.semantics}});
    }
    std::cout << doc.dump(2) << "\n";
    return kOk;
  }
  std::cout << fmt::format("{:>4}  {:<14} {:<13} {:<24} {}\n", "code", "mnemonic", "category", "operands", "semantics");
  for (const auto& op : catalog) {
    ++counts[op.category];
    std::cout << fmt::format("{:>4}  {:<14} {:<13} {:<24} {}\n", static_cast<int>(op.opcode), op.mnemonic,
                             to_string(op.category), signature_text(op), op.semantics);
  }
  std::cout << fmt::format("{} opcodes: {} {}, {} {}, {} {}, {} {}\n", catalog.size(),
                           to_string(OpCategory::Interconnect), counts[OpCategory::Interconnect],
                           to_string(OpCategory::Branching), counts[OpCategory::Branching],
                           to_string(OpCategory::VectorOp), counts[OpCategory::VectorOp],
                           to_string(OpCategory::MemReg), counts[OpCategory::MemReg]);
  return kOk;
}

int cmd_isa_asm(const std::string& input, const std::string& output) {
  const auto program = assemble(read_text(input));
  std::vector<std::uint32_t> words;
  for (const auto& instr : program) words.push_back(encode(instr));
  const auto image = write_image(words);
  write_file(output, std::string_view(reinterpret_cast<const char*>(image.data()), image.size()));
  std::cerr << fmt::format("wrote {} ({} instructions)\n", output, words.size());
  return kOk;
}

int cmd_isa_disasm(const std::string& input) {
  const auto words = read_image(read_bytes(input));
  std::vector<Instruction> program;
  for (auto w : words) program.push_back(decode(w));
  std::cout << disassemble(program);
  return kOk;
}

// ---------------------------------------------------------------------------
// compile

struct CompileArgs {
  std::string expression;
  std::string file;
  std::string mesh = "3x3";
  std::string fabric_file;
  std::string mode = "dynamic";
  std::size_t n = 2048;
  std::string output = "program";
};

PatternProgram load_program(const CompileArgs& args) {
  if (!args.expression.empty()) return parse_expression(args.expression);
  const auto text = read_text(args.file);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return program_from_json(text);
  return parse_expression(text);
}

std::pair<PlacementMode, int> parse_mode(const std::string& mode) {
  if (mode == "dynamic") return {PlacementMode::Dynamic, 0};
  if (mode.rfind("static:", 0) == 0 && mode.size() == 8 && mode[7] >= '0' && mode[7] <= '9') {
    return {PlacementMode::Static, mode[7] - '0'};
  }
  if (mode == "static") return {PlacementMode::Static, 0};
  throw Error(Errc::ParseError, fmt::format("mode '{}': expected dynamic or static:K", mode));
}

std::string placement_map(const CompiledProgram& prog) {
  std::map<Coord, std::string> cells;
  for (const auto& t : prog.tiles) {
    cells[t.coord] = t.node ? fmt::format("{}#{}", t.op_id, *t.node) : std::string("+");
  }
  for (const auto& [coord, op] : prog.residents) {
    if (!cells.count(coord)) cells[coord] = fmt::format("({})", op.id);
  }
  std::size_t width = 1;
  for (const auto& [c, s] : cells) width = std::max(width, s.size());
  std::string out;
  for (int r = 0; r < prog.rows; ++r) {
    for (int c = 0; c < prog.cols; ++c) {
      const auto it = cells.find({r, c});
      out += fmt::format("{:<{}}", it == cells.end() ? "." : it->second, width + 2);
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
  }
  return out;
}

int cmd_compile(const CompileArgs& args, const LibraryManifest& lib) {
  const auto program = load_program(args);
  OverlayFabric base = [&] {
    if (!args.fabric_file.empty()) return fabric_from_json(read_text(args.fabric_file));
    const auto [rows, cols] = parse_mesh(args.mesh);
    return build_fabric(rows, cols);
  }();
  const auto [mode, scenario] = parse_mode(args.mode);
  CompileOptions options;
  options.mode = mode;
  options.scenario = scenario;
  options.n = args.n;
  const OverlayFabric fabric = mode == PlacementMode::Static ? make_static_overlay(base, lib) : base;
  const auto compiled = compile(program, lib, fabric, options);

  const auto image = write_program_image(compiled);
  write_file(args.output + ".bin", std::string_view(reinterpret_cast<const char*>(image.data()), image.size()));
  write_file(args.output + ".json", program_sidecar_json(compiled) + "\n");

  std::cout << placement_map(compiled);
  std::cout << fmt::format("operators: {}\npass-throughs: {}\n", compiled.graph.nodes.size(),
                           compiled.routes.total_pass_throughs());
  std::cerr << fmt::format("wrote {0}.bin and {0}.json\n", args.output);
  return kOk;
}

// ---------------------------------------------------------------------------
// run

struct RunArgs {
  std::string program;
  std::string image;
  std::string sidecar;
  std::string inputs;
  std::optional<std::uint64_t> random_seed;
  std::string csv;
  SimFlags sim;
};

StreamInputs load_inputs(const std::string& path) {
  StreamInputs out;
  try {
    const auto doc = nlohmann::json::parse(read_text(path));
    if (!doc.is_object()) throw Error(Errc::SchemaError, "inputs must map stream names to arrays");
    for (const auto& [name, values] : doc.items()) out.emplace(name, values.get<std::vector<float>>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaError, fmt::format("{}: {}", path, e.what()));
  }
  return out;
}

int cmd_run(const RunArgs& args) {
  const std::string image_path = args.image.empty() ? args.program + ".bin" : args.image;
  const std::string sidecar_path = args.sidecar.empty() ? args.program + ".json" : args.sidecar;
  if (image_path == ".bin" || sidecar_path == ".json") {
    throw Error(Errc::ParseError, "run needs --program PREFIX or both --image and --sidecar");
  }
  const auto program = load_compiled(read_bytes(image_path), read_text(sidecar_path));
  const StreamInputs inputs = args.inputs.empty()
                                  ? random_streams(program.graph.streams, program.n,
                                                   args.random_seed.value_or(default_seed()))
                                  : load_inputs(args.inputs);
  const auto cfg = args.sim.resolve();
  const auto report = run(target_fabric(program), program, inputs, cfg);
  std::cout << report_to_json(report) << "\n";

  if (!args.csv.empty()) {
    const bool fresh = !fs::exists(args.csv) || fs::file_size(args.csv) == 0;
    std::ofstream out(args.csv, std::ios::app);
    if (!out) throw Error(Errc::IoError, fmt::format("cannot append to {}", args.csv));
    if (fresh) out << csv_header() << "\n";
    const auto target = program.mode == PlacementMode::Dynamic ? std::string("dynamic")
                                                               : fmt::format("static{}", program.scenario);
    out << report_csv_row(target, program.n, report) << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// experiment

struct ExperimentArgs {
  std::string spec;
  std::string csv;
  std::optional<std::size_t> n;
  std::optional<std::uint64_t> seed;
  SimFlags sim;
};

int cmd_experiment(const ExperimentArgs& args, const LibraryManifest& lib) {
  ExperimentSpec spec;
  spec.seed = default_seed();
  if (!args.spec.empty()) spec = experiment_spec_from_json(read_text(args.spec), spec.seed);
  if (args.n) spec.n = *args.n;
  if (args.seed) spec.seed = *args.seed;
  spec.sim = args.sim.resolve(spec.sim);
  spec.validate();

  const auto result = run_experiment(spec, lib);
  const auto csv = experiment_csv(result);
  if (args.csv == "-") {
    std::cout << csv;
  } else {
    std::cout << experiment_table(result);
    if (!args.csv.empty()) {
      write_file(args.csv, csv);
      std::cerr << fmt::format("wrote {}\n", args.csv);
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"overlay-forge: coarse-grained FPGA overlay compiler and simulator"};
  app.require_subcommand(1);
  std::string manifest_path;
  app.add_option("--manifest", manifest_path, "operator library manifest (JSON); default: built-in")
      ->check(CLI::ExistingFile);

  auto* fabric_cmd = app.add_subcommand("fabric", "fabric descriptions");
  fabric_cmd->require_subcommand(1);
  FabricArgs fabric_args;
  auto* build_cmd = fabric_cmd->add_subcommand("build", "build a fabric and print its JSON description");
  build_cmd->add_option("--mesh", fabric_args.mesh, "mesh size RxC")->capture_default_str();
  build_cmd->add_option("--sizing", fabric_args.sizing, "row_major or spread")->capture_default_str();
  build_cmd->add_option("--config", fabric_args.config, "fabric JSON to validate and normalise")
      ->check(CLI::ExistingFile);
  build_cmd->add_option("-o,--output", fabric_args.output, "write JSON here instead of standard output");

  auto* isa_cmd = app.add_subcommand("isa", "instruction set");
  isa_cmd->require_subcommand(1);
  bool isa_json = false;
  auto* list_cmd = isa_cmd->add_subcommand("list", "list every opcode");
  list_cmd->add_flag("--json", isa_json, "machine-readable listing");
  std::string asm_in;
  std::string asm_out = "a.bin";
  auto* asm_cmd = isa_cmd->add_subcommand("asm", "assemble text into a binary image");
  asm_cmd->add_option("input", asm_in, "assembly source")->required()->check(CLI::ExistingFile);
  asm_cmd->add_option("-o,--output", asm_out, "image path")->capture_default_str();
  std::string disasm_in;
  auto* disasm_cmd = isa_cmd->add_subcommand("disasm", "disassemble a binary image");
  disasm_cmd->add_option("input", disasm_in, "image path")->required()->check(CLI::ExistingFile);

  CompileArgs compile_args;
  auto* compile_cmd = app.add_subcommand("compile", "compile a pattern program");
  auto* expr_opt = compile_cmd->add_option("-e,--expr", compile_args.expression, "pattern expression");
  auto* file_opt =
      compile_cmd->add_option("-f,--file", compile_args.file, "program file (JSON tree or expression)")
          ->check(CLI::ExistingFile);
  expr_opt->excludes(file_opt);
  compile_cmd->add_option("--mesh", compile_args.mesh, "mesh size RxC")->capture_default_str();
  compile_cmd->add_option("--fabric", compile_args.fabric_file, "fabric JSON (overrides --mesh)")
      ->check(CLI::ExistingFile);
  compile_cmd->add_option("--mode", compile_args.mode, "dynamic or static:K (K = 0, 1, 2)")->capture_default_str();
  compile_cmd->add_option("-n,--length", compile_args.n, "stream length")->capture_default_str();
  compile_cmd->add_option("-o,--output", compile_args.output, "output prefix (.bin + .json)")->capture_default_str();

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "simulate a compiled program");
  run_cmd->add_option("-p,--program", run_args.program, "program prefix (PREFIX.bin + PREFIX.json)");
  run_cmd->add_option("--image", run_args.image, "binary program image")->check(CLI::ExistingFile);
  run_cmd->add_option("--sidecar", run_args.sidecar, "JSON sidecar")->check(CLI::ExistingFile);
  auto* inputs_opt =
      run_cmd->add_option("--inputs", run_args.inputs, "JSON object of input streams")->check(CLI::ExistingFile);
  auto* random_opt = run_cmd->add_option("--random", run_args.random_seed, "seeded random inputs");
  inputs_opt->excludes(random_opt);
  run_cmd->add_option("--csv", run_args.csv, "append a CSV row to this file");
  run_args.sim.attach(run_cmd);

  ExperimentArgs exp_args;
  auto* exp_cmd = app.add_subcommand("experiment", "static vs dynamic overlay experiment");
  exp_cmd->add_option("spec", exp_args.spec, "experiment spec JSON")->check(CLI::ExistingFile);
  exp_cmd->add_option("--csv", exp_args.csv, "write CSV here ('-' prints CSV instead of the table)");
  exp_cmd->add_option("-n,--length", exp_args.n, "override the stream length");
  exp_cmd->add_option("--seed", exp_args.seed, "override the input seed");
  exp_args.sim.attach(exp_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    const LibraryManifest lib = manifest_path.empty() ? default_library() : load_manifest(read_text(manifest_path));
    validate_manifest(lib);
    if (build_cmd->parsed()) return cmd_fabric_build(fabric_args);
    if (list_cmd->parsed()) return cmd_isa_list(isa_json);
    if (asm_cmd->parsed()) return cmd_isa_asm(asm_in, asm_out);
    if (disasm_cmd->parsed()) return cmd_isa_disasm(disasm_in);
    if (compile_cmd->parsed()) {
      if (compile_args.expression.empty() && compile_args.file.empty()) {
        throw Error(Errc::ParseError, "compile needs -e EXPR or -f FILE");
      }
      return cmd_compile(compile_args, lib);
    }
    if (run_cmd->parsed()) return cmd_run(run_args);
    if (exp_cmd->parsed()) return cmd_experiment(exp_args, lib);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}
