#include "overlay/oplib.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "overlay/error.hpp"

namespace overlay {
namespace {

struct KernelInfo {
  Kernel kernel;
  std::string_view name;
  int arity;
};

constexpr std::array<KernelInfo, 12> kKernels{{
    {Kernel::Add, "add", 2},
    {Kernel::Sub, "sub", 2},
    {Kernel::Mul, "mul", 2},
    {Kernel::Div, "div", 2},
    {Kernel::Min, "min", 2},
    {Kernel::Max, "max", 2},
    {Kernel::CmpLt, "cmp_lt", 2},
    {Kernel::Sqrtf, "sqrtf", 1},
    {Kernel::Sin, "sin", 1},
    {Kernel::Cos, "cos", 1},
    {Kernel::Log, "log", 1},
    {Kernel::Pass, "pass", 1},
}};

const KernelInfo& kernel_info(Kernel k) noexcept { return kKernels[static_cast<std::size_t>(k)]; }

std::uint32_t get_count(const nlohmann::json& entry, const char* key) {
  const auto& v = entry.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0 ||
      v.get<std::int64_t>() > std::int64_t{UINT32_MAX}) {
    throw Error(Errc::SchemaError, fmt::format("'{}' must be a non-negative integer", key));
  }
  return static_cast<std::uint32_t>(v.get<std::int64_t>());
}

OperatorDescriptor make_op(Kernel k, ResourceBudget footprint, std::uint32_t latency) {
  return OperatorDescriptor{std::string(kernel_name(k)), k, kernel_arity(k), footprint, latency, 1};
}

}  // namespace

std::string_view kernel_name(Kernel k) noexcept { return kernel_info(k).name; }

std::optional<Kernel> kernel_from_name(std::string_view name) noexcept {
  for (const auto& info : kKernels) {
    if (info.name == name) return info.kernel;
  }
  return std::nullopt;
}

int kernel_arity(Kernel k) noexcept { return kernel_info(k).arity; }

float apply_kernel(Kernel k, float a, float b) noexcept {
  switch (k) {
    case Kernel::Add: return a + b;
    case Kernel::Sub: return a - b;
    case Kernel::Mul: return a * b;
    case Kernel::Div: return a / b;
    case Kernel::Min: return b < a ? b : a;
    case Kernel::Max: return a < b ? b : a;
    case Kernel::CmpLt: return a < b ? 1.0f : 0.0f;
    case Kernel::Sqrtf: return std::sqrt(a);
    case Kernel::Sin: return static_cast<float>(std::sin(static_cast<double>(a)));
    case Kernel::Cos: return static_cast<float>(std::cos(static_cast<double>(a)));
    case Kernel::Log: return static_cast<float>(std::log(static_cast<double>(a)));
    case Kernel::Pass: return a;
  }
  return a;
}

bool fits(const OperatorDescriptor& op, TileClass cls) noexcept {
  return op.footprint.fits_within(budget_of(cls));
}

const OperatorDescriptor* LibraryManifest::find(std::string_view id) const noexcept {
  for (const auto& op : operators) {
    if (op.id == id) return &op;
  }
  return nullptr;
}

const OperatorDescriptor* LibraryManifest::resolve(std::string_view name) const noexcept {
  if (const auto* op = find(name)) return op;
  const auto k = kernel_from_name(name);
  if (!k) return nullptr;
  for (const auto& op : operators) {
    if (op.kernel == *k) return &op;
  }
  return nullptr;
}

LibraryManifest default_library() {
  constexpr ResourceBudget kSimple{2, 120, 200};
  constexpr ResourceBudget kMul{3, 140, 250};
  constexpr ResourceBudget kDiv{4, 150, 260};
  constexpr ResourceBudget kTranscendental{8, 900, 1200};

  LibraryManifest lib;
  lib.version = "model-1";
  lib.operators = {
      make_op(Kernel::Add, kSimple, 2),
      make_op(Kernel::Sub, kSimple, 2),
      make_op(Kernel::Mul, kMul, 3),
      make_op(Kernel::Div, kDiv, 8),
      make_op(Kernel::Min, kSimple, 2),
      make_op(Kernel::Max, kSimple, 2),
      make_op(Kernel::CmpLt, kSimple, 2),
      make_op(Kernel::Sqrtf, kTranscendental, 16),
      make_op(Kernel::Sin, kTranscendental, 16),
      make_op(Kernel::Cos, kTranscendental, 16),
      make_op(Kernel::Log, kTranscendental, 16),
      make_op(Kernel::Pass, kSimple, 1),
  };
  return lib;
}

void validate_manifest(const LibraryManifest& manifest) {
  std::set<std::string, std::less<>> seen;
  for (const auto& op : manifest.operators) {
    if (op.id.empty()) throw Error(Errc::SchemaError, "operator with empty id");
    if (!seen.insert(op.id).second) throw Error(Errc::DuplicateId, op.id);
    if (op.arity != kernel_arity(op.kernel)) {
      throw Error(Errc::SchemaError,
                  fmt::format("{}: arity {} does not match kernel {} (arity {})", op.id, op.arity,
                              kernel_name(op.kernel), kernel_arity(op.kernel)));
    }
    if (op.latency_cycles < 1 || op.initiation_interval < 1) {
      throw Error(Errc::SchemaError, fmt::format("{}: latency and ii must be >= 1", op.id));
    }
    if (op.initiation_interval > op.latency_cycles) {
      throw Error(Errc::SchemaError, fmt::format("{}: ii exceeds latency", op.id));
    }
    if (!fits(op, TileClass::Large) && !fits(op, TileClass::Small)) {
      throw Error(Errc::UnplaceableOperator, op.id);
    }
  }
}

LibraryManifest load_manifest(std::string_view json_text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::SchemaError, e.what());
  }

  LibraryManifest manifest;
  try {
    if (!doc.is_object()) throw Error(Errc::SchemaError, "manifest must be an object");
    manifest.version = doc.value("version", std::string{});
    const auto& ops = doc.at("operators");
    if (!ops.is_array()) throw Error(Errc::SchemaError, "operators must be an array");
    for (const auto& entry : ops) {
      OperatorDescriptor op;
      op.id = entry.at("id").get<std::string>();
      const auto kernel = entry.at("kernel").get<std::string>();
      const auto k = kernel_from_name(kernel);
      if (!k) throw Error(Errc::UnknownKernel, fmt::format("{} (kernel '{}')", op.id, kernel));
      op.kernel = *k;
      op.arity = entry.value("arity", kernel_arity(*k));
      op.footprint.dsp = get_count(entry, "dsp");
      op.footprint.ff = get_count(entry, "ff");
      op.footprint.lut = get_count(entry, "lut");
      op.latency_cycles = get_count(entry, "latency");
      op.initiation_interval = get_count(entry, "ii");
      manifest.operators.push_back(std::move(op));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaError, e.what());
  }
  validate_manifest(manifest);
  return manifest;
}

std::string dump_manifest(const LibraryManifest& manifest) {
  nlohmann::json ops = nlohmann::json::array();
  for (const auto& op : manifest.operators) {
    ops.push_back({{"id", op.id},
                   {"kernel", kernel_name(op.kernel)},
                   {"arity", op.arity},
                   {"dsp", op.footprint.dsp},
                   {"ff", op.footprint.ff},
                   {"lut", op.footprint.lut},
                   {"latency", op.latency_cycles},
                   {"ii", op.initiation_interval}});
  }
  nlohmann::json doc = {{"version", manifest.version}, {"operators", std::move(ops)}};
  return doc.dump(2);
}

}  // namespace overlay
