#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "overlay/resources.hpp"

namespace overlay {

enum class Kernel { Add, Sub, Mul, Div, Min, Max, CmpLt, Sqrtf, Sin, Cos, Log, Pass };

std::string_view kernel_name(Kernel k) noexcept;
std::optional<Kernel> kernel_from_name(std::string_view name) noexcept;
int kernel_arity(Kernel k) noexcept;

// Scalar semantics of every kernel, in binary32.  Unary kernels ignore `b`.
// cmp_lt yields 1.0f / 0.0f.  sin, cos and log go through the double-precision
// libm routine and round once to float.
float apply_kernel(Kernel k, float a, float b = 0.0f) noexcept;

// Predicate interpretation of a scalar word.
constexpr bool truthy(float v) noexcept { return v != 0.0f; }

// A "virtual bitstream": what a PR region computes and what it costs.
struct OperatorDescriptor {
  std::string id;
  Kernel kernel = Kernel::Pass;
  int arity = 1;
  ResourceBudget footprint;
  std::uint32_t latency_cycles = 1;
  std::uint32_t initiation_interval = 1;

  friend bool operator==(const OperatorDescriptor&, const OperatorDescriptor&) = default;
};

bool fits(const OperatorDescriptor& op, TileClass cls) noexcept;

struct LibraryManifest {
  std::string version;
  std::vector<OperatorDescriptor> operators;

  const OperatorDescriptor* find(std::string_view id) const noexcept;
  // Exact id match first, then the first operator implementing a kernel of
  // that name.  Pattern programs name kernels; manifests may rename ids.
  const OperatorDescriptor* resolve(std::string_view name) const noexcept;

  friend bool operator==(const LibraryManifest&, const LibraryManifest&) = default;
};

// Built-in library.  Footprints and latencies are model values: small
// arithmetic fits a Small region, sqrtf/sin/cos/log need a Large one.
LibraryManifest default_library();

// Throws Error{DuplicateId | UnplaceableOperator | SchemaError}.
void validate_manifest(const LibraryManifest& manifest);

// JSON: {version, operators:[{id, kernel, arity, dsp, ff, lut, latency, ii}]}
LibraryManifest load_manifest(std::string_view json_text);
std::string dump_manifest(const LibraryManifest& manifest);

}  // namespace overlay
