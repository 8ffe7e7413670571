#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace overlay {

// Every failure the library reports carries one of these codes so callers
// (and the CLI's exit-status mapping) can branch without parsing messages.
enum class Errc {
  // fabric
  InvalidDimensions,
  ResourceOverflow,
  UnknownCoordinate,
  IllegalBypass,
  BoundaryViolation,
  CapacityExceeded,
  // isa
  SignatureMismatch,
  IllegalOpcode,
  MalformedOperand,
  ParseError,
  UnknownMnemonic,
  // oplib
  DuplicateId,
  UnplaceableOperator,
  UnknownKernel,
  SchemaError,
  // jit
  ArityMismatch,
  TypeMismatch,
  InsufficientTiles,
  NoFeasibleTile,
  KernelNotResident,
  BadScenario,
  PortConflict,
  EncodingError,
  // sim
  StreamLengthMismatch,
  UnloadedTile,
  NonTerminating,
  InvalidConfig,
  // plumbing
  IoError,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace overlay
