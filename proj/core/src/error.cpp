#include "overlay/error.hpp"

namespace overlay {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidDimensions: return "InvalidDimensions";
    case Errc::ResourceOverflow: return "ResourceOverflow";
    case Errc::UnknownCoordinate: return "UnknownCoordinate";
    case Errc::IllegalBypass: return "IllegalBypass";
    case Errc::BoundaryViolation: return "BoundaryViolation";
    case Errc::CapacityExceeded: return "CapacityExceeded";
    case Errc::SignatureMismatch: return "SignatureMismatch";
    case Errc::IllegalOpcode: return "IllegalOpcode";
    case Errc::MalformedOperand: return "MalformedOperand";
    case Errc::ParseError: return "ParseError";
    case Errc::UnknownMnemonic: return "UnknownMnemonic";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::UnplaceableOperator: return "UnplaceableOperator";
    case Errc::UnknownKernel: return "UnknownKernel";
    case Errc::SchemaError: return "SchemaError";
    case Errc::ArityMismatch: return "ArityMismatch";
    case Errc::TypeMismatch: return "TypeMismatch";
    case Errc::InsufficientTiles: return "InsufficientTiles";
    case Errc::NoFeasibleTile: return "NoFeasibleTile";
    case Errc::KernelNotResident: return "KernelNotResident";
    case Errc::BadScenario: return "BadScenario";
    case Errc::PortConflict: return "PortConflict";
    case Errc::EncodingError: return "EncodingError";
    case Errc::StreamLengthMismatch: return "StreamLengthMismatch";
    case Errc::UnloadedTile: return "UnloadedTile";
    case Errc::NonTerminating: return "NonTerminating";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& detail)
    : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code) {}

}  // namespace overlay
