#include "fluidc/error.hpp"

namespace fluidc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyCircuit: return "EmptyCircuit";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnknownOperator: return "UnknownOperator";
    case ErrorCode::ArityError: return "ArityError";
    case ErrorCode::BadParameter: return "BadParameter";
    case ErrorCode::InvalidNetlist: return "InvalidNetlist";
    case ErrorCode::NotAnInput: return "NotAnInput";
    case ErrorCode::OscillationError: return "OscillationError";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::SpecNetUnknown: return "SpecNetUnknown";
    case ErrorCode::PlacementInfeasible: return "PlacementInfeasible";
    case ErrorCode::NonPositiveDimension: return "NonPositiveDimension";
    case ErrorCode::AngleOutOfRange: return "AngleOutOfRange";
    case ErrorCode::SheetTooShort: return "SheetTooShort";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::MalformedToolCall: return "MalformedToolCall";
    case ErrorCode::PhaseOrderViolation: return "PhaseOrderViolation";
    case ErrorCode::NoJsonFound: return "NoJsonFound";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::JsonExtractionFailed: return "JsonExtractionFailed";
    case ErrorCode::ToolError: return "ToolError";
    case ErrorCode::MissingDocument: return "MissingDocument";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::BadRequest: return "BadRequest";
    case ErrorCode::Conflict: return "Conflict";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace fluidc
