#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fluidc {

enum class ErrorCode {
  // fchdl
  EmptyCircuit,
  SyntaxError,
  UnknownOperator,
  ArityError,
  BadParameter,
  InvalidNetlist,
  // simulator
  NotAnInput,
  OscillationError,
  InvalidConfig,
  // verifier
  SpecNetUnknown,
  // layout
  PlacementInfeasible,
  // patterns
  NonPositiveDimension,
  AngleOutOfRange,
  SheetTooShort,
  // agents
  TransportError,
  MalformedToolCall,
  PhaseOrderViolation,
  NoJsonFound,
  SchemaMismatch,
  JsonExtractionFailed,
  ToolError,
  MissingDocument,
  // server / io
  NotFound,
  BadRequest,
  Conflict,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Typed failure raised by every module. `offset` is a byte offset into the
/// source text for parse errors.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> offset = std::nullopt)
      : std::runtime_error(message), code_(code), offset_(offset) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> offset() const noexcept { return offset_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> offset_;
};

}  // namespace fluidc
