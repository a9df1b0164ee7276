#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lastmeter {

enum class ErrorCode {
  ZeroDistance,
  NegativeDistance,
  OutOfWindow,
  InvalidArgument,
  SchemaError,
  GeometryError,
  DuplicateId,
  GridTooLarge,
  NoPath,
  UnwalkableEndpoint,
  OutOfBounds,
  UnreachableDestination,
  EmptyRoute,
  SessionNotActive,
  EmptyText,
  BadAnchor,
  NotFound,
  NotAuthor,
  PortUnavailable,
  ScenarioLoadError,
  UnknownPoi,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the engine carries a machine-readable code so the
// CLI and the session service can map it to exit codes / wire errors.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lastmeter
