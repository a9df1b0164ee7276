#include "lastmeter/error.hpp"

namespace lastmeter {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroDistance: return "ZeroDistance";
    case ErrorCode::NegativeDistance: return "NegativeDistance";
    case ErrorCode::OutOfWindow: return "OutOfWindow";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::GeometryError: return "GeometryError";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::GridTooLarge: return "GridTooLarge";
    case ErrorCode::NoPath: return "NoPath";
    case ErrorCode::UnwalkableEndpoint: return "UnwalkableEndpoint";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::UnreachableDestination: return "UnreachableDestination";
    case ErrorCode::EmptyRoute: return "EmptyRoute";
    case ErrorCode::SessionNotActive: return "SessionNotActive";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::BadAnchor: return "BadAnchor";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::NotAuthor: return "NotAuthor";
    case ErrorCode::PortUnavailable: return "PortUnavailable";
    case ErrorCode::ScenarioLoadError: return "ScenarioLoadError";
    case ErrorCode::UnknownPoi: return "UnknownPoi";
  }
  return "Unknown";
}

}  // namespace lastmeter
