#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace sfslide {

enum class ErrorKind {
  // configuration / modelling errors
  InvalidArgument,
  DimensionMismatch,
  SyntaxError,
  UnknownIdentifier,
  IndexOutOfRange,
  ConfigError,
  // numerical failures
  NonFinite,
  SingularGy,
  SingularJacobian,
  NoConvergence,
  OffManifold,
  AssumptionViolated,
  DegenerateSliding,
  NoRoot,
  TangencyAtStart,
  NotEntering,
  PreconditionH0Plus,
  NotScalarFast,
  NoSignChange,
  UnstableFixedPoint,
  TimeCap,
  StepUnderflow,
  EventLoop,
};

std::string_view to_string(ErrorKind kind);

/// True for errors caused by the user's input rather than by a numerical failure.
bool is_config_error(ErrorKind kind);

/// Library error. `details` carries machine-readable context (offsets,
/// residuals, scan tables) that the CLI forwards verbatim.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, nlohmann::json details = nlohmann::json::object())
      : std::runtime_error(message), kind_(kind), details_(std::move(details)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const nlohmann::json& details() const noexcept { return details_; }

  nlohmann::json to_json() const {
    return {{"error", std::string(to_string(kind_))}, {"message", what()}, {"details", details_}};
  }

 private:
  ErrorKind kind_;
  nlohmann::json details_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::UnknownIdentifier: return "UnknownIdentifier";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::SingularGy: return "SingularGy";
    case ErrorKind::SingularJacobian: return "SingularJacobian";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::OffManifold: return "OffManifold";
    case ErrorKind::AssumptionViolated: return "AssumptionViolated";
    case ErrorKind::DegenerateSliding: return "DegenerateSliding";
    case ErrorKind::NoRoot: return "NoRoot";
    case ErrorKind::TangencyAtStart: return "TangencyAtStart";
    case ErrorKind::NotEntering: return "NotEntering";
    case ErrorKind::PreconditionH0Plus: return "PreconditionH0Plus";
    case ErrorKind::NotScalarFast: return "NotScalarFast";
    case ErrorKind::NoSignChange: return "NoSignChange";
    case ErrorKind::UnstableFixedPoint: return "UnstableFixedPoint";
    case ErrorKind::TimeCap: return "TimeCap";
    case ErrorKind::StepUnderflow: return "StepUnderflow";
    case ErrorKind::EventLoop: return "EventLoop";
  }
  return "Unknown";
}

inline bool is_config_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::SyntaxError:
    case ErrorKind::UnknownIdentifier:
    case ErrorKind::IndexOutOfRange:
    case ErrorKind::ConfigError:
      return true;
    default:
      return false;
  }
}

}  // namespace sfslide
