#include "crossdiff/error.hpp"

namespace crossdiff {

const char* to_string(Errc code) {
  switch (code) {
    case Errc::NegativeDensity: return "NegativeDensity";
    case Errc::NonIntegrableKappa: return "NonIntegrableKappa";
    case Errc::InvalidEnergy: return "InvalidEnergy";
    case Errc::InvalidReaction: return "InvalidReaction";
    case Errc::InvalidGrid: return "InvalidGrid";
    case Errc::ZeroMass: return "ZeroMass";
    case Errc::MassMismatch: return "MassMismatch";
    case Errc::DegenerateParcel: return "DegenerateParcel";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::NonFiniteState: return "NonFiniteState";
    case Errc::InvariantViolation: return "InvariantViolation";
    case Errc::InsufficientSnapshots: return "InsufficientSnapshots";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::CflViolation: return "CflViolation";
    case Errc::ConfigError: return "ConfigError";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

ConfigError::ConfigError(std::string key, int line, const std::string& message)
    : Error(Errc::ConfigError,
            (line > 0 ? "line " + std::to_string(line) + ": " : std::string()) +
                (key.empty() ? std::string() : "[" + key + "] ") + message),
      key_(std::move(key)),
      line_(line) {}

}  // namespace crossdiff
