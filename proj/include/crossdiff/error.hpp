#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace crossdiff {

using Vector = Eigen::VectorXd;

enum class Errc {
  NegativeDensity,
  NonIntegrableKappa,
  InvalidEnergy,
  InvalidReaction,
  InvalidGrid,
  ZeroMass,
  MassMismatch,
  DegenerateParcel,
  NoConvergence,
  NonFiniteState,
  InvariantViolation,
  InsufficientSnapshots,
  OutOfRange,
  CflViolation,
  ConfigError,
  InvalidArgument,
  Io,
};

const char* to_string(Errc code);

/// Base error for the library. Operations throw a plain `Error` unless the
/// failure carries a payload (see `NoConvergence`, `InvariantViolation`,
/// `ConfigError`).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string key, int line, const std::string& message);
  const std::string& key() const noexcept { return key_; }
  int line() const noexcept { return line_; }

 private:
  std::string key_;
  int line_;
};

}  // namespace crossdiff
