#pragma once

#include <stdexcept>
#include <string>

namespace vis {

/// A precondition of a public operation was violated by the caller.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A proposal could not be fitted (non-PD covariance, non-finite objective).
class FittingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Onion initialization reached its maximum radius without a single failure.
class InitializationError : public std::runtime_error {
 public:
  InitializationError(const std::string& what, double radius_reached)
      : std::runtime_error(what), radius_(radius_reached) {}
  double radius_reached() const noexcept { return radius_; }

 private:
  double radius_;
};

/// The indicator could not be evaluated (external process died, timed out).
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The external simulator replied with something outside the line protocol.
class ProtocolError : public SimulationError {
 public:
  ProtocolError(const std::string& what, std::size_t line)
      : SimulationError(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A non-finite importance weight; indicates a density bug rather than data.
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration. `path` names the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& message)
      : std::runtime_error(path.empty() ? message : path + ": " + message), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace vis
