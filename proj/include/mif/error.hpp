#pragma once

#include <stdexcept>
#include <string>

namespace mif {

/// Base class for every error raised by the toolkit.  The CLI maps each
/// subclass onto a process exit code.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid or unparseable configuration (exit code 2).
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Numerical or physical failure while simulating (exit code 3).
class SimulationError : public Error {
public:
  using Error::Error;
};

/// Malformed telemetry or inconsistent data (exit code 4).
class DataError : public Error {
public:
  using Error::Error;
};

}  // namespace mif
