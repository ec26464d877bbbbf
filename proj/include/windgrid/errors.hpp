#pragma once

#include <stdexcept>
#include <string>

namespace windgrid {

// Base class for every error raised by the library. The CLI maps
// ConfigError to exit code 2 and every other Error to exit code 3.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

class DimensionMismatch : public Error {
public:
  using Error::Error;
};

class NoConvergence : public Error {
public:
  using Error::Error;
};

class SingularJacobian : public Error {
public:
  using Error::Error;
};

class SingularBlock : public Error {
public:
  using Error::Error;
};

class SingularVoltage : public Error {
public:
  using Error::Error;
};

class NonphysicalState : public Error {
public:
  using Error::Error;
};

class NotStabilizable : public Error {
public:
  using Error::Error;
};

class NotDetectable : public Error {
public:
  using Error::Error;
};

class ControllerRejected : public Error {
public:
  using Error::Error;
};

// Raised by the integrator; carries the simulation time of the failure.
class SimulationError : public Error {
public:
  SimulationError(double t, const std::string& what)
      : Error("t=" + std::to_string(t) + " s: " + what), time_(t) {}
  double time() const { return time_; }

private:
  double time_;
};

}  // namespace windgrid
