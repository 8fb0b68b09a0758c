#pragma once

#include <stdexcept>
#include <string>

namespace fieldroad {

/// Invalid configuration or parameter value. Maps to CLI exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation (negative density,
/// persistence condition violated, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Base for solver-side failures. Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// The discrete operator lost its M-matrix structure (a power iterate went
/// non-positive). Usually fixed by refining the grid.
class AssemblyRegimeError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Post-processing could not be carried out on the given trajectory.
class DiagnosticsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fieldroad
