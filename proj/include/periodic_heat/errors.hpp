#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace periodic_heat {

enum class ErrorKind { parameter, validation, format, solver, resource };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& module, const std::string& what)
      : std::runtime_error(module + ": " + what), kind_(kind), module_(module) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }

 private:
  ErrorKind kind_;
  std::string module_;
};

/// A builder or operation received an out-of-range argument.
class ParameterError : public Error {
 public:
  ParameterError(const std::string& module, const std::string& parameter, const std::string& what)
      : Error(ErrorKind::parameter, module, "parameter '" + parameter + "': " + what),
        parameter_(parameter) {}
  const std::string& parameter() const noexcept { return parameter_; }

 private:
  std::string parameter_;
};

/// The complex violates a structural or topological invariant.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& module, const std::string& what)
      : Error(ErrorKind::validation, module, what) {}
};

/// Malformed complex file; carries the 1-based line number (0 when not line-specific).
class FormatError : public Error {
 public:
  FormatError(std::size_t line, const std::string& what)
      : Error(ErrorKind::format, "periodic_complex",
              (line ? "line " + std::to_string(line) + ": " : std::string()) + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class SolverError : public Error {
 public:
  SolverError(const std::string& module, const std::string& what, double residual = 0.0)
      : Error(ErrorKind::solver, module, what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class ResourceError : public Error {
 public:
  ResourceError(const std::string& module, const std::string& what)
      : Error(ErrorKind::resource, module, what) {}
};

}  // namespace periodic_heat
