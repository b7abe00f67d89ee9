#pragma once

#include <stdexcept>
#include <string>

namespace hprobe {

enum class ErrorKind {
  validation,  // bad input, schema, range or domain violations
  geometry,    // layouts that do not fit or overlap
  numerical,   // instability, non-convergence, ill-conditioning
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

class GeometryError : public Error {
 public:
  explicit GeometryError(const std::string& what) : Error(ErrorKind::geometry, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

// Throws ValidationError unless lo <= value <= hi.
void require_in_range(double value, double lo, double hi, const std::string& name);

}  // namespace hprobe
