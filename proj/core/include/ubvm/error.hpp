#pragma once

#include <stdexcept>
#include <string>

namespace ubvm {

enum class ErrorKind {
  parameter,
  range,
  framing,
  protocol,
  capture_overflow,
  insufficient_points,
  degenerate_geometry,
  convergence,
  integrity,
  config,
  io,
};

const char* to_string(ErrorKind kind) noexcept;

// Base of every error the library throws. Callers that only care about the
// category can switch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define UBVM_DEFINE_ERROR(Name, Kind)                                   \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  }

UBVM_DEFINE_ERROR(ParameterError, parameter);
UBVM_DEFINE_ERROR(RangeError, range);
UBVM_DEFINE_ERROR(FramingError, framing);
UBVM_DEFINE_ERROR(ProtocolError, protocol);
UBVM_DEFINE_ERROR(InsufficientPointsError, insufficient_points);
UBVM_DEFINE_ERROR(DegenerateGeometryError, degenerate_geometry);
UBVM_DEFINE_ERROR(ConvergenceError, convergence);
UBVM_DEFINE_ERROR(IntegrityError, integrity);
UBVM_DEFINE_ERROR(ConfigError, config);
UBVM_DEFINE_ERROR(IoError, io);

#undef UBVM_DEFINE_ERROR

}  // namespace ubvm
