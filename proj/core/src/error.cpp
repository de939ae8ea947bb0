#include "ubvm/error.hpp"

namespace ubvm {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::range: return "range";
    case ErrorKind::framing: return "framing";
    case ErrorKind::protocol: return "protocol";
    case ErrorKind::capture_overflow: return "capture-overflow";
    case ErrorKind::insufficient_points: return "insufficient-points";
    case ErrorKind::degenerate_geometry: return "degenerate-geometry";
    case ErrorKind::convergence: return "convergence";
    case ErrorKind::integrity: return "integrity";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace ubvm
