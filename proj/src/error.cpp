#include "earpipe/error.hpp"

namespace earpipe {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parameter: return "parameter";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Io: return "io";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::Convergence: return "convergence";
  }
  return "unknown";
}

}  // namespace earpipe
