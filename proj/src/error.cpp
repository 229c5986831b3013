#include "spatialecon/error.hpp"

namespace spatialecon {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Conflict: return "conflict";
    case ErrorKind::Value: return "value";
    case ErrorKind::InsufficientData: return "insufficient_data";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::UnsupportedSize: return "unsupported_size";
    case ErrorKind::Geometry: return "geometry";
    case ErrorKind::Referential: return "referential";
    case ErrorKind::Format: return "format";
    case ErrorKind::Alignment: return "alignment";
    case ErrorKind::Convergence: return "convergence";
    case ErrorKind::Rank: return "rank";
    case ErrorKind::Parameter: return "parameter";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace spatialecon
