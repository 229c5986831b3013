#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spatialecon {

enum class ErrorKind {
  Parse,
  Conflict,
  Value,
  InsufficientData,
  Degenerate,
  UnsupportedSize,
  Geometry,
  Referential,
  Format,
  Alignment,
  Convergence,
  Rank,
  Parameter,
  Domain,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every library failure carries the module and operation it came from so the
// CLI can emit a machine-readable error record without re-wrapping.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, std::string operation,
        const std::string& message)
      : std::runtime_error(message),
        kind_(kind),
        module_(std::move(module)),
        operation_(std::move(operation)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }
  const std::string& operation() const noexcept { return operation_; }

 private:
  ErrorKind kind_;
  std::string module_;
  std::string operation_;
};

}  // namespace spatialecon
