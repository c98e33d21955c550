#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hdsdm {

enum class ErrorKind {
  Dimension,
  Validation,
  Domain,
  Constraint,
  Degenerate,
  Infeasible,
  Specification,
  Numerical,
  Diagnostic,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a machine-readable kind so the
/// CLI can emit a structured error record.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace hdsdm
