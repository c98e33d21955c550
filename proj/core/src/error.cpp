#include "hdsdm/error.hpp"

namespace hdsdm {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Constraint: return "constraint";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::Infeasible: return "infeasible";
    case ErrorKind::Specification: return "specification";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::Diagnostic: return "diagnostic";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace hdsdm
