#include "ocm/errors.hpp"

namespace ocm {

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Usage:
      return 1;
    case ErrorKind::Numeric:
      return 3;
    case ErrorKind::Domain:
    case ErrorKind::Range:
    case ErrorKind::Validation:
    case ErrorKind::Io:
      return 2;
  }
  return 2;
}

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::Range: return "range error";
    case ErrorKind::Numeric: return "numeric failure";
    case ErrorKind::Validation: return "validation failure";
    case ErrorKind::Io: return "i/o error";
    case ErrorKind::Usage: return "usage error";
  }
  return "error";
}

}  // namespace ocm
