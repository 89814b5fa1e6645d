#pragma once

#include <stdexcept>
#include <string>

namespace ocm {

enum class ErrorKind {
  Domain,      // argument outside the model's domain
  Range,       // lookup outside tabulated data
  Numeric,     // solver / integrator failure
  Validation,  // constraint or schema violation
  Io,          // file read/write or parse failure
  Usage,       // command-line misuse
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

// Process exit code for an error kind: 1 usage, 2 validation, 3 numeric.
int exit_code_for(ErrorKind kind) noexcept;

const char* to_string(ErrorKind kind) noexcept;

}  // namespace ocm
