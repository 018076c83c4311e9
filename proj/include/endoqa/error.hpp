#pragma once

#include <stdexcept>
#include <string>

namespace endoqa {

enum class ErrorKind { InvalidArgument, Parse, Io, Numerical };

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::Parse: return "parse_error";
    case ErrorKind::Io: return "io_error";
    case ErrorKind::Numerical: return "numerical_error";
  }
  return "unknown";
}

/// Base exception for the toolkit. `kind()` is what the CLI reports in its
/// machine-readable error line.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error invalid_argument(const std::string& what) {
  return Error(ErrorKind::InvalidArgument, what);
}

}  // namespace endoqa
