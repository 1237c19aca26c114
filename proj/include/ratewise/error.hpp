#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ratewise {

// Coarse failure category; the HTTP layer maps these onto status codes and
// the CLI onto exit codes.
enum class ErrorKind {
  validation,  // malformed input, bad arguments
  not_found,   // unknown session, scheme, or entity
  conflict,    // state precondition violated (e.g. no pending preview)
  internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation: return "validation";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::internal: return "internal";
  }
  return "internal";
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace ratewise
