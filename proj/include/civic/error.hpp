#pragma once

#include <stdexcept>
#include <string>

namespace civic {

enum class ErrorKind {
  InvalidInput,
  Parse,
  Infeasible,
  Unsupported,
  Io,
};

const char* to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so the CLI can map it
// to a stable exit code and error prefix.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorKind::InvalidInput, message);
}

}  // namespace civic
