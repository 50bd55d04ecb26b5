#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace earpipe {

enum class ErrorKind {
  Parameter,   // caller passed an out-of-contract argument
  Parse,       // malformed file or text
  Io,          // filesystem failure
  Degenerate,  // input is legal but admits no meaningful result
  Convergence,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_parameter(const std::string& what) {
  throw Error(ErrorKind::Parameter, what);
}

[[noreturn]] inline void throw_parse(const std::string& what) {
  throw Error(ErrorKind::Parse, what);
}

[[noreturn]] inline void throw_degenerate(const std::string& what) {
  throw Error(ErrorKind::Degenerate, what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) throw_parameter(what);
}

}  // namespace earpipe
