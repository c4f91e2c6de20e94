#pragma once

#include <stdexcept>
#include <string>

namespace fiddle {

enum class ErrorCode {
  InvalidArgument = 1,
  Parse = 2,
  Dimension = 3,
  DegenerateData = 4,
  Io = 5,
  NonFinite = 6,
  Internal = 7,
};

// All recoverable failures in the core are reported as Error; the C API
// boundary maps ErrorCode onto fiddle_status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool cond, ErrorCode code, const std::string& message) {
  if (!cond) fail(code, message);
}

}  // namespace fiddle
