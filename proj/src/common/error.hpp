#pragma once

#include <stdexcept>
#include <string>

namespace inttravel {

// Mirrors the status codes of the C API (see include/inttravel/inttravel.h).
enum class ErrorCode {
  kInvalidArgument = 1,
  kShape = 2,
  kNonFinite = 3,
  kParse = 4,
  kIo = 5,
  kValidation = 6,
  kVersion = 7,
  kInternal = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

const char* error_code_name(ErrorCode code);

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace inttravel
