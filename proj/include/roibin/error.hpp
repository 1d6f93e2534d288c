#ifndef ROIBIN_ERROR_HPP
#define ROIBIN_ERROR_HPP

#include <stdexcept>
#include <string>

namespace roibin {

// Numeric values are shared with the C API status codes in roibin.h.
enum class ErrorCode : int {
  size = 1,
  geometry = 2,
  index = 3,
  config = 4,
  corrupt = 5,
  unsupported_version = 6,
  undefined_ratio = 7,
  tuning = 8,
  io = 9,
  invalid_argument = 10,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace roibin

#endif  // ROIBIN_ERROR_HPP
