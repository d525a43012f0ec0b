#pragma once

#include <stdexcept>
#include <string>

namespace openad {

/// Failure category. The CLI maps these onto its exit codes.
enum class ErrorKind {
  kUsage,    // bad arguments, configuration, shape mismatch
  kData,     // malformed or inconsistent files and datasets
  kNumeric,  // non-finite values during computation
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_usage(const std::string& message) {
  throw Error(ErrorKind::kUsage, message);
}
[[noreturn]] inline void throw_data(const std::string& message) {
  throw Error(ErrorKind::kData, message);
}
[[noreturn]] inline void throw_numeric(const std::string& message) {
  throw Error(ErrorKind::kNumeric, message);
}

}  // namespace openad
