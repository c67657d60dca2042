#pragma once

#include <stdexcept>
#include <string>

namespace perfit {

// Error taxonomy mirrored by the CLI exit codes.
enum class ErrorKind { Validation, Io, Untestable };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  int exit_code() const noexcept {
    switch (kind_) {
      case ErrorKind::Validation: return 2;
      case ErrorKind::Io: return 3;
      case ErrorKind::Untestable: return 4;
    }
    return 2;
  }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail_validation(const std::string& msg) {
  throw Error(ErrorKind::Validation, msg);
}

[[noreturn]] inline void fail_io(const std::string& msg) {
  throw Error(ErrorKind::Io, msg);
}

[[noreturn]] inline void fail_untestable(const std::string& msg) {
  throw Error(ErrorKind::Untestable, msg);
}

}  // namespace perfit
