#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace conceptscope {

enum class ErrorKind {
  io,             // file missing, unreadable or unwritable
  parse,          // malformed input record or file
  invalid_input,  // precondition violated by the caller's data
  integrity,      // corrupted or truncated persisted data
  mismatch,       // inputs that must agree do not (corpora, lengths, concept sets)
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type raised by the library. The kind is stable and is
/// what the CLI reports in its machine-readable error object.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace conceptscope
