#include "conceptscope/error.hpp"

namespace conceptscope {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::io: return "io";
    case ErrorKind::parse: return "parse";
    case ErrorKind::invalid_input: return "invalid_input";
    case ErrorKind::integrity: return "integrity";
    case ErrorKind::mismatch: return "mismatch";
  }
  return "unknown";
}

}  // namespace conceptscope
