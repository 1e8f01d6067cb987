#include "zerolog/error.hpp"

namespace zerolog {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Input: return "input error";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Format: return "format error";
    case ErrorKind::Numeric: return "numeric error";
    case ErrorKind::DegenerateLine: return "degenerate line";
    case ErrorKind::EmptyInput: return "empty input";
    case ErrorKind::Join: return "join error";
  }
  return "error";
}

}  // namespace zerolog
