#include "stsvd/error.hpp"

namespace stsvd {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Usage: return "usage error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::SizeMismatch: return "size mismatch";
    case ErrorKind::Dimension: return "dimension error";
    case ErrorKind::Bounds: return "bounds error";
    case ErrorKind::RankTooLarge: return "rank too large";
    case ErrorKind::InsufficientFrames: return "insufficient frames";
    case ErrorKind::Schedule: return "schedule error";
    case ErrorKind::Placement: return "placement error";
    case ErrorKind::UndefinedSnr: return "undefined SNR";
    case ErrorKind::NoSignalSubspace: return "no signal subspace";
    case ErrorKind::Level: return "level error";
    case ErrorKind::Io: return "I/O error";
  }
  return "error";
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Usage: return 2;
    case ErrorKind::Io: return 4;
    default: return 3;
  }
}

}  // namespace stsvd
