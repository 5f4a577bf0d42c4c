#pragma once

#include <stdexcept>
#include <string>

namespace stsvd {

enum class ErrorKind {
  Usage,
  Parse,
  Validation,
  SizeMismatch,
  Dimension,
  Bounds,
  RankTooLarge,
  InsufficientFrames,
  Schedule,
  Placement,
  UndefinedSnr,
  NoSignalSubspace,
  Level,
  Io,
};

/// Every library failure is raised as an Error carrying its kind so the CLI
/// can map it onto an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

const char* to_string(ErrorKind kind) noexcept;

/// 2 usage, 3 validation (any data-level rejection), 4 I/O.
int exit_code(ErrorKind kind) noexcept;

}  // namespace stsvd
