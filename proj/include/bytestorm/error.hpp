#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bytestorm {

/// Failure categories. The CLI maps each one to a distinct exit status.
enum class ErrorKind {
  InvalidArgument,
  DimensionMismatch,
  OutOfRange,
  Degenerate,
  Io,
  Config,
  UndefinedMetric,
  Numeric,
  UnknownCommand,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace bytestorm
