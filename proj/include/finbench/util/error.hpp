#pragma once

#include <stdexcept>
#include <string>

namespace finbench {

enum class Errc {
  ParseError,
  DuplicateKey,
  EmptyDataset,
  UnknownIndicator,
  InsufficientHistory,
  InsufficientData,
  DimensionMismatch,
  InvalidArgument,
  ProtocolViolation,
  UndefinedMetric,
  ConfigError,
  IoError,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace finbench
