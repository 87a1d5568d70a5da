#pragma once

#include <stdexcept>
#include <string>

namespace thoughttree {

enum class ErrorCode {
  EmptyInput,
  AnnotationParseError,
  CacheMiss,
  TransportError,
  IntegrityError,
  ShapeError,
  DegenerateDataset,
  NotTrained,
  ParseError,
  ConfigError,
  IoError,
};

const char* to_string(ErrorCode code) noexcept;

// Base error for everything the library throws. The code is stable and is
// what the CLI reports in its machine-readable error line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Carries the raw model output that failed to parse.
class AnnotationParseError : public Error {
 public:
  AnnotationParseError(const std::string& message, std::string raw_text)
      : Error(ErrorCode::AnnotationParseError, message),
        raw_text_(std::move(raw_text)) {}

  const std::string& raw_text() const noexcept { return raw_text_; }

 private:
  std::string raw_text_;
};

}  // namespace thoughttree
