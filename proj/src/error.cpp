#include "thoughttree/error.hpp"

namespace thoughttree {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::AnnotationParseError: return "AnnotationParseError";
    case ErrorCode::CacheMiss: return "CacheMiss";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::IntegrityError: return "IntegrityError";
    case ErrorCode::ShapeError: return "ShapeError";
    case ErrorCode::DegenerateDataset: return "DegenerateDataset";
    case ErrorCode::NotTrained: return "NotTrained";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace thoughttree
