#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stylemt {

enum class ErrorKind {
  invalid_argument,
  format_error,
  dimension_mismatch,
  zero_vector,
  overlap_error,
  empty_corpus,
  oov_error,
  transport_error,
  remote_error,
  auth_error,
  empty_completion,
  map_parse_error,
  tokenization_mismatch,
  unknown_style_id,
  fixture_set_mismatch,
  config_error,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::format_error: return "format_error";
    case ErrorKind::dimension_mismatch: return "dimension_mismatch";
    case ErrorKind::zero_vector: return "zero_vector_error";
    case ErrorKind::overlap_error: return "overlap_error";
    case ErrorKind::empty_corpus: return "empty_corpus_error";
    case ErrorKind::oov_error: return "oov_error";
    case ErrorKind::transport_error: return "transport_error";
    case ErrorKind::remote_error: return "remote_error";
    case ErrorKind::auth_error: return "auth_error";
    case ErrorKind::empty_completion: return "empty_completion";
    case ErrorKind::map_parse_error: return "map_parse_error";
    case ErrorKind::tokenization_mismatch: return "tokenization_mismatch";
    case ErrorKind::unknown_style_id: return "unknown_style_id";
    case ErrorKind::fixture_set_mismatch: return "fixture_set_mismatch";
    case ErrorKind::config_error: return "config_error";
  }
  return "unknown";
}

/// Every failure raised by the library. `kind()` is stable and machine-readable;
/// `what()` is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// Failures that originate in an external service rather than in the input.
  bool is_backend_failure() const noexcept {
    return kind_ == ErrorKind::transport_error || kind_ == ErrorKind::remote_error ||
           kind_ == ErrorKind::auth_error || kind_ == ErrorKind::empty_completion;
  }

 private:
  ErrorKind kind_;
};

}  // namespace stylemt
