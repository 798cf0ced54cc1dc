#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ossa {

enum class ErrorCode {
  empty_label,
  parse_error,
  schema_error,
  io_error,
  invalid_config,
  incompatible_pair,
  leftover_not_defaultable,
  no_structured_content,
  malformed_block,
  missing_exemplars,
  auth_error,
  rate_limited,
  timeout,
  transport_error,
  incompatible_input,
  backend_error,
  policy_exhausted,
  not_ambiguous,
  unrecognized_answer,
  empty_scene,
  no_runs,
  bind_error,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::empty_label: return "empty_label";
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::schema_error: return "schema_error";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::invalid_config: return "invalid_config";
    case ErrorCode::incompatible_pair: return "incompatible_pair";
    case ErrorCode::leftover_not_defaultable: return "leftover_not_defaultable";
    case ErrorCode::no_structured_content: return "no_structured_content";
    case ErrorCode::malformed_block: return "malformed_block";
    case ErrorCode::missing_exemplars: return "missing_exemplars";
    case ErrorCode::auth_error: return "auth_error";
    case ErrorCode::rate_limited: return "rate_limited";
    case ErrorCode::timeout: return "timeout";
    case ErrorCode::transport_error: return "transport_error";
    case ErrorCode::incompatible_input: return "incompatible_input";
    case ErrorCode::backend_error: return "backend_error";
    case ErrorCode::policy_exhausted: return "policy_exhausted";
    case ErrorCode::not_ambiguous: return "not_ambiguous";
    case ErrorCode::unrecognized_answer: return "unrecognized_answer";
    case ErrorCode::empty_scene: return "empty_scene";
    case ErrorCode::no_runs: return "no_runs";
    case ErrorCode::bind_error: return "bind_error";
  }
  return "unknown";
}

// Every recoverable failure in the library is reported as an Error carrying
// a code the caller can switch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // Text without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace ossa
