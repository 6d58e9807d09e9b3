#pragma once

#include <stdexcept>
#include <string>

namespace proloc {

// Error codes shared between the C++ core and the C API surface.
enum class ErrorCode : int {
  ok = 0,
  invalid_argument,
  invalid_seed,
  invalid_budget,
  invalid_radius,
  invalid_dimensions,
  network_mismatch,
  unknown_device,
  no_anchors,
  unknown_anchor,
  no_scenarios,
  missing_self_report,
  witness_without_reports,
  config_error,
  io_error,
  parse_error,
  internal_error,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

} // namespace proloc
