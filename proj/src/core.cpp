#include "wpn/core.hpp"

#include <cstdio>

namespace wpn {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_parameter: return "invalid-parameter";
    case ErrorCode::state_out_of_range: return "state-out-of-range";
    case ErrorCode::not_a_kinetic_function: return "not-a-kinetic-function";
    case ErrorCode::resolution_insufficient: return "resolution-insufficient";
    case ErrorCode::step_size_underflow: return "step-size-underflow";
    case ErrorCode::domain_too_small: return "domain-too-small";
    case ErrorCode::defect_undefined: return "defect-undefined";
    case ErrorCode::invalid_test_function: return "invalid-test-function";
    case ErrorCode::scheme_monotonicity_violation: return "scheme-monotonicity-violation";
    case ErrorCode::grid_mismatch: return "grid-mismatch";
    case ErrorCode::io_error: return "io-error";
    case ErrorCode::usage: return "usage";
  }
  return "unknown";
}

std::string Certificate::to_text() const {
  std::string out;
  char buf[512];
  for (const auto& c : checks) {
    std::snprintf(buf, sizeof buf, "%s: value=%.17g bound=%.17g %s\n", c.name.c_str(), c.value, c.bound,
                  c.pass ? "PASS" : "FAIL");
    out += buf;
  }
  return out;
}

}  // namespace wpn
