#include "pdv/core/error.hpp"

namespace pdv {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::decode_error: return "decode-error";
    case Errc::io_error: return "io-error";
    case Errc::duplicate_stream: return "duplicate-stream";
    case Errc::invalid_stream_id: return "invalid-stream-id";
    case Errc::unknown_stream: return "unknown-stream";
    case Errc::out_of_order_timestamp: return "out-of-order-timestamp";
    case Errc::invalid_range: return "invalid-range";
    case Errc::invalid_period: return "invalid-period";
    case Errc::syntax_error: return "syntax-error";
    case Errc::unbound_head_variable: return "unbound-head-variable";
    case Errc::arity_mismatch: return "arity-mismatch";
    case Errc::duplicate_rule: return "duplicate-rule";
    case Errc::unknown_duration_unit: return "unknown-duration-unit";
    case Errc::duplicate_item: return "duplicate-item";
    case Errc::not_derived: return "not-derived";
    case Errc::unknown_parameter: return "unknown-parameter";
    case Errc::uncalibrated_parameter: return "uncalibrated-parameter";
    case Errc::unknown_benefit_category: return "unknown-benefit-category";
    case Errc::invalid_calibration: return "invalid-calibration";
    case Errc::invalid_policy: return "invalid-policy";
    case Errc::precondition_violation: return "precondition-violation";
    case Errc::grant_inactive: return "grant-inactive";
    case Errc::grant_mismatch: return "grant-mismatch";
    case Errc::empty_result_query: return "empty-result-query";
    case Errc::categorical_stream: return "categorical-stream";
    case Errc::nonpositive_epsilon: return "nonpositive-epsilon";
    case Errc::unknown_consumer: return "unknown-consumer";
    case Errc::unknown_request: return "unknown-request";
    case Errc::unknown_grant: return "unknown-grant";
    case Errc::invalid_state_transition: return "invalid-state-transition";
    case Errc::request_denied: return "request-denied";
    case Errc::out_of_range_rating: return "out-of-range-rating";
    case Errc::unauthorized: return "unauthorized";
    case Errc::forbidden: return "forbidden";
  }
  return "unknown-error";
}

Error::Error(Errc code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + (detail.empty() ? "" : ": " + detail)),
      code_(code),
      detail_(detail) {}

LocatedError::LocatedError(Errc code, int line, int column, const std::string& detail)
    : Error(code, std::to_string(line) + ":" + std::to_string(column) + ": " + detail),
      line_(line),
      column_(column) {}

SyntaxError::SyntaxError(int line, int column, std::string expected, const std::string& found)
    : LocatedError(Errc::syntax_error, line, column, "expected " + expected + ", found " + found),
      expected_(std::move(expected)) {}

}  // namespace pdv
