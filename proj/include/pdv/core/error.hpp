#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pdv {

enum class Errc {
  invalid_argument,
  decode_error,
  io_error,
  // datastore
  duplicate_stream,
  invalid_stream_id,
  unknown_stream,
  out_of_order_timestamp,
  invalid_range,
  invalid_period,
  // rule / query languages
  syntax_error,
  unbound_head_variable,
  arity_mismatch,
  duplicate_rule,
  unknown_duration_unit,
  duplicate_item,
  // inference
  not_derived,
  // trade-off
  unknown_parameter,
  uncalibrated_parameter,
  unknown_benefit_category,
  invalid_calibration,
  invalid_policy,
  precondition_violation,
  // query engine
  grant_inactive,
  grant_mismatch,
  empty_result_query,
  categorical_stream,
  nonpositive_epsilon,
  // gateway
  unknown_consumer,
  unknown_request,
  unknown_grant,
  invalid_state_transition,
  request_denied,
  out_of_range_rating,
  unauthorized,
  forbidden,
};

/// Stable kebab-case name of an error code, e.g. "out-of-order-timestamp".
std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail);

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

/// An error tied to a position in DSL source text. Line and column are 1-based.
class LocatedError : public Error {
 public:
  LocatedError(Errc code, int line, int column, const std::string& detail);

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

class SyntaxError : public LocatedError {
 public:
  SyntaxError(int line, int column, std::string expected, const std::string& found);

  const std::string& expected() const noexcept { return expected_; }

 private:
  std::string expected_;
};

}  // namespace pdv
