#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pdv/core/json.hpp"
#include "pdv/core/time.hpp"
#include "pdv/core/types.hpp"
#include "pdv/store/datastore.hpp"

namespace pdv::query {

struct Query {
  std::vector<std::string> items;
  Timestamp from{};
  Timestamp to{};
  /// Unset means the coarsest native period among the items.
  std::optional<Duration> sample_period;
  std::optional<double> noise_epsilon;
  std::optional<std::string> purpose;
  bool operator==(const Query&) const = default;
};

/// Parses
///
///     query := "GET" items "RANGE" ts ".." ts ["SAMPLE" dur] ["NOISE" "eps=" num] ["PURPOSE" string]
///     items := path ("," path)*
///
/// Throws SyntaxError, or Error with unknown-duration-unit, invalid-range,
/// duplicate-item, invalid-period or nonpositive-epsilon.
Query parse_query(std::string_view text);

/// Canonical text; parse_query(print_query(q)) == q.
std::string print_query(const Query& q);

/// The requested period, or the coarsest native period among the items.
/// Throws unknown-stream.
Duration effective_period(const Query& q, const std::vector<Stream>& streams);

enum class GrantStatus { active, suspended, revoked };
std::string_view to_string(GrantStatus s);
GrantStatus parse_grant_status(std::string_view s);

struct Grant {
  std::string id;
  std::string consumer_id;
  Query query;
  std::vector<std::string> allowed_items;
  Duration sample_period{0};
  std::optional<double> noise_epsilon;
  std::optional<Timestamp> expiry;
  GrantStatus status = GrantStatus::active;
  bool operator==(const Grant&) const = default;
};

/// Restricts `q` to what `grant` allows: items intersected with the allowed
/// ones, period raised to the granted one, the grant's noise applied.
/// Throws grant-inactive (not active, or expired at `now`), grant-mismatch
/// (items or range outside the grant) or empty-result-query.
Query rewrite(const Query& q, const Grant& grant, std::optional<Timestamp> now = std::nullopt);

struct ExecOptions {
  /// Per-stream cap on the noise sensitivity.
  std::map<std::string, double> value_bounds;
  std::optional<std::uint64_t> seed;
};

/// Per item: range, downsample to the query period, then noise when the
/// query carries an epsilon.
std::vector<store::ResultSet> execute(const Query& q, const store::DataStore& store, const ExecOptions& options = {});

/// Adds independent Laplace(value_sensitivity / epsilon) noise to every value.
/// Throws categorical-stream or nonpositive-epsilon.
store::ResultSet apply_noise(const store::ResultSet& result, double epsilon, double value_sensitivity,
                             std::optional<std::uint64_t> seed = std::nullopt);

/// max - min of the values, capped by `bound`; falls back to `bound` (or 1)
/// when every value is equal.
double value_sensitivity(const store::ResultSet& result, std::optional<double> bound);

void to_json(Json& j, const Query& q);
void from_json(const Json& j, Query& q);
void to_json(Json& j, const Grant& g);
void from_json(const Json& j, Grant& g);

}  // namespace pdv::query
